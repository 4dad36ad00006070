#pragma once

#include <cstdint>
#include <random>

namespace sgflow::detail {

// mt19937_64 is bit-exact across standard libraries; the distributions in
// <random> are not, so the conversion to [0, 1) is done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double symmetric() { return 2.0 * uniform() - 1.0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sgflow::detail
