#include "sgflow/ginzburg_landau.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "random.hpp"
#include "sgflow/error.hpp"

namespace sgflow {

const char* to_string(GLInit init) noexcept {
  switch (init) {
    case GLInit::uniform: return "uniform";
    case GLInit::gauged: return "gauged";
    case GLInit::seeded_noise: return "seeded-noise";
  }
  return "unknown";
}

void GLConfig::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa))
    throw Error(ErrorCode::invalid_argument, "kappa must be positive");
  if (!std::isfinite(h0)) throw Error(ErrorCode::invalid_argument, "H0 must be finite");
  if (!(noise >= 0.0 && noise <= 0.5))
    throw Error(ErrorCode::invalid_argument, "noise amplitude must lie in [0, 0.5]");
  if (!(lx > 0.0) || !(ly > 0.0))
    throw Error(ErrorCode::invalid_argument, "domain sides must be positive");
}

namespace {

// Jet layout: field f occupies jet[3f .. 3f+2] = (value, d/dx, d/dy).
enum : std::size_t {
  R = 0, RX, RY,
  S, SX, SY,
  A, AX, AY,
  B, BX, BY,
};

class GinzburgLandauSystem final : public ResidualSystem {
 public:
  explicit GinzburgLandauSystem(const GLConfig& c)
      : h0_(c.h0), c6_(c.kappa / std::numbers::sqrt2) {}

  std::string name() const override { return "gl"; }
  std::size_t field_count() const override { return 4; }
  std::size_t residual_dim() const override { return 6; }
  bool supports(const Grid2D& grid) const override { return grid.dim() == 2; }

  void pointwise_residual(std::span<const double> j, std::size_t,
                          std::span<double> out) const override {
    out[0] = j[RX] + j[A] * j[S];
    out[1] = j[SX] - j[A] * j[R];
    out[2] = j[RY] + j[B] * j[S];
    out[3] = j[SY] - j[B] * j[R];
    out[4] = j[BX] - j[AY] - h0_;
    out[5] = c6_ * (j[R] * j[R] + j[S] * j[S] - 1.0);
  }

  void pointwise_jacobian(std::span<const double> j, std::size_t,
                          std::span<double> out) const override {
    constexpr std::size_t n = 12;
    std::fill(out.begin(), out.begin() + 6 * n, 0.0);
    auto at = [&](std::size_t row, std::size_t col) -> double& { return out[row * n + col]; };
    at(0, RX) = 1.0;
    at(0, A) = j[S];
    at(0, S) = j[A];
    at(1, SX) = 1.0;
    at(1, A) = -j[R];
    at(1, R) = -j[A];
    at(2, RY) = 1.0;
    at(2, B) = j[S];
    at(2, S) = j[B];
    at(3, SY) = 1.0;
    at(3, B) = -j[R];
    at(3, R) = -j[B];
    at(4, BX) = 1.0;
    at(4, AY) = -1.0;
    at(5, R) = 2.0 * c6_ * j[R];
    at(5, S) = 2.0 * c6_ * j[S];
  }

 private:
  double h0_;
  double c6_;
};

}  // namespace

SystemPtr gl_system(const GLConfig& config) {
  config.validate();
  return std::make_shared<GinzburgLandauSystem>(config);
}

double gl_free_energy(const GLConfig& config, const Grid2D& grid, const NodalField& state) {
  if (state.field_count() != 4) throw Error(ErrorCode::shape_mismatch, "GL state needs 4 fields");
  const JetField jets = apply_jet(grid, state);
  const std::complex<double> i(0.0, 1.0);
  const double k2 = config.kappa * config.kappa;
  double total = 0.0;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const std::complex<double> u(jets.at(c, gl_r, 0), jets.at(c, gl_s, 0));
    const std::complex<double> ux(jets.at(c, gl_r, 1), jets.at(c, gl_s, 1));
    const std::complex<double> uy(jets.at(c, gl_r, 2), jets.at(c, gl_s, 2));
    const double a = jets.at(c, gl_a, 0);
    const double b = jets.at(c, gl_b, 0);
    const double curl = jets.at(c, gl_b, 1) - jets.at(c, gl_a, 2);
    const double kinetic = std::norm(ux - i * a * u) + std::norm(uy - i * b * u);
    const double field = (curl - config.h0) * (curl - config.h0);
    const double dens = std::norm(u) - 1.0;
    total += 0.5 * kinetic + 0.5 * field + 0.25 * k2 * dens * dens;
  }
  return grid.cell_weight() * total;
}

NodalField gl_initialize(const GLConfig& config, const Grid2D& grid) {
  config.validate();
  if (grid.dim() != 2) throw Error(ErrorCode::invalid_argument, "GL needs a 2D grid");
  NodalField u(grid.node_count(), 4);
  auto r = u.field(gl_r);
  std::fill(r.begin(), r.end(), 1.0);
  if (config.init == GLInit::uniform) return u;

  auto a = u.field(gl_a);
  auto b = u.field(gl_b);
  for (std::size_t j = 0; j < grid.ny(); ++j)
    for (std::size_t i = 0; i < grid.nx(); ++i) {
      const std::size_t n = grid.node(i, j);
      a[n] = -0.5 * config.h0 * (grid.y(j) - 0.5 * grid.ly());
      b[n] = 0.5 * config.h0 * (grid.x(i) - 0.5 * grid.lx());
    }
  if (config.init == GLInit::gauged) return u;

  detail::Rng rng(config.seed);
  auto s = u.field(gl_s);
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    r[n] += config.noise * rng.symmetric();
    s[n] += config.noise * rng.symmetric();
  }
  return u;
}

std::vector<double> gl_density(const NodalField& state) {
  const auto r = state.field(gl_r);
  const auto s = state.field(gl_s);
  std::vector<double> out(r.size());
  for (std::size_t n = 0; n < r.size(); ++n) out[n] = std::hypot(r[n], s[n]);
  return out;
}

VortexReport count_vortices(const Grid2D& grid, const NodalField& state, double min_modulus) {
  if (grid.dim() != 2) throw Error(ErrorCode::invalid_argument, "vortex counting needs a 2D grid");
  if (state.field_count() < 2 || state.node_count() != grid.node_count())
    throw Error(ErrorCode::shape_mismatch, "state does not match the grid");
  if (!state.all_finite()) throw Error(ErrorCode::invalid_argument, "state is not finite");

  const auto r = state.field(gl_r);
  const auto s = state.field(gl_s);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  VortexReport report;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const auto cn = grid.cell_nodes(c);
    // counter-clockwise: (i,j) (i+1,j) (i+1,j+1) (i,j+1)
    const std::size_t loop[4] = {cn[0], cn[1], cn[3], cn[2]};
    bool zero = false;
    double min_mod = std::numeric_limits<double>::infinity();
    for (std::size_t n : loop) {
      if (r[n] == 0.0 && s[n] == 0.0) zero = true;
      min_mod = std::min(min_mod, std::hypot(r[n], s[n]));
    }
    if (zero) {
      report.indeterminate.push_back(c);
      continue;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const std::size_t p = loop[k], q = loop[(k + 1) % 4];
      sum += std::remainder(std::atan2(s[q], r[q]) - std::atan2(s[p], r[p]), two_pi);
    }
    const int winding = static_cast<int>(std::lround(sum / two_pi));
    report.total_winding += winding;
    if (winding == 0 || !(min_mod < min_modulus)) continue;
    if (std::abs(winding) >= 2) report.under_resolved.push_back(c);
    double mr = 0.0, ms = 0.0;
    for (std::size_t n : loop) {
      mr += 0.25 * r[n];
      ms += 0.25 * s[n];
    }
    report.vortices.push_back({c, winding, std::hypot(mr, ms)});
  }
  return report;
}

}  // namespace sgflow
