#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sgflow {

enum class ErrorCode {
  invalid_argument = 1,
  shape_mismatch,
  numerical_breakdown,
  not_converged,
  singular,
  diverged,
  stagnation,
  io,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a residual evaluation produces a non-finite value.
class DivergedError : public Error {
 public:
  DivergedError(std::size_t cell, const std::string& what)
      : Error(ErrorCode::diverged, what), cell_(cell) {}

  std::size_t cell() const noexcept { return cell_; }

 private:
  std::size_t cell_;
};

}  // namespace sgflow
