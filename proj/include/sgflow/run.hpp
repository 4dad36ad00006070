#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sgflow/flow.hpp"
#include "sgflow/ginzburg_landau.hpp"

namespace sgflow {

enum class ProblemKind { gl, exp1d, poisson2d };

const char* to_string(ProblemKind kind) noexcept;

/// Everything needed to reproduce one run. Grid fields left unset take the
/// defaults of the selected problem.
struct RunConfig {
  std::optional<ProblemKind> problem;
  std::optional<std::size_t> nx, ny;
  std::optional<double> lx, ly;

  DirectionKind direction = DirectionKind::lm_primal;
  double lambda0 = 1.0;
  double lambda_ceiling = 1.0;
  double regularization = 0.0;
  std::size_t max_iter = 5000;
  double grad_tol = 1e-8;
  double stall_tol = 1e-13;
  std::size_t stall_window = 50;
  double cg_tol = 1e-10;
  Acceptance acceptance = Acceptance::decrease;

  double kappa = 4.0;
  std::vector<double> h0;  ///< one value for solve, a list for sweep
  GLInit init = GLInit::seeded_noise;
  double noise = 0.1;
  double min_modulus = 0.7;

  double source_x = 1.0;  ///< poisson2d f
  double source_y = 0.0;  ///< poisson2d g
  double penalty_weight = 1e3;

  std::uint64_t seed = 0;
  std::string out = "sgflow_out";

  bool operator==(const RunConfig&) const = default;

  /// Applies one key = value setting; dashes in keys are read as
  /// underscores. Throws Error(invalid_argument) for unknown keys or values.
  void set(std::string_view key, std::string_view value);
  /// Problem, grid and flow parameters with defaults filled in.
  Grid2D grid() const;
  FlowConfig flow_config() const;
  GLConfig gl_config(double h0_value) const;
  void validate() const;
};

/// key = value lines; '#' starts a comment.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
std::string serialize(const RunConfig& config);

/// Shortest round-trip decimal for a double (17 significant digits).
std::string format_double(double v);

struct RunOutcome {
  Termination termination = Termination::error;
  std::string message;
  double final_energy = 0.0;
  std::size_t iterations = 0;
  std::size_t accepted = 0;
  std::optional<VortexReport> vortices;
  LojasiewiczEstimate monitor;
  std::vector<std::filesystem::path> artifacts;

  bool ok() const noexcept { return termination != Termination::error; }
};

/// Runs one flow and writes its artifacts into config.out: field CSVs
/// (density.csv and vortices.json for GL), iterations.csv, config.txt and
/// manifest.json. Throws Error(invalid_argument) before touching the disk if
/// the configuration is invalid.
RunOutcome run_solve(const RunConfig& config);

struct SweepOutcome {
  std::vector<double> h0;
  std::vector<RunOutcome> runs;
  std::vector<std::string> failures;  ///< per run, empty on success

  std::size_t failed() const noexcept;
};

/// One solve per H0 value (seed + index) in out/h0_<value>, then
/// summary.csv. Up to `threads` runs execute concurrently (0: SGFLOW_THREADS
/// or the hardware concurrency).
SweepOutcome run_sweep(const RunConfig& config, std::size_t threads = 0);

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;  ///< measured error
  double limit = 0.0;  ///< pass threshold
  std::string detail;
};

/// The verification battery. Checks whose name contains `filter` run (all if
/// empty). inject_fault corrupts one GL Jacobian entry so that the
/// finite-difference check has something to catch.
std::vector<CheckResult> run_checks(std::string_view filter = {}, bool inject_fault = false);

std::string library_version();

}  // namespace sgflow
