#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sgflow/directions.hpp"
#include "sgflow/residual_system.hpp"

namespace sgflow {

enum class Acceptance {
  decrease,  ///< accept any strict energy decrease
  ratio,     ///< trust-region test on actual / predicted reduction
};

struct FlowConfig {
  DirectionKind direction = DirectionKind::lm_primal;
  double lambda0 = 1.0;
  double decrease = 0.5;  ///< lambda factor after a rejected step
  double increase = 2.0;  ///< lambda factor after an accepted step
  double lambda_floor = 1e-10;
  double lambda_ceiling = 1.0;
  double regularization = 0.0;  ///< Gauss-Newton direction only
  std::size_t max_iterations = 1000;
  /// Stop when the metric gradient norm falls below grad_tol times its
  /// initial value, or below grad_tol_abs.
  double grad_tol = 1e-8;
  double grad_tol_abs = 0.0;
  /// Stop when the relative energy decrease over the last stall_window
  /// iterations is below stall_tol.
  double stall_tol = 1e-13;
  std::size_t stall_window = 50;
  /// Trailing window for the gradient-inequality monitor.
  std::size_t monitor_window = 20;
  /// Subtracted from E in the monitor (local-minimum variant); 0 for the
  /// zero-residual form.
  double monitor_offset = 0.0;
  Acceptance acceptance = Acceptance::decrease;
  double ratio_accept = 1e-4;
  double ratio_good = 0.75;
  double ratio_poor = 0.25;
  CgOptions solver{};

  void validate() const;
};

enum class Termination { gradient_tolerance, energy_stall, max_iterations, stagnation, error };

const char* to_string(Termination t) noexcept;

struct StepRecord {
  std::size_t iteration = 0;
  double energy = 0.0;          ///< energy at the start of the step
  double euclid_grad_norm = 0.0;
  double metric_grad_norm = 0.0;  ///< ||delta||_u
  double lambda = 0.0;            ///< damping used for this step
  double trial_energy = 0.0;
  bool accepted = false;
  std::size_t cg_iterations = 0;
};

struct FlowState {
  NodalField u;
  double lambda = 1.0;
  double energy = 0.0;
  std::size_t iteration = 0;
  std::size_t consecutive_rejects = 0;
};

struct LojasiewiczEstimate {
  double theta = 0.0;
  double m = 0.0;
  std::size_t points = 0;
  bool valid = false;
};

struct FlowTrace {
  std::vector<StepRecord> records;
  FlowState final_state;
  Termination termination = Termination::max_iterations;
  std::string message;
  LojasiewiczEstimate monitor;

  std::size_t accepted_steps() const noexcept;
};

/// Test hook applied to each freshly computed direction.
using DirectionFilter = std::function<void(std::vector<double>&)>;

FlowState make_state(const Problem& problem, NodalField u0, const FlowConfig& config);

/// One forward-Euler step of the variable-metric flow with time step 1: the
/// trial u - delta is accepted if it lowers the energy, otherwise u is kept.
/// The damping grows by `increase` on acceptance (towards the Sobolev step)
/// and shrinks by `decrease` on rejection (a shorter, more Newton-like step).
/// Throws Error(stagnation) once lambda sits at its floor and the step is
/// still rejected.
StepRecord step(const Problem& problem, FlowState& state, const FlowConfig& config,
                const DirectionFilter& filter = {});

FlowTrace run_flow(const Problem& problem, NodalField u0, const FlowConfig& config,
                   const DirectionFilter& filter = {});

/// Least-squares fit of log ||grad E|| = log m + theta log (E - offset).
/// Points with E - offset below 1e-14 are dropped; fewer than five remaining
/// points or a degenerate spread in E gives an invalid estimate.
LojasiewiczEstimate lojasiewicz_fit(std::span<const double> energies,
                                    std::span<const double> grad_norms, double offset = 0.0);

/// Fit over the last `window` accepted iterates of a trace.
LojasiewiczEstimate lojasiewicz_monitor(const FlowTrace& trace, std::size_t window,
                                        double offset = 0.0);

}  // namespace sgflow
