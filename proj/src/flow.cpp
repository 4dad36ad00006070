#include "sgflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sgflow/error.hpp"

namespace sgflow {

const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::gradient_tolerance: return "gradient_tolerance";
    case Termination::energy_stall: return "energy_stall";
    case Termination::max_iterations: return "max_iterations";
    case Termination::stagnation: return "stagnation";
    case Termination::error: return "error";
  }
  return "unknown";
}

void FlowConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::invalid_argument, what); };
  if (!(decrease > 0.0 && decrease < 1.0)) fail("lambda decrease factor must lie in (0, 1)");
  if (!(increase > 1.0)) fail("lambda increase factor must exceed 1");
  if (!(lambda_floor > 0.0)) fail("lambda floor must be positive");
  if (!(lambda_ceiling >= lambda_floor)) fail("lambda ceiling must not be below the floor");
  if (!(lambda0 >= lambda_floor && lambda0 <= lambda_ceiling))
    fail("initial lambda must lie in [floor, ceiling]");
  if (!(grad_tol >= 0.0) || !(grad_tol_abs >= 0.0)) fail("gradient tolerances must be non-negative");
  if (!(stall_tol >= 0.0)) fail("stall tolerance must be non-negative");
  if (!(regularization >= 0.0)) fail("regularization must be non-negative");
  if (!(solver.tol > 0.0)) fail("solver tolerance must be positive");
  if (acceptance == Acceptance::ratio && !(ratio_poor <= ratio_good))
    fail("ratio thresholds must satisfy poor <= good");
}

std::size_t FlowTrace::accepted_steps() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const StepRecord& r) { return r.accepted; }));
}

FlowState make_state(const Problem& problem, NodalField u0, const FlowConfig& config) {
  config.validate();
  problem.check_shape(u0);
  FlowState s;
  s.energy = problem.energy(u0).value;
  s.u = std::move(u0);
  s.lambda = config.lambda0;
  return s;
}

namespace {

bool is_lm(DirectionKind k) { return k == DirectionKind::lm_primal || k == DirectionKind::lm_dual; }

struct StopRule {
  double reference = -1.0;
};

struct StepOutcome {
  StepRecord record;
  bool converged = false;  ///< gradient tolerance met; no trial was made
  double predicted = 0.0;    ///< Gauss-Newton model decrease of the trial step
  double first_order = 0.0;  ///< tau g^T delta
};

StepOutcome step_impl(const Problem& problem, FlowState& state, const FlowConfig& config,
                      const DirectionFilter& filter, StopRule* stop) {
  StepOutcome out;
  auto& rec = out.record;
  rec.iteration = state.iteration;
  rec.energy = state.energy;
  rec.lambda = state.lambda;

  const bool need_jacobian = config.direction == DirectionKind::lm_dual;
  const Linearization lin = problem.linearize(state.u, need_jacobian);
  rec.euclid_grad_norm = norm2(lin.gradient);

  DirectionRequest req;
  req.kind = config.direction;
  req.lambda = state.lambda;
  req.lambda_floor = config.lambda_floor;
  req.regularization = config.regularization;
  req.solver = config.solver;
  DirectionResult dir = compute_direction(problem, lin, req);
  rec.cg_iterations = dir.report.iterations;
  rec.metric_grad_norm = std::sqrt(std::max(dir.metric_norm_sq, 0.0));

  if (stop) {
    if (stop->reference < 0.0) stop->reference = rec.metric_grad_norm;
    const double threshold = std::max(config.grad_tol * stop->reference, config.grad_tol_abs);
    if (rec.metric_grad_norm <= threshold) {
      out.converged = true;
      rec.trial_energy = state.energy;
      return out;
    }
  }

  if (filter) filter(dir.direction);

  // LM kinds take the forward-Euler step with time step 1 (the damping is
  // inside the direction); the other kinds use lambda as the time step.
  const double tau = is_lm(config.direction) ? 1.0 : state.lambda;
  NodalField trial = state.u;
  for (std::size_t i = 0; i < trial.size(); ++i) trial.values()[i] -= tau * dir.direction[i];

  double trial_energy = std::numeric_limits<double>::infinity();
  try {
    trial_energy = problem.energy(trial).value;
  } catch (const DivergedError&) {
    // non-finite trial: treated as a rejection
  }
  rec.trial_energy = trial_energy;

  const double gd = tau * dot(lin.gradient, dir.direction);
  const auto nd = spmv(lin.normal, dir.direction);
  out.first_order = gd;
  out.predicted = gd - 0.5 * tau * tau * dot(dir.direction, nd);

  bool accept = std::isfinite(trial_energy) && trial_energy < state.energy;
  double factor = accept ? config.increase : config.decrease;
  if (accept && config.acceptance == Acceptance::ratio) {
    const double ratio = out.predicted > 0.0 ? (state.energy - trial_energy) / out.predicted : 0.0;
    accept = ratio > config.ratio_accept;
    factor = ratio > config.ratio_good ? config.increase
             : ratio < config.ratio_poor ? config.decrease
                                         : 1.0;
  }
  rec.accepted = accept;

  if (accept) {
    state.u = std::move(trial);
    state.energy = trial_energy;
    state.consecutive_rejects = 0;
  } else {
    if (state.lambda <= config.lambda_floor)
      throw Error(ErrorCode::stagnation, "step rejected with lambda at its floor " +
                                             std::to_string(config.lambda_floor));
    ++state.consecutive_rejects;
  }
  state.lambda = std::clamp(state.lambda * factor, config.lambda_floor, config.lambda_ceiling);
  ++state.iteration;
  return out;
}

}  // namespace

StepRecord step(const Problem& problem, FlowState& state, const FlowConfig& config,
                const DirectionFilter& filter) {
  if (!std::isfinite(state.energy))
    throw Error(ErrorCode::invalid_argument, "flow state energy is not finite");
  return step_impl(problem, state, config, filter, nullptr).record;
}

FlowTrace run_flow(const Problem& problem, NodalField u0, const FlowConfig& config,
                   const DirectionFilter& filter) {
  FlowTrace trace;
  trace.final_state = make_state(problem, std::move(u0), config);
  auto& state = trace.final_state;
  StopRule stop;

  auto finish = [&](Termination t, std::string message) {
    trace.termination = t;
    trace.message = std::move(message);
    trace.monitor = lojasiewicz_monitor(trace, config.monitor_window, config.monitor_offset);
    return trace;
  };

  while (true) {
    if (state.iteration >= config.max_iterations)
      return finish(Termination::max_iterations, "iteration budget exhausted");

    StepOutcome out;
    try {
      out = step_impl(problem, state, config, filter, &stop);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::stagnation) return finish(Termination::stagnation, e.what());
      return finish(Termination::error, e.what());
    }
    if (out.converged) return finish(Termination::gradient_tolerance, "metric gradient below tolerance");
    trace.records.push_back(out.record);

    // The model decrease of the step is below the resolution of E itself.
    if (out.first_order <= config.stall_tol * std::abs(state.energy) && state.energy > 0.0)
      return finish(Termination::energy_stall, "predicted decrease below energy resolution");

    const std::size_t n = trace.records.size();
    if (config.stall_window > 0 && n > config.stall_window) {
      const double old_e = trace.records[n - 1 - config.stall_window].energy;
      if (old_e - state.energy <= config.stall_tol * std::abs(old_e))
        return finish(Termination::energy_stall, "energy stalled over the monitor window");
    }
  }
}

LojasiewiczEstimate lojasiewicz_fit(std::span<const double> energies,
                                    std::span<const double> grad_norms, double offset) {
  LojasiewiczEstimate est;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < energies.size() && i < grad_norms.size(); ++i) {
    const double e = energies[i] - offset;
    if (!(e >= 1e-14) || !(grad_norms[i] > 0.0) || !std::isfinite(e) || !std::isfinite(grad_norms[i]))
      continue;
    xs.push_back(std::log(e));
    ys.push_back(std::log(grad_norms[i]));
  }
  est.points = xs.size();
  if (xs.size() < 5) return est;
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 1e-20 * n)) return est;
  est.theta = sxy / sxx;
  est.m = std::exp(my - est.theta * mx);
  est.valid = std::isfinite(est.theta) && std::isfinite(est.m);
  return est;
}

LojasiewiczEstimate lojasiewicz_monitor(const FlowTrace& trace, std::size_t window, double offset) {
  // One point per distinct iterate: the first record after each accepted step.
  std::vector<double> es, gs;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    if (i > 0 && !trace.records[i - 1].accepted) continue;
    const auto& r = trace.records[i];
    if (r.energy - offset < 1e-14) continue;
    es.push_back(r.energy);
    gs.push_back(r.metric_grad_norm);
  }
  const std::size_t start = es.size() > window ? es.size() - window : 0;
  return lojasiewicz_fit(std::span<const double>(es).subspan(start),
                         std::span<const double>(gs).subspan(start), offset);
}

}  // namespace sgflow
