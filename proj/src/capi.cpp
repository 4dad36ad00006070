#include "sgflow/sgflow.h"

#include <cstring>
#include <memory>
#include <string>

#include "sgflow/directions.hpp"
#include "sgflow/error.hpp"
#include "sgflow/run.hpp"

struct sgflow_grid {
  sgflow::Grid2D grid;
};
struct sgflow_problem {
  sgflow::Problem problem;
};
struct sgflow_config {
  sgflow::RunConfig config;
};
struct sgflow_run {
  sgflow::RunOutcome outcome;
};
struct sgflow_sweep {
  sgflow::SweepOutcome outcome;
  std::vector<sgflow_run> runs;
};
struct sgflow_checks {
  std::vector<sgflow::CheckResult> results;
};

namespace {

thread_local std::string last_error;

template <class F>
sgflow_status guarded(F&& f) noexcept {
  try {
    last_error.clear();
    f();
    return SGFLOW_OK;
  } catch (const sgflow::Error& e) {
    last_error = e.what();
    return static_cast<sgflow_status>(static_cast<int>(e.code()));
  } catch (const std::exception& e) {
    last_error = e.what();
    return SGFLOW_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown exception";
    return SGFLOW_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw sgflow::Error(sgflow::ErrorCode::invalid_argument, std::string(what) + " is null");
}

sgflow::NodalField state_of(const sgflow_problem* p, const double* u, std::size_t n) {
  require(p, "problem");
  require(u, "state");
  if (n != p->problem.dof_count())
    throw sgflow::Error(sgflow::ErrorCode::shape_mismatch,
                        "state has " + std::to_string(n) + " values, expected " +
                            std::to_string(p->problem.dof_count()));
  return sgflow::NodalField(std::vector<double>(u, u + n), p->problem.field_count());
}

template <class T>
sgflow_status make(T** out, auto&& build) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    *out = build();
  });
}

}  // namespace

extern "C" {

const char* sgflow_version(void) {
  static const std::string v = sgflow::library_version();
  return v.c_str();
}

const char* sgflow_last_error(void) { return last_error.c_str(); }

const char* sgflow_status_string(sgflow_status status) {
  switch (status) {
    case SGFLOW_OK: return "ok";
    case SGFLOW_ERR_INTERNAL: return "internal";
    default: return sgflow::to_string(static_cast<sgflow::ErrorCode>(status));
  }
}

sgflow_status sgflow_grid_create(size_t nx, size_t ny, double lx, double ly, sgflow_grid** out) {
  return make(out, [&] { return new sgflow_grid{sgflow::Grid2D(nx, ny, lx, ly)}; });
}
void sgflow_grid_destroy(sgflow_grid* grid) { delete grid; }
size_t sgflow_grid_node_count(const sgflow_grid* grid) { return grid ? grid->grid.node_count() : 0; }

sgflow_status sgflow_problem_create_gl(const sgflow_grid* grid, double kappa, double h0,
                                       sgflow_problem** out) {
  return make(out, [&] {
    require(grid, "grid");
    sgflow::GLConfig c;
    c.kappa = kappa;
    c.h0 = h0;
    c.lx = grid->grid.lx();
    c.ly = grid->grid.ly();
    c.validate();
    return new sgflow_problem{sgflow::Problem(sgflow::gl_system(c), grid->grid)};
  });
}

sgflow_status sgflow_problem_create_exp1d(const sgflow_grid* grid, double penalty_weight,
                                          sgflow_problem** out) {
  return make(out, [&] {
    require(grid, "grid");
    return new sgflow_problem{sgflow::Problem(sgflow::model_problem_exponential(penalty_weight), grid->grid)};
  });
}

sgflow_status sgflow_problem_create_poisson2d(const sgflow_grid* grid, double f, double g,
                                              double penalty_weight, sgflow_problem** out) {
  return make(out, [&] {
    require(grid, "grid");
    return new sgflow_problem{
        sgflow::Problem(sgflow::model_problem_linear_poisson(f, g, penalty_weight), grid->grid)};
  });
}

void sgflow_problem_destroy(sgflow_problem* problem) { delete problem; }
size_t sgflow_problem_dof_count(const sgflow_problem* problem) {
  return problem ? problem->problem.dof_count() : 0;
}

sgflow_status sgflow_energy(const sgflow_problem* problem, const double* u, size_t n, double* energy) {
  return guarded([&] {
    require(energy, "energy");
    const sgflow::NodalField state = state_of(problem, u, n);
    *energy = sgflow::evaluate_energy(problem->problem, state).value;
  });
}

sgflow_status sgflow_gradient(const sgflow_problem* problem, const double* u, size_t n, double* gradient) {
  return guarded([&] {
    require(gradient, "gradient");
    const sgflow::NodalField state = state_of(problem, u, n);
    const auto g = sgflow::euclidean_gradient(problem->problem, state);
    std::copy(g.begin(), g.end(), gradient);
  });
}

sgflow_status sgflow_direction(const sgflow_problem* problem, const double* u, size_t n,
                               sgflow_direction_kind kind, double lambda, double regularization,
                               double* direction) {
  return guarded([&] {
    require(direction, "direction");
    const sgflow::NodalField state = state_of(problem, u, n);
    if (kind < SGFLOW_DIR_EUCLIDEAN || kind > SGFLOW_DIR_GAUSS_NEWTON)
      throw sgflow::Error(sgflow::ErrorCode::invalid_argument, "unknown direction kind");
    sgflow::DirectionRequest req;
    req.kind = static_cast<sgflow::DirectionKind>(kind);
    req.lambda = lambda;
    req.regularization = regularization;
    const auto lin = problem->problem.linearize(state, req.kind == sgflow::DirectionKind::lm_dual);
    const auto d = sgflow::compute_direction(problem->problem, lin, req);
    std::copy(d.direction.begin(), d.direction.end(), direction);
  });
}

sgflow_status sgflow_fd_jacobian_check(const sgflow_problem* problem, const double* u, size_t n,
                                       size_t probes, double* max_error) {
  return guarded([&] {
    require(max_error, "max_error");
    const sgflow::NodalField state = state_of(problem, u, n);
    *max_error = sgflow::fd_jacobian_check(problem->problem, state, probes);
  });
}

sgflow_status sgflow_config_create(sgflow_config** out) {
  return make(out, [] { return new sgflow_config{}; });
}
void sgflow_config_destroy(sgflow_config* config) { delete config; }

sgflow_status sgflow_config_set(sgflow_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->config.set(key, value);
  });
}

sgflow_status sgflow_config_load(sgflow_config* config, const char* path) {
  return guarded([&] {
    require(config, "config");
    require(path, "path");
    config->config = sgflow::load_config(path);
  });
}

sgflow_status sgflow_config_validate(const sgflow_config* config) {
  return guarded([&] {
    require(config, "config");
    config->config.validate();
  });
}

sgflow_status sgflow_config_serialize(const sgflow_config* config, char* buf, size_t capacity,
                                      size_t* needed) {
  return guarded([&] {
    require(config, "config");
    const std::string s = sgflow::serialize(config->config);
    if (needed) *needed = s.size() + 1;
    if (buf && capacity > 0) {
      const std::size_t n = std::min(capacity - 1, s.size());
      std::memcpy(buf, s.data(), n);
      buf[n] = '\0';
    }
  });
}

sgflow_status sgflow_solve(const sgflow_config* config, sgflow_run** out) {
  return make(out, [&] {
    require(config, "config");
    return new sgflow_run{sgflow::run_solve(config->config)};
  });
}

void sgflow_run_destroy(sgflow_run* run) { delete run; }
const char* sgflow_run_termination(const sgflow_run* run) {
  return run ? sgflow::to_string(run->outcome.termination) : "";
}
const char* sgflow_run_message(const sgflow_run* run) { return run ? run->outcome.message.c_str() : ""; }
int sgflow_run_ok(const sgflow_run* run) { return run && run->outcome.ok() ? 1 : 0; }
double sgflow_run_final_energy(const sgflow_run* run) { return run ? run->outcome.final_energy : 0.0; }
size_t sgflow_run_iterations(const sgflow_run* run) { return run ? run->outcome.iterations : 0; }
size_t sgflow_run_accepted(const sgflow_run* run) { return run ? run->outcome.accepted : 0; }
long sgflow_run_vortex_count(const sgflow_run* run) {
  return run && run->outcome.vortices ? static_cast<long>(run->outcome.vortices->count()) : -1;
}
long sgflow_run_total_winding(const sgflow_run* run) {
  return run && run->outcome.vortices ? run->outcome.vortices->total_winding : 0;
}

sgflow_status sgflow_sweep_run(const sgflow_config* config, size_t threads, sgflow_sweep** out) {
  return make(out, [&] {
    require(config, "config");
    auto s = std::make_unique<sgflow_sweep>();
    s->outcome = sgflow::run_sweep(config->config, threads);
    for (auto& r : s->outcome.runs) s->runs.push_back(sgflow_run{r});
    return s.release();
  });
}

void sgflow_sweep_destroy(sgflow_sweep* sweep) { delete sweep; }
size_t sgflow_sweep_count(const sgflow_sweep* sweep) { return sweep ? sweep->runs.size() : 0; }
size_t sgflow_sweep_failed(const sgflow_sweep* sweep) { return sweep ? sweep->outcome.failed() : 0; }
double sgflow_sweep_h0(const sgflow_sweep* sweep, size_t i) {
  return sweep && i < sweep->runs.size() ? sweep->outcome.h0[i] : 0.0;
}
const char* sgflow_sweep_error(const sgflow_sweep* sweep, size_t i) {
  return sweep && i < sweep->runs.size() ? sweep->outcome.failures[i].c_str() : "";
}
const sgflow_run* sgflow_sweep_result(const sgflow_sweep* sweep, size_t i) {
  return sweep && i < sweep->runs.size() ? &sweep->runs[i] : nullptr;
}

sgflow_status sgflow_checks_run(const char* filter, int inject_fault, sgflow_checks** out) {
  return make(out, [&] {
    return new sgflow_checks{sgflow::run_checks(filter ? filter : "", inject_fault != 0)};
  });
}

void sgflow_checks_destroy(sgflow_checks* checks) { delete checks; }
size_t sgflow_checks_count(const sgflow_checks* checks) { return checks ? checks->results.size() : 0; }
const char* sgflow_checks_name(const sgflow_checks* checks, size_t i) {
  return checks && i < checks->results.size() ? checks->results[i].name.c_str() : "";
}
int sgflow_checks_passed(const sgflow_checks* checks, size_t i) {
  return checks && i < checks->results.size() && checks->results[i].passed ? 1 : 0;
}
double sgflow_checks_value(const sgflow_checks* checks, size_t i) {
  return checks && i < checks->results.size() ? checks->results[i].value : 0.0;
}
double sgflow_checks_limit(const sgflow_checks* checks, size_t i) {
  return checks && i < checks->results.size() ? checks->results[i].limit : 0.0;
}
const char* sgflow_checks_detail(const sgflow_checks* checks, size_t i) {
  return checks && i < checks->results.size() ? checks->results[i].detail.c_str() : "";
}

}  // extern "C"
