#include "sgflow/directions.hpp"

#include <cmath>
#include <string>

#include "random.hpp"
#include "sgflow/error.hpp"

namespace sgflow {

const char* to_string(DirectionKind kind) noexcept {
  switch (kind) {
    case DirectionKind::euclidean: return "euclidean";
    case DirectionKind::sobolev: return "sobolev";
    case DirectionKind::lm_primal: return "lm_primal";
    case DirectionKind::lm_dual: return "lm_dual";
    case DirectionKind::gauss_newton: return "gauss_newton";
  }
  return "unknown";
}

namespace {

std::function<void(std::span<double>)> projector_of(const Problem& problem) {
  if (!problem.projector().active()) return {};
  return [&problem](std::span<double> x) { problem.projector().apply(x); };
}

/// a * A + b * B on a shared pattern.
SparseMatrix combine(double a, const SparseMatrix& A, double b, const SparseMatrix& B) {
  SparseMatrix out = A;
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = a * A.values[k] + b * B.values[k];
  out.symmetric = A.symmetric && B.symmetric;
  return out;
}

void require_converged(const SolveReport& report, const char* what) {
  if (!report.converged)
    throw Error(ErrorCode::not_converged,
                std::string(what) + ": cg stopped after " + std::to_string(report.iterations) +
                    " iterations at relative residual " + std::to_string(report.residual_norm));
}

double quad(const SparseMatrix& a, std::span<const double> x) {
  const auto ax = spmv(a, x);
  return dot(x, ax);
}

void check_lambda(double lambda, double floor) {
  if (!(lambda >= floor) || !std::isfinite(lambda))
    throw Error(ErrorCode::invalid_argument,
                "damping " + std::to_string(lambda) + " is below the floor " + std::to_string(floor));
}

}  // namespace

std::vector<double> euclidean_gradient(const Problem& problem, const NodalField& u) {
  return problem.linearize(u).gradient;
}

DirectionResult sobolev_gradient(const Problem& problem, const Linearization& lin,
                                 const CgOptions& solver) {
  auto solved = cg_solve(problem.gram(), lin.gradient, solver, projector_of(problem));
  require_converged(solved.report, "sobolev gradient");
  DirectionResult out;
  out.metric_norm_sq = quad(problem.gram(), solved.x);
  out.direction = std::move(solved.x);
  out.report = solved.report;
  return out;
}

double lm_metric(const Problem& problem, const Linearization& lin, double lambda,
                 std::span<const double> v, std::span<const double> w) {
  const auto gw = spmv(problem.gram(), w);
  const auto nw = spmv(lin.normal, w);
  return dot(v, gw) + dot(v, nw) / lambda;
}

DirectionResult lm_direction_primal(const Problem& problem, const Linearization& lin,
                                    double lambda, const CgOptions& solver, double lambda_floor) {
  check_lambda(lambda, lambda_floor);
  const SparseMatrix a = combine(lambda, problem.gram(), 1.0, lin.normal);
  auto solved = cg_solve(a, lin.gradient, solver, projector_of(problem));
  require_converged(solved.report, "levenberg-marquardt direction");
  DirectionResult out;
  out.direction = std::move(solved.x);
  for (double& v : out.direction) v *= lambda;
  out.metric_norm_sq = lm_metric(problem, lin, lambda, out.direction, out.direction);
  out.report = solved.report;
  return out;
}

DirectionResult lm_direction_dual(const Problem& problem, const Linearization& lin,
                                  double lambda, const CgOptions& solver, double lambda_floor) {
  check_lambda(lambda, lambda_floor);
  const std::size_t cells_m = problem.residual_count();
  if (lin.jacobian.rows != cells_m)
    throw Error(ErrorCode::invalid_argument, "dual direction needs a linearization with its Jacobian");

  const auto& pens = problem.penalties();
  const std::size_t nres = cells_m + pens.size();
  const std::size_t ndof = problem.dof_count();
  const std::size_t nodes = problem.grid().node_count();
  const double w = problem.grid().cell_weight();
  const auto project = projector_of(problem);

  CgOptions inner = solver;
  inner.tol = solver.tol / 10.0;
  std::size_t inner_iterations = 0;
  auto gram_solve = [&](std::span<const double> rhs) {
    auto s = cg_solve(problem.gram(), rhs, inner, project);
    require_converged(s.report, "dual direction inner solve");
    inner_iterations += s.report.iterations;
    return std::move(s.x);
  };
  // Full Jacobian (cell rows, then penalty rows sqrt(weight) e_dof).
  auto jt_apply = [&](std::span<const double> y, std::span<double> out) {
    spmv_transpose(lin.jacobian, y.subspan(0, cells_m), out);
    for (std::size_t k = 0; k < pens.size(); ++k)
      out[pens[k].field * nodes + pens[k].node] += std::sqrt(pens[k].weight) * y[cells_m + k];
  };
  auto j_apply = [&](std::span<const double> x, std::span<double> out) {
    spmv(lin.jacobian, x, out.subspan(0, cells_m));
    for (std::size_t k = 0; k < pens.size(); ++k)
      out[cells_m + k] = std::sqrt(pens[k].weight) * x[pens[k].field * nodes + pens[k].node];
  };

  // Residual-space weights: w for cell rows, 1 for penalty rows (the weight
  // is folded into the penalty residual).
  LinearOperator cap;
  cap.dimension = nres;
  cap.diagonal.assign(nres, 1.0);
  for (std::size_t i = 0; i < cells_m; ++i) cap.diagonal[i] = 1.0 / w;
  std::vector<double> tmp(ndof);
  cap.apply = [&](std::span<const double> y, std::span<double> out) {
    jt_apply(y, tmp);
    if (project) project(tmp);
    const auto x = gram_solve(tmp);
    j_apply(x, out);
    for (std::size_t i = 0; i < nres; ++i) out[i] = out[i] / lambda + cap.diagonal[i] * y[i];
  };

  std::vector<double> rhs(nres);
  std::copy(lin.residual.begin(), lin.residual.end(), rhs.begin());
  std::copy(lin.penalty_residual.begin(), lin.penalty_residual.end(), rhs.begin() + static_cast<std::ptrdiff_t>(cells_m));

  auto outer = cg_solve(cap, rhs, solver);
  require_converged(outer.report, "dual capacitance solve");

  std::vector<double> jty(ndof);
  jt_apply(outer.x, jty);
  if (project) project(jty);
  DirectionResult out;
  out.direction = gram_solve(jty);
  out.metric_norm_sq = lm_metric(problem, lin, lambda, out.direction, out.direction);
  out.report = outer.report;
  out.report.iterations += inner_iterations;
  return out;
}

DirectionResult gauss_newton_direction(const Problem& problem, const Linearization& lin,
                                       double regularization, const CgOptions& solver) {
  if (!(regularization >= 0.0) || !std::isfinite(regularization))
    throw Error(ErrorCode::invalid_argument, "regularization must be non-negative");
  const SparseMatrix a = combine(1.0, lin.normal, regularization, problem.gram());
  const auto project = projector_of(problem);
  const bool bare = regularization == 0.0;

  CgResult solved;
  try {
    solved = cg_solve(a, lin.gradient, solver, project);
  } catch (const Error& e) {
    if (bare && e.code() == ErrorCode::numerical_breakdown)
      throw Error(ErrorCode::singular,
                  "Gauss-Newton normal matrix broke down; use a positive regularization or the "
                  "Levenberg-Marquardt direction");
    throw;
  }
  if (!solved.report.converged) {
    if (bare)
      throw Error(ErrorCode::singular,
                  "Gauss-Newton normal matrix is singular (cg did not converge); use a positive "
                  "regularization or the Levenberg-Marquardt direction");
    require_converged(solved.report, "regularized Gauss-Newton direction");
  }

  if (bare) {
    // A consistent right-hand side lets CG converge even on a singular
    // matrix, so probe with a generic one: recover z from N z.
    detail::Rng rng(0x5eed);
    std::vector<double> z(a.rows);
    for (double& v : z) v = rng.symmetric();
    if (project) project(z);
    const auto nz = spmv(a, z);
    CgOptions probe = solver;
    probe.tol = 1e-12;
    const auto rec = cg_solve(a, nz, probe, project);
    double diff = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) diff += (rec.x[i] - z[i]) * (rec.x[i] - z[i]);
    const double rel = std::sqrt(diff) / norm2(z);
    if (!rec.report.converged || rel > 1e-6)
      throw Error(ErrorCode::singular,
                  "Gauss-Newton normal matrix is singular (null-space probe error " +
                      std::to_string(rel) +
                      "); use a positive regularization or the Levenberg-Marquardt direction");
  }

  DirectionResult out;
  out.metric_norm_sq = quad(a, solved.x);
  out.direction = std::move(solved.x);
  out.report = solved.report;
  return out;
}

DirectionResult compute_direction(const Problem& problem, const Linearization& lin,
                                  const DirectionRequest& request) {
  switch (request.kind) {
    case DirectionKind::euclidean: {
      DirectionResult out;
      out.direction = lin.gradient;
      out.metric_norm_sq = dot(lin.gradient, lin.gradient);
      out.report = {0, 0.0, true};
      return out;
    }
    case DirectionKind::sobolev: return sobolev_gradient(problem, lin, request.solver);
    case DirectionKind::lm_primal:
      return lm_direction_primal(problem, lin, request.lambda, request.solver, request.lambda_floor);
    case DirectionKind::lm_dual:
      return lm_direction_dual(problem, lin, request.lambda, request.solver, request.lambda_floor);
    case DirectionKind::gauss_newton:
      return gauss_newton_direction(problem, lin, request.regularization, request.solver);
  }
  throw Error(ErrorCode::invalid_argument, "unknown direction kind");
}

}  // namespace sgflow
