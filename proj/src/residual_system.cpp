#include "sgflow/residual_system.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "random.hpp"
#include "sgflow/error.hpp"

namespace sgflow {

namespace {

SparseMatrix build_pattern(const Grid2D& grid, std::size_t fields) {
  const std::size_t nodes = grid.node_count();
  const std::size_t nc = grid.corner_count();
  std::vector<std::vector<std::size_t>> nbrs(nodes);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const auto cn = grid.cell_nodes(c);
    for (std::size_t p = 0; p < nc; ++p)
      for (std::size_t q = 0; q < nc; ++q) nbrs[cn[p]].push_back(cn[q]);
  }
  for (auto& v : nbrs) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  SparseMatrix m;
  m.rows = m.cols = nodes * fields;
  m.row_ptr.assign(1, 0);
  for (std::size_t f = 0; f < fields; ++f)
    for (std::size_t n = 0; n < nodes; ++n) {
      for (std::size_t f2 = 0; f2 < fields; ++f2)
        for (std::size_t n2 : nbrs[n]) m.col_idx.push_back(f2 * nodes + n2);
      m.row_ptr.push_back(m.col_idx.size());
    }
  m.values.assign(m.col_idx.size(), 0.0);
  m.symmetric = true;
  return m;
}

}  // namespace

Problem::Problem(SystemPtr system, Grid2D grid)
    : system_(std::move(system)), grid_(grid), projector_(grid_, system_ ? system_->field_count() : 1) {
  if (!system_) throw Error(ErrorCode::invalid_argument, "problem needs a residual system");
  if (!system_->supports(grid_))
    throw Error(ErrorCode::invalid_argument,
                "system '" + system_->name() + "' does not support a " +
                    std::to_string(grid_.dim()) + "D grid");
  penalties_ = system_->boundary_penalties(grid_);
  for (const auto& p : penalties_)
    if (p.field >= field_count() || p.node >= grid_.node_count() || !(p.weight > 0.0))
      throw Error(ErrorCode::invalid_argument, "malformed boundary penalty");

  pattern_ = build_pattern(grid_, field_count());

  const std::size_t nc = grid_.corner_count();
  const std::size_t L = field_count() * nc;
  const std::size_t nodes = grid_.node_count();
  scatter_.resize(grid_.cell_count() * L * L);
  for (std::size_t c = 0; c < grid_.cell_count(); ++c) {
    const auto cn = grid_.cell_nodes(c);
    for (std::size_t a = 0; a < L; ++a) {
      const std::size_t da = (a / nc) * nodes + cn[a % nc];
      for (std::size_t b = 0; b < L; ++b) {
        const std::size_t db = (b / nc) * nodes + cn[b % nc];
        scatter_[(c * L + a) * L + b] = pattern_.find(da, db);
      }
    }
  }

  gram_ = pattern_;
  const double w = grid_.cell_weight();
  const std::size_t js = grid_.jet_size();
  for (std::size_t c = 0; c < grid_.cell_count(); ++c)
    for (std::size_t a = 0; a < L; ++a)
      for (std::size_t b = 0; b < L; ++b) {
        if (a / nc != b / nc) continue;
        double acc = 0.0;
        for (std::size_t k = 0; k < js; ++k)
          acc += grid_.stencil(k, a % nc) * grid_.stencil(k, b % nc);
        gram_.values[scatter_[(c * L + a) * L + b]] += w * acc;
      }
}

void Problem::check_shape(const NodalField& u) const {
  if (u.field_count() != field_count() || u.size() != dof_count())
    throw Error(ErrorCode::shape_mismatch,
                "state has " + std::to_string(u.size()) + " values in " +
                    std::to_string(u.field_count()) + " fields, expected " +
                    std::to_string(dof_count()) + " in " + std::to_string(field_count()));
}

void Problem::gather(const NodalField& u, std::size_t cell, std::span<double> local) const {
  const auto cn = grid_.cell_nodes(cell);
  const std::size_t nc = grid_.corner_count();
  for (std::size_t f = 0; f < field_count(); ++f) {
    const auto uf = u.field(f);
    for (std::size_t q = 0; q < nc; ++q) local[f * nc + q] = uf[cn[q]];
  }
}

void Problem::cell_jet(std::span<const double> local, std::span<double> jet) const {
  const std::size_t nc = grid_.corner_count();
  const std::size_t js = grid_.jet_size();
  for (std::size_t f = 0; f < field_count(); ++f)
    for (std::size_t k = 0; k < js; ++k) {
      double acc = 0.0;
      for (std::size_t q = 0; q < nc; ++q) acc += grid_.stencil(k, q) * local[f * nc + q];
      jet[f * js + k] = acc;
    }
}

EnergyValue Problem::energy(const NodalField& u, bool breakdown) const {
  check_shape(u);
  const std::size_t m = system_->residual_dim();
  const std::size_t L = field_count() * grid_.corner_count();
  std::vector<double> local(L), jet(field_count() * grid_.jet_size()), res(m);
  EnergyValue e;
  if (breakdown) e.cell_breakdown.resize(grid_.cell_count());
  double sum = 0.0;
  for (std::size_t c = 0; c < grid_.cell_count(); ++c) {
    gather(u, c, local);
    cell_jet(local, jet);
    system_->pointwise_residual(jet, grid_.jet_size(), res);
    const double sq = dot(res, res);
    if (!std::isfinite(sq))
      throw DivergedError(c, "non-finite residual in cell " + std::to_string(c));
    sum += sq;
    if (breakdown) e.cell_breakdown[c] = std::sqrt(sq);
  }
  double pen = 0.0;
  for (const auto& p : penalties_) {
    const double d = u(p.field, p.node) - p.target;
    pen += p.weight * d * d;
  }
  if (!std::isfinite(pen)) throw DivergedError(grid_.cell_count(), "non-finite penalty residual");
  e.value = 0.5 * grid_.cell_weight() * sum + 0.5 * pen;
  return e;
}

std::vector<double> Problem::residual_vector(const NodalField& u) const {
  check_shape(u);
  const std::size_t m = system_->residual_dim();
  const std::size_t L = field_count() * grid_.corner_count();
  std::vector<double> local(L), jet(field_count() * grid_.jet_size());
  std::vector<double> out(residual_count() + penalties_.size());
  for (std::size_t c = 0; c < grid_.cell_count(); ++c) {
    gather(u, c, local);
    cell_jet(local, jet);
    system_->pointwise_residual(jet, grid_.jet_size(), std::span<double>(out).subspan(c * m, m));
  }
  for (std::size_t k = 0; k < penalties_.size(); ++k) {
    const auto& p = penalties_[k];
    out[residual_count() + k] = std::sqrt(p.weight) * (u(p.field, p.node) - p.target);
  }
  return out;
}

Linearization Problem::linearize(const NodalField& u, bool with_jacobian) const {
  check_shape(u);
  const std::size_t m = system_->residual_dim();
  const std::size_t F = field_count();
  const std::size_t nc = grid_.corner_count();
  const std::size_t js = grid_.jet_size();
  const std::size_t L = F * nc;
  const std::size_t nodes = grid_.node_count();
  const double w = grid_.cell_weight();

  Linearization lin;
  lin.residual.resize(residual_count());
  lin.gradient.assign(dof_count(), 0.0);
  lin.normal = pattern_;
  if (with_jacobian) {
    auto& J = lin.jacobian;
    J.rows = residual_count();
    J.cols = dof_count();
    J.row_ptr.assign(1, 0);
    J.col_idx.reserve(residual_count() * L);
    J.values.reserve(residual_count() * L);
  }

  std::vector<double> local(L), jet(F * js), pj(m * F * js), jc(m * L);
  double sum = 0.0;
  for (std::size_t c = 0; c < grid_.cell_count(); ++c) {
    gather(u, c, local);
    cell_jet(local, jet);
    auto rc = std::span<double>(lin.residual).subspan(c * m, m);
    system_->pointwise_residual(jet, js, rc);
    const double sq = dot(rc, rc);
    if (!std::isfinite(sq))
      throw DivergedError(c, "non-finite residual in cell " + std::to_string(c));
    sum += sq;
    system_->pointwise_jacobian(jet, js, pj);

    // Chain rule through the cell stencil: local Jacobian w.r.t. corner values.
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t f = 0; f < F; ++f)
        for (std::size_t q = 0; q < nc; ++q) {
          double acc = 0.0;
          for (std::size_t k = 0; k < js; ++k) acc += pj[i * F * js + f * js + k] * grid_.stencil(k, q);
          jc[i * L + f * nc + q] = acc;
        }

    const auto cn = grid_.cell_nodes(c);
    for (std::size_t a = 0; a < L; ++a) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) acc += jc[i * L + a] * rc[i];
      lin.gradient[(a / nc) * nodes + cn[a % nc]] += w * acc;
    }
    const std::size_t* slot = &scatter_[c * L * L];
    for (std::size_t a = 0; a < L; ++a)
      for (std::size_t b = 0; b < L; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += jc[i * L + a] * jc[i * L + b];
        lin.normal.values[slot[a * L + b]] += w * acc;
      }

    if (with_jacobian) {
      auto& J = lin.jacobian;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t a = 0; a < L; ++a) {
          J.col_idx.push_back((a / nc) * nodes + cn[a % nc]);
          J.values.push_back(jc[i * L + a]);
        }
        J.row_ptr.push_back(J.col_idx.size());
      }
    }
  }

  double pen = 0.0;
  for (const auto& p : penalties_) {
    const std::size_t dof = p.field * nodes + p.node;
    const double d = u.values()[dof] - p.target;
    pen += p.weight * d * d;
    lin.penalty_residual.push_back(std::sqrt(p.weight) * d);
    lin.gradient[dof] += p.weight * d;
    lin.normal.values[lin.normal.find(dof, dof)] += p.weight;
  }
  if (!std::isfinite(pen)) throw DivergedError(grid_.cell_count(), "non-finite penalty residual");
  lin.energy = 0.5 * w * sum + 0.5 * pen;
  return lin;
}

SparseMatrix Problem::full_jacobian(const NodalField& u) const {
  SparseMatrix J = linearize(u, true).jacobian;
  J.rows += penalties_.size();
  for (const auto& p : penalties_) {
    J.col_idx.push_back(p.field * grid_.node_count() + p.node);
    J.values.push_back(std::sqrt(p.weight));
    J.row_ptr.push_back(J.col_idx.size());
  }
  return J;
}

EnergyValue evaluate_energy(const Problem& problem, const NodalField& u, bool breakdown) {
  return problem.energy(u, breakdown);
}

Linearization evaluate_residual_and_jacobian(const Problem& problem, const NodalField& u) {
  return problem.linearize(u, true);
}

double fd_jacobian_check(const Problem& problem, const NodalField& u, std::size_t probes,
                         std::uint64_t seed) {
  if (probes == 0) throw Error(ErrorCode::invalid_argument, "fd_jacobian_check needs probes >= 1");
  const SparseMatrix J = problem.full_jacobian(u);
  detail::Rng rng(seed);
  const double unorm = norm2(u.values());
  const double scale = unorm > 0.0 ? unorm : std::sqrt(static_cast<double>(u.size()));
  double worst = 0.0;
  for (std::size_t p = 0; p < probes; ++p) {
    std::vector<double> h(u.size());
    for (double& v : h) v = rng.symmetric();
    const double hn = norm2(h);
    for (double& v : h) v *= scale / hn;
    const double eps = 1e-5;

    NodalField up = u, um = u;
    for (std::size_t i = 0; i < h.size(); ++i) {
      up.values()[i] += eps * h[i];
      um.values()[i] -= eps * h[i];
    }
    const auto fp = problem.residual_vector(up);
    const auto fm = problem.residual_vector(um);
    const auto jh = spmv(J, h);
    double diff = 0.0;
    for (std::size_t i = 0; i < jh.size(); ++i) {
      const double d = (fp[i] - fm[i]) / (2.0 * eps) - jh[i];
      diff += d * d;
    }
    const double ref = norm2(jh);
    const double err = ref > 0.0 ? std::sqrt(diff) / ref : std::sqrt(diff);
    worst = std::max(worst, err);
  }
  return worst;
}

namespace {

class ExponentialSystem final : public ResidualSystem {
 public:
  explicit ExponentialSystem(double weight) : weight_(weight) {}

  std::string name() const override { return "exp1d"; }
  std::size_t field_count() const override { return 1; }
  std::size_t residual_dim() const override { return 1; }
  bool supports(const Grid2D& grid) const override { return grid.dim() == 1; }

  void pointwise_residual(std::span<const double> jet, std::size_t,
                          std::span<double> out) const override {
    out[0] = jet[1] - jet[0];
  }
  void pointwise_jacobian(std::span<const double>, std::size_t,
                          std::span<double> out) const override {
    out[0] = -1.0;
    out[1] = 1.0;
  }
  std::vector<BoundaryPenalty> boundary_penalties(const Grid2D&) const override {
    return {{0, 0, 1.0, weight_}};
  }

 private:
  double weight_;
};

class PoissonSystem final : public ResidualSystem {
 public:
  PoissonSystem(double f, double g, double weight) : f_(f), g_(g), weight_(weight) {}

  std::string name() const override { return "poisson2d"; }
  std::size_t field_count() const override { return 1; }
  std::size_t residual_dim() const override { return 2; }
  bool supports(const Grid2D& grid) const override { return grid.dim() == 2; }

  void pointwise_residual(std::span<const double> jet, std::size_t,
                          std::span<double> out) const override {
    out[0] = jet[1] - f_;
    out[1] = jet[2] - g_;
  }
  void pointwise_jacobian(std::span<const double>, std::size_t,
                          std::span<double> out) const override {
    const double j[6] = {0, 1, 0, 0, 0, 1};
    std::copy(j, j + 6, out.begin());
  }
  std::vector<BoundaryPenalty> boundary_penalties(const Grid2D&) const override {
    return {{0, 0, 0.0, weight_}};
  }

 private:
  double f_, g_, weight_;
};

class ValueSystem final : public ResidualSystem {
 public:
  explicit ValueSystem(double target) : target_(target) {}

  std::string name() const override { return "value"; }
  std::size_t field_count() const override { return 1; }
  std::size_t residual_dim() const override { return 1; }
  bool supports(const Grid2D&) const override { return true; }

  void pointwise_residual(std::span<const double> jet, std::size_t,
                          std::span<double> out) const override {
    out[0] = jet[0] - target_;
  }
  void pointwise_jacobian(std::span<const double>, std::size_t js,
                          std::span<double> out) const override {
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(js), 0.0);
    out[0] = 1.0;
  }

 private:
  double target_;
};

class FaultySystem final : public ResidualSystem {
 public:
  FaultySystem(SystemPtr inner, std::size_t row, std::size_t col, double delta)
      : inner_(std::move(inner)), row_(row), col_(col), delta_(delta) {}

  std::string name() const override { return inner_->name(); }
  std::size_t field_count() const override { return inner_->field_count(); }
  std::size_t residual_dim() const override { return inner_->residual_dim(); }
  bool supports(const Grid2D& grid) const override { return inner_->supports(grid); }

  void pointwise_residual(std::span<const double> jet, std::size_t js,
                          std::span<double> out) const override {
    inner_->pointwise_residual(jet, js, out);
  }
  void pointwise_jacobian(std::span<const double> jet, std::size_t js,
                          std::span<double> out) const override {
    inner_->pointwise_jacobian(jet, js, out);
    out[row_ * inner_->field_count() * js + col_] += delta_;
  }
  std::vector<BoundaryPenalty> boundary_penalties(const Grid2D& grid) const override {
    return inner_->boundary_penalties(grid);
  }

 private:
  SystemPtr inner_;
  std::size_t row_, col_;
  double delta_;
};

}  // namespace

SystemPtr model_problem_exponential(double penalty_weight) {
  return std::make_shared<ExponentialSystem>(penalty_weight);
}

SystemPtr model_problem_linear_poisson(double f, double g, double penalty_weight) {
  return std::make_shared<PoissonSystem>(f, g, penalty_weight);
}

SystemPtr value_residual(double target) { return std::make_shared<ValueSystem>(target); }

SystemPtr with_jacobian_fault(SystemPtr inner, std::size_t row, std::size_t col, double delta) {
  return std::make_shared<FaultySystem>(std::move(inner), row, col, delta);
}

}  // namespace sgflow
