#include "sgflow/sparse.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sgflow/error.hpp"

namespace sgflow {

double SparseMatrix::coeff(std::size_t r, std::size_t c) const noexcept {
  const std::size_t k = find(r, c);
  return k == nnz() ? 0.0 : values[k];
}

std::size_t SparseMatrix::find(std::size_t r, std::size_t c) const noexcept {
  const auto begin = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
  const auto end = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
  const auto it = std::lower_bound(begin, end, c);
  if (it == end || *it != c) return nnz();
  return static_cast<std::size_t>(it - col_idx.begin());
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(std::min(rows, cols), 0.0);
  for (std::size_t r = 0; r < d.size(); ++r) d[r] = coeff(r, r);
  return d;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  SparseMatrix a;
  a.rows = a.cols = n;
  a.row_ptr.resize(n + 1);
  a.col_idx.resize(n);
  a.values.assign(n, 1.0);
  std::iota(a.row_ptr.begin(), a.row_ptr.end(), std::size_t{0});
  std::iota(a.col_idx.begin(), a.col_idx.end(), std::size_t{0});
  a.symmetric = true;
  return a;
}

void TripletBuilder::add(std::size_t r, std::size_t c, double v) {
  if (r >= rows_ || c >= cols_) throw Error(ErrorCode::shape_mismatch, "triplet out of range");
  entries_.push_back({r, c, v});
}

SparseMatrix TripletBuilder::build(bool symmetric) const {
  std::vector<std::size_t> order(entries_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = entries_[a];
    const auto& y = entries_[b];
    return x.r != y.r ? x.r < y.r : x.c < y.c;
  });

  SparseMatrix m;
  m.rows = rows_;
  m.cols = cols_;
  m.symmetric = symmetric;
  m.row_ptr.assign(rows_ + 1, 0);
  for (std::size_t k = 0; k < order.size();) {
    const auto& e = entries_[order[k]];
    double sum = 0.0;
    std::size_t k2 = k;
    while (k2 < order.size() && entries_[order[k2]].r == e.r && entries_[order[k2]].c == e.c)
      sum += entries_[order[k2++]].v;
    m.col_idx.push_back(e.c);
    m.values.push_back(sum);
    ++m.row_ptr[e.r + 1];
    k = k2;
  }
  std::partial_sum(m.row_ptr.begin(), m.row_ptr.end(), m.row_ptr.begin());
  return m;
}

DenseMatrix to_dense(const SparseMatrix& a) {
  DenseMatrix d(a.rows, a.cols);
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) d(r, a.col_idx[k]) = a.values[k];
  return d;
}

void spmv(const SparseMatrix& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.cols || y.size() != a.rows)
    throw Error(ErrorCode::shape_mismatch, "spmv dimension mismatch");
  for (std::size_t r = 0; r < a.rows; ++r) {
    double acc = 0.0;
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) acc += a.values[k] * x[a.col_idx[k]];
    y[r] = acc;
  }
}

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x) {
  std::vector<double> y(a.rows);
  spmv(a, x, y);
  return y;
}

void spmv_transpose(const SparseMatrix& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.rows || y.size() != a.cols)
    throw Error(ErrorCode::shape_mismatch, "transposed spmv dimension mismatch");
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) y[a.col_idx[k]] += a.values[k] * x[r];
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

CgResult cg_solve(const LinearOperator& a, std::span<const double> b, const CgOptions& options) {
  const std::size_t n = a.dimension;
  if (b.size() != n) throw Error(ErrorCode::shape_mismatch, "cg right-hand side has wrong size");
  if (!(options.tol > 0.0)) throw Error(ErrorCode::invalid_argument, "cg tolerance must be positive");
  const std::size_t max_iter = options.max_iter == 0 ? 10 * n : options.max_iter;

  auto project = [&](std::span<double> v) {
    if (a.projector) a.projector(v);
  };
  auto precondition = [&](std::span<const double> r, std::span<double> z) {
    if (a.diagonal.empty()) {
      std::copy(r.begin(), r.end(), z.begin());
    } else {
      for (std::size_t i = 0; i < n; ++i) z[i] = a.diagonal[i] > 0.0 ? r[i] / a.diagonal[i] : r[i];
    }
    project(z);
  };
  auto check_finite = [](double v, const char* what) {
    if (!std::isfinite(v))
      throw Error(ErrorCode::numerical_breakdown, std::string("non-finite ") + what + " in cg");
  };

  CgResult result;
  result.x.assign(n, 0.0);
  std::vector<double> r(b.begin(), b.end());
  project(r);
  const double bnorm = norm2(r);
  check_finite(bnorm, "right-hand side");
  if (bnorm == 0.0) {
    result.report = {0, 0.0, true};
    return result;
  }

  std::vector<double> z(n), p(n), q(n);
  auto& x = result.x;

  auto true_residual = [&]() {
    a.apply(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    project(r);
    return norm2(r) / bnorm;
  };

  precondition(r, z);
  p = z;
  double rz = dot(r, z);
  std::size_t it = 0;
  double rel = 1.0;
  int restarts = 0;
  while (it < max_iter) {
    a.apply(p, q);
    project(q);
    const double pq = dot(p, q);
    check_finite(pq, "curvature");
    if (pq <= 0.0) break;
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    ++it;
    rel = norm2(r) / bnorm;
    check_finite(rel, "residual");
    if (rel <= options.tol) {
      rel = true_residual();
      if (rel <= options.tol) break;
      // Recurrence drifted from the true residual: restart from it.
      if (++restarts > 5) break;
      precondition(r, z);
      p = z;
      rz = dot(r, z);
      continue;
    }
    precondition(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  rel = true_residual();
  result.report = {it, rel, rel <= options.tol};
  return result;
}

CgResult cg_solve(const SparseMatrix& a, std::span<const double> b, const CgOptions& options,
                  std::function<void(std::span<double>)> projector) {
  if (!a.square()) throw Error(ErrorCode::shape_mismatch, "cg needs a square operator");
  if (!a.symmetric) throw Error(ErrorCode::invalid_argument, "cg needs an operator flagged symmetric");
  LinearOperator op;
  op.dimension = a.rows;
  op.apply = [&a](std::span<const double> x, std::span<double> y) { spmv(a, x, y); };
  op.diagonal = a.diagonal();
  op.projector = std::move(projector);
  return cg_solve(op, b, options);
}

std::vector<double> dense_solve(const DenseMatrix& a, std::span<const double> b) {
  if (a.rows != a.cols) throw Error(ErrorCode::shape_mismatch, "dense_solve needs a square matrix");
  if (b.size() != a.rows) throw Error(ErrorCode::shape_mismatch, "dense_solve right-hand side size");
  const auto n = static_cast<Eigen::Index>(a.rows);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      a.data.data(), n, n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) throw Error(ErrorCode::singular, "matrix is singular to working precision");
  Eigen::Map<const Eigen::VectorXd> rhs(b.data(), n);
  const Eigen::VectorXd x = lu.solve(rhs);
  return {x.data(), x.data() + x.size()};
}

}  // namespace sgflow
