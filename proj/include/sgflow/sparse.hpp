#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace sgflow {

/// Compressed sparse rows. Column indices are strictly increasing within each
/// row. The symmetric flag is a promise made by the producer; cg_solve refuses
/// operators without it.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  std::vector<double> values;
  bool symmetric = false;

  std::size_t nnz() const noexcept { return values.size(); }
  bool square() const noexcept { return rows == cols; }

  /// Entry (r, c), zero if not stored.
  double coeff(std::size_t r, std::size_t c) const noexcept;
  /// Index into values of entry (r, c), or nnz() if not stored.
  std::size_t find(std::size_t r, std::size_t c) const noexcept;
  std::vector<double> diagonal() const;

  static SparseMatrix identity(std::size_t n);
};

/// Accumulates (row, col, value) triplets. Duplicates are summed in insertion
/// order, so the result does not depend on anything but the call sequence.
class TripletBuilder {
 public:
  TripletBuilder(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}

  void add(std::size_t r, std::size_t c, double v);
  SparseMatrix build(bool symmetric = false) const;

 private:
  struct Triplet {
    std::size_t r, c;
    double v;
  };
  std::size_t rows_, cols_;
  std::vector<Triplet> entries_;
};

/// Row-major dense matrix, used for small oracles.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
};

DenseMatrix to_dense(const SparseMatrix& a);

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x);
void spmv(const SparseMatrix& a, std::span<const double> x, std::span<double> y);
/// y = A^T x.
void spmv_transpose(const SparseMatrix& a, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double norm2(std::span<const double> a) noexcept;

struct SolveReport {
  std::size_t iterations = 0;
  double residual_norm = 0.0;  ///< final ||Ax - b|| / ||b||
  bool converged = false;
};

struct CgOptions {
  double tol = 1e-10;
  std::size_t max_iter = 0;  ///< 0 selects 10 * n
};

/// Symmetric operator given by its action. The optional diagonal enables
/// Jacobi preconditioning; the optional projector restricts the solve to a
/// subspace (Galerkin solve on range(P) with P applied to residuals, search
/// directions and the preconditioned residual).
struct LinearOperator {
  std::size_t dimension = 0;
  std::function<void(std::span<const double>, std::span<double>)> apply;
  std::vector<double> diagonal;
  std::function<void(std::span<double>)> projector;
};

struct CgResult {
  std::vector<double> x;
  SolveReport report;
};

/// Preconditioned conjugate gradients from x = 0. Throws
/// Error(numerical_breakdown) on NaN and Error(invalid_argument) for an
/// operator not flagged symmetric. A non-positive curvature p^T A p stops the
/// iteration with converged = false and the best iterate so far.
CgResult cg_solve(const SparseMatrix& a, std::span<const double> b, const CgOptions& options = {},
                  std::function<void(std::span<double>)> projector = {});
CgResult cg_solve(const LinearOperator& a, std::span<const double> b, const CgOptions& options = {});

/// Direct solve with full pivoting. Throws Error(singular) when A is singular
/// to working precision. Intended for small verification problems.
std::vector<double> dense_solve(const DenseMatrix& a, std::span<const double> b);

}  // namespace sgflow
