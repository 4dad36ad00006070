#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sgflow/error.hpp"
#include "sgflow/grid_jet.hpp"
#include "sgflow/sparse.hpp"

using namespace sgflow;

namespace {

NodalField sample(const Grid2D& g, auto&& fn) {
  NodalField u(g.node_count(), 1);
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i < g.nx(); ++i) u(0, g.node(i, j)) = fn(g.x(i), g.y(j));
  return u;
}

}  // namespace

TEST(Grid, CountsAndSpacing) {
  const Grid2D g(5, 3, 2.0, 1.0);
  EXPECT_EQ(g.cell_count(), 8u);
  EXPECT_DOUBLE_EQ(g.hx(), 0.5);
  EXPECT_DOUBLE_EQ(g.hy(), 0.5);
  EXPECT_DOUBLE_EQ(g.cell_weight(), 0.25);
  const Grid2D l = Grid2D::line(9, 2.0);
  EXPECT_EQ(l.cell_count(), 8u);
  EXPECT_EQ(l.dim(), 1);
  EXPECT_DOUBLE_EQ(l.cell_weight(), 0.25);
}

TEST(Grid, WeightsSumToArea) {
  for (const Grid2D& g : {Grid2D(7, 4, 1.3, 2.9), Grid2D(48, 48, 4, 4), Grid2D::line(33, 1.7)}) {
    const double area = g.dim() == 1 ? g.lx() : g.lx() * g.ly();
    EXPECT_NEAR(g.cell_weight() * static_cast<double>(g.cell_count()), area, 1e-12 * area);
  }
}

TEST(Grid, RejectsDegenerate) {
  EXPECT_THROW(Grid2D(1, 3, 1, 1), Error);
  EXPECT_THROW(Grid2D(3, 0, 1, 1), Error);
  EXPECT_THROW(Grid2D(3, 3, -1, 1), Error);
  EXPECT_THROW(Grid2D(3, 3, 1, 0), Error);
}

TEST(Jet, ConstantField) {
  const Grid2D g(6, 5, 1.0, 2.0);
  const JetField j = apply_jet(g, NodalField(g.node_count(), 1, 3.0));
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    EXPECT_EQ(j.at(c, 0, 0), 3.0);
    EXPECT_EQ(j.at(c, 0, 1), 0.0);
    EXPECT_EQ(j.at(c, 0, 2), 0.0);
  }
}

TEST(Jet, LinearInXOnThreeByThree) {
  const Grid2D g(3, 3, 2.0, 2.0);
  const JetField j = apply_jet(g, sample(g, [](double x, double) { return x; }));
  const double expect[4][3] = {{0.5, 1, 0}, {1.5, 1, 0}, {0.5, 1, 0}, {1.5, 1, 0}};
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(j.at(c, 0, k), expect[c][k]);
}

TEST(Jet, BilinearSingleCell) {
  const Grid2D g(2, 2, 1.0, 1.0);
  const JetField j = apply_jet(g, sample(g, [](double x, double y) { return x * y; }));
  EXPECT_DOUBLE_EQ(j.at(0, 0, 0), 0.25);
  EXPECT_DOUBLE_EQ(j.at(0, 0, 1), 0.5);
  EXPECT_DOUBLE_EQ(j.at(0, 0, 2), 0.5);
}

TEST(Jet, AffineExactness) {
  const Grid2D g(7, 6, 1.7, 0.9);
  const double a = 0.3, b = -1.25, c = 2.5;
  const JetField j = apply_jet(g, sample(g, [&](double x, double y) { return a + b * x + c * y; }));
  for (std::size_t cell = 0; cell < g.cell_count(); ++cell) {
    const auto xy = g.cell_center(cell);
    EXPECT_NEAR(j.at(cell, 0, 0), a + b * xy[0] + c * xy[1], 1e-13);
    EXPECT_NEAR(j.at(cell, 0, 1), b, 1e-13);
    EXPECT_NEAR(j.at(cell, 0, 2), c, 1e-13);
  }
}

TEST(Jet, MatchesDenseOperator) {
  for (const Grid2D& g : {Grid2D(5, 4, 1.0, 3.0), Grid2D::line(6, 2.0)}) {
    const std::size_t fields = 2;
    const auto v = oracle::random_vector(g.node_count() * fields, 3);
    const JetField j = apply_jet(g, NodalField(v, fields));
    const oracle::Vec ref = oracle::dense_jet(g, fields) * oracle::to_vec(v);
    EXPECT_LT(oracle::rel_err(oracle::to_vec(j.data()), ref), 1e-14);
  }
}

TEST(Jet, ShapeMismatch) {
  const Grid2D g(4, 4, 1, 1);
  EXPECT_THROW(apply_jet(g, NodalField(15, 1)), Error);
  EXPECT_THROW(apply_jet_adjoint(g, JetField(8, 1, 3)), Error);
}

TEST(JetAdjoint, ZeroInZeroOut) {
  const Grid2D g(4, 3, 1, 1);
  const NodalField out = apply_jet_adjoint(g, JetField(g.cell_count(), 2, 3));
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(JetAdjoint, SingleCellValueComponent) {
  const Grid2D g(2, 2, 0.5, 0.8);
  JetField j(1, 1, 3);
  j.at(0, 0, 0) = 1.0;
  const NodalField out = apply_jet_adjoint(g, j);
  for (double v : out.values()) EXPECT_DOUBLE_EQ(v, 0.25 * g.cell_weight());
}

TEST(JetAdjoint, InnerProductIdentity) {
  const Grid2D g(6, 5, 1.1, 0.7);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto uv = oracle::random_vector(g.node_count() * 3, 100 + s);
    JetField j(g.cell_count(), 3, 3);
    j.data() = oracle::random_vector(j.data().size(), 200 + s);
    const double lhs = weighted_dot(g, apply_jet(g, NodalField(uv, 3)), j);
    const double rhs = dot(uv, apply_jet_adjoint(g, j).values());
    EXPECT_LT(std::abs(lhs - rhs), 1e-12 * std::abs(lhs));
  }
}

TEST(Gram, SymmetricExactly) {
  const SparseMatrix gm = assemble_gram(Grid2D(5, 4, 1, 2), 2);
  EXPECT_TRUE(gm.symmetric);
  for (std::size_t r = 0; r < gm.rows; ++r)
    for (std::size_t k = gm.row_ptr[r]; k < gm.row_ptr[r + 1]; ++k)
      EXPECT_EQ(gm.values[k], gm.coeff(gm.col_idx[k], r));
}

TEST(Gram, PositiveOnRandomVectors) {
  const Grid2D g(4, 4, 1, 1);
  const SparseMatrix gm = assemble_gram(g);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto x = oracle::random_vector(g.node_count(), s);
    EXPECT_GT(dot(x, spmv(gm, x)), 0.0);
  }
}

TEST(Gram, SingleCellMatchesDenseSquare) {
  const Grid2D g(2, 2, 1, 1);
  const oracle::Mat ref = oracle::dense_gram(g, 1);
  const DenseMatrix got = to_dense(assemble_gram(g));
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(got(r, c), ref(r, c), 1e-15);
  // the explicit 4x4 matrix: 1/16 + (1/4)(sx sx' + sy sy')
  EXPECT_DOUBLE_EQ(got(0, 0), 1.0 / 16 + 0.5);
  EXPECT_DOUBLE_EQ(got(0, 3), 1.0 / 16 - 0.5);
  EXPECT_DOUBLE_EQ(got(0, 1), 1.0 / 16);
}

TEST(Gram, AgreesWithCompositionOnBasis) {
  for (const Grid2D& g : {Grid2D(5, 5, 1, 1), Grid2D(3, 4, 2, 1), Grid2D::line(5, 1)}) {
    const SparseMatrix gm = assemble_gram(g);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
      NodalField e(g.node_count(), 1);
      e(0, k) = 1.0;
      const NodalField col = apply_jet_adjoint(g, apply_jet(g, e));
      for (std::size_t r = 0; r < g.node_count(); ++r) EXPECT_NEAR(gm.coeff(r, k), col(0, r), 1e-12);
    }
  }
}

TEST(Gram, CheckerboardIsTheKernelIn2D) {
  // The 4-corner stencil cannot see (-1)^(i+j); everything else is seen.
  const Grid2D g(5, 4, 1, 1);
  const oracle::Mat gm = oracle::dense_gram(g, 1);
  Eigen::SelfAdjointEigenSolver<oracle::Mat> es(gm);
  EXPECT_LT(std::abs(es.eigenvalues()(0)), 1e-12);
  EXPECT_GT(es.eigenvalues()(1), 1e-3);
  const oracle::Mat c = oracle::checkerboard_basis(g, 1);
  EXPECT_LT((gm * c).norm(), 1e-12);
}

TEST(Projector, RemovesCheckerboardOnly) {
  const Grid2D g(5, 4, 1, 1);
  const CheckerboardProjector p(g, 2);
  ASSERT_TRUE(p.active());
  auto x = oracle::random_vector(g.node_count() * 2, 9);
  const auto orig = x;
  p.apply(x);
  const oracle::Mat c = oracle::checkerboard_basis(g, 2);
  EXPECT_LT((c.transpose() * oracle::to_vec(x)).norm(), 1e-13);
  // idempotent
  auto y = x;
  p.apply(y);
  EXPECT_LT(oracle::rel_err(oracle::to_vec(y), oracle::to_vec(x)), 1e-15);
  // removed part is a checkerboard combination
  const oracle::Vec removed = oracle::to_vec(orig) - oracle::to_vec(x);
  const oracle::Vec coef = c.colPivHouseholderQr().solve(removed);
  EXPECT_LT((c * coef - removed).norm(), 1e-13);
  EXPECT_FALSE(CheckerboardProjector(Grid2D::line(5, 1), 1).active());
}
