#pragma once

#include <vector>

#include "sgflow/residual_system.hpp"
#include "sgflow/sparse.hpp"

namespace sgflow {

enum class DirectionKind { euclidean, sobolev, lm_primal, lm_dual, gauss_newton };

const char* to_string(DirectionKind kind) noexcept;

struct DirectionRequest {
  DirectionKind kind = DirectionKind::lm_primal;
  double lambda = 1.0;          ///< damping for the LM kinds
  double regularization = 0.0;  ///< Gauss-Newton: (N + reg G)
  double lambda_floor = 1e-10;
  CgOptions solver{};
};

/// The update is u - direction.
struct DirectionResult {
  std::vector<double> direction;
  /// <direction, direction> in the metric the direction is a gradient for.
  double metric_norm_sq = 0.0;
  SolveReport report{};
};

// Damping convention: the LM direction is
//
//     delta = lambda (lambda G + N)^{-1} g = (G + N / lambda)^{-1} g,
//
// the gradient of E in the variable inner product <v, w>_u = v^T G w +
// (1/lambda) (Jv)^T W (Jv). Large lambda approaches the Sobolev gradient
// G^{-1} g; small lambda approaches lambda times the Gauss-Newton step. The
// classical form (N + mu G)^{-1} g is recovered with mu = lambda and the
// result divided by lambda.
//
// All solves involving G run on the checkerboard-free subspace of the
// Problem's projector, where G is positive definite.

std::vector<double> euclidean_gradient(const Problem& problem, const NodalField& u);

DirectionResult sobolev_gradient(const Problem& problem, const Linearization& lin,
                                 const CgOptions& solver = {});

DirectionResult lm_direction_primal(const Problem& problem, const Linearization& lin,
                                    double lambda, const CgOptions& solver = {},
                                    double lambda_floor = 1e-10);

/// Same direction through the residual-space capacitance system
/// (W^{-1} + (1/lambda) J G^{-1} J^T) y = r, delta = G^{-1} J^T y, with J the
/// full Jacobian (cells and penalty rows). Each G^{-1} is an inner CG solve at
/// a tolerance ten times tighter than the outer one. lin must carry the
/// Jacobian.
DirectionResult lm_direction_dual(const Problem& problem, const Linearization& lin,
                                  double lambda, const CgOptions& solver = {},
                                  double lambda_floor = 1e-10);

/// (N + regularization G) delta = g. With regularization == 0 the normal
/// matrix is probed for singularity and Error(singular) is thrown when it is
/// (numerically) rank deficient.
DirectionResult gauss_newton_direction(const Problem& problem, const Linearization& lin,
                                       double regularization, const CgOptions& solver = {});

DirectionResult compute_direction(const Problem& problem, const Linearization& lin,
                                  const DirectionRequest& request);

/// <v, w>_u for the LM metric at damping lambda.
double lm_metric(const Problem& problem, const Linearization& lin, double lambda,
                 std::span<const double> v, std::span<const double> w);

}  // namespace sgflow
