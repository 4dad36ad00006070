#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sgflow/grid_jet.hpp"
#include "sgflow/sparse.hpp"

namespace sgflow {

/// Weighted nodal penalty: contributes weight * (u(field, node) - target)^2 / 2
/// to the energy.
struct BoundaryPenalty {
  std::size_t field = 0;
  std::size_t node = 0;
  double target = 0.0;
  double weight = 0.0;
};

/// A residual F acting pointwise on first-order jets. The jet of one cell is
/// passed field by field, each field contributing jet_size values
/// (u0, ux[, uy]).
class ResidualSystem {
 public:
  virtual ~ResidualSystem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t field_count() const = 0;
  virtual std::size_t residual_dim() const = 0;
  /// Grid dimensions this system is defined for.
  virtual bool supports(const Grid2D& grid) const = 0;

  virtual void pointwise_residual(std::span<const double> jet, std::size_t jet_size,
                                  std::span<double> out) const = 0;
  /// Row-major residual_dim() x (field_count() * jet_size) matrix of partials.
  virtual void pointwise_jacobian(std::span<const double> jet, std::size_t jet_size,
                                  std::span<double> out) const = 0;

  virtual std::vector<BoundaryPenalty> boundary_penalties(const Grid2D& /*grid*/) const {
    return {};
  }
};

using SystemPtr = std::shared_ptr<const ResidualSystem>;

struct EnergyValue {
  double value = 0.0;
  /// Per-cell ||F(jet)||, filled on request.
  std::vector<double> cell_breakdown;
};

/// Everything derived from one linearization of F(Du) about u.
struct Linearization {
  double energy = 0.0;
  std::vector<double> residual;  ///< F(Du) stacked cell-major, cells * m
  std::vector<double> penalty_residual;  ///< sqrt(weight) (u - target) per penalty
  std::vector<double> gradient;  ///< dE/du = J^T W r + penalty terms
  SparseMatrix normal;           ///< J^T W J + penalty Hessian
  SparseMatrix jacobian;         ///< (cells * m) x dofs; empty unless requested
};

/// A residual system bound to a grid, with the assembly structures that do not
/// depend on the state: the nodal coupling pattern shared by G and N, the
/// Gram operator G = D^T W D, and the penalty list.
class Problem {
 public:
  Problem(SystemPtr system, Grid2D grid);

  const ResidualSystem& system() const noexcept { return *system_; }
  const SystemPtr& system_ptr() const noexcept { return system_; }
  const Grid2D& grid() const noexcept { return grid_; }
  std::size_t field_count() const noexcept { return system_->field_count(); }
  std::size_t dof_count() const noexcept { return grid_.node_count() * field_count(); }
  std::size_t residual_count() const noexcept {
    return grid_.cell_count() * system_->residual_dim();
  }
  const std::vector<BoundaryPenalty>& penalties() const noexcept { return penalties_; }

  /// G on the shared pattern (zero off the field-diagonal blocks).
  const SparseMatrix& gram() const noexcept { return gram_; }
  const CheckerboardProjector& projector() const noexcept { return projector_; }

  EnergyValue energy(const NodalField& u, bool breakdown = false) const;
  /// Cell residuals followed by penalty residuals sqrt(w) (u - target).
  std::vector<double> residual_vector(const NodalField& u) const;
  Linearization linearize(const NodalField& u, bool with_jacobian = false) const;
  /// Jacobian of residual_vector(): (cells * m + penalties) x dofs.
  SparseMatrix full_jacobian(const NodalField& u) const;

  /// A zero nodal field of the right shape.
  NodalField zero_field() const { return NodalField(grid_.node_count(), field_count()); }
  void check_shape(const NodalField& u) const;

 private:
  SystemPtr system_;
  Grid2D grid_;
  std::vector<BoundaryPenalty> penalties_;
  SparseMatrix pattern_;
  SparseMatrix gram_;
  CheckerboardProjector projector_;
  /// For cell c, local pair (a, b) maps to pattern slot
  /// scatter_[(c * L + a) * L + b], with L = field_count * corner_count.
  std::vector<std::size_t> scatter_;

  void gather(const NodalField& u, std::size_t cell, std::span<double> local) const;
  void cell_jet(std::span<const double> local, std::span<double> jet) const;
};

/// E(u) = 1/2 sum_cells w |F(Du)|^2 + 1/2 sum_penalties weight (u - t)^2.
/// Throws DivergedError carrying the cell index for non-finite residuals.
EnergyValue evaluate_energy(const Problem& problem, const NodalField& u, bool breakdown = false);

/// Cell residual vector r and sparse Jacobian J = (pointwise Jacobian) . D.
Linearization evaluate_residual_and_jacobian(const Problem& problem, const NodalField& u);

/// max over random probes of |(F(u+eh) - F(u-eh)) / 2e - Jh| / |Jh|, with
/// F the full residual vector (cells and penalties).
double fd_jacobian_check(const Problem& problem, const NodalField& u, std::size_t probes,
                         std::uint64_t seed = 1);

/// 1D: F(Du) = ux - u on [0, lx] with penalty weight * (u(0) - 1)^2 / 2.
SystemPtr model_problem_exponential(double penalty_weight = 1e3);

/// 2D: F(Du) = (ux - f, uy - g), corner node 0 pinned to 0.
SystemPtr model_problem_linear_poisson(double f = 1.0, double g = 0.0,
                                       double penalty_weight = 1e3);

/// F(Du) = u0 - target: the value-extraction residual, J = value rows of D.
SystemPtr value_residual(double target = 0.0);

/// Wraps a system and adds delta to one pointwise Jacobian entry. Used to
/// demonstrate that fd_jacobian_check detects analytic Jacobian errors.
SystemPtr with_jacobian_fault(SystemPtr inner, std::size_t row = 0, std::size_t col = 0,
                              double delta = 0.1);

}  // namespace sgflow
