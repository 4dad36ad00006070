#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "sgflow/sparse.hpp"

namespace sgflow {

/// Rectangular node grid on [0, lx] x [0, ly]. ny == 1 selects a 1D grid on
/// [0, lx]; the y extent is then ignored.
///
/// Nodes are numbered row-major, node(i, j) = i + nx * j. Cell (i, j) has the
/// corners node(i, j), node(i+1, j), node(i, j+1), node(i+1, j+1), in that
/// order (two corners in 1D).
class Grid2D {
 public:
  Grid2D(std::size_t nx, std::size_t ny, double lx, double ly);

  static Grid2D line(std::size_t nx, double lx) { return Grid2D(nx, 1, lx, 1.0); }

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  double lx() const noexcept { return lx_; }
  double ly() const noexcept { return ly_; }
  double hx() const noexcept { return hx_; }
  double hy() const noexcept { return hy_; }

  int dim() const noexcept { return ny_ == 1 ? 1 : 2; }
  std::size_t jet_size() const noexcept { return static_cast<std::size_t>(dim()) + 1; }
  std::size_t corner_count() const noexcept { return ny_ == 1 ? 2 : 4; }

  std::size_t node_count() const noexcept { return nx_ * ny_; }
  std::size_t cells_x() const noexcept { return nx_ - 1; }
  std::size_t cells_y() const noexcept { return ny_ == 1 ? 1 : ny_ - 1; }
  std::size_t cell_count() const noexcept { return cells_x() * cells_y(); }

  /// Midpoint quadrature weight, identical for every cell.
  double cell_weight() const noexcept { return ny_ == 1 ? hx_ : hx_ * hy_; }

  std::size_t node(std::size_t i, std::size_t j) const noexcept { return i + nx_ * j; }
  double x(std::size_t i) const noexcept { return hx_ * static_cast<double>(i); }
  double y(std::size_t j) const noexcept { return ny_ == 1 ? 0.0 : hy_ * static_cast<double>(j); }
  std::array<double, 2> cell_center(std::size_t cell) const noexcept;

  /// Corner node indices of a cell; only the first corner_count() are valid.
  std::array<std::size_t, 4> cell_nodes(std::size_t cell) const noexcept;

  /// Coefficient of corner k in jet component comp (0 = value, 1 = d/dx,
  /// 2 = d/dy) of the cell stencil. The stencil is the same for every cell.
  double stencil(std::size_t comp, std::size_t corner) const noexcept {
    return stencil_[comp][corner];
  }

  bool operator==(const Grid2D& other) const noexcept {
    return nx_ == other.nx_ && ny_ == other.ny_ && lx_ == other.lx_ && ly_ == other.ly_;
  }

 private:
  std::size_t nx_, ny_;
  double lx_, ly_, hx_, hy_;
  std::array<std::array<double, 4>, 3> stencil_{};
};

/// One or more scalar fields sampled at grid nodes, stacked field-major: all
/// nodes of field 0, then all nodes of field 1, ...
class NodalField {
 public:
  NodalField() = default;
  NodalField(std::size_t node_count, std::size_t field_count, double fill = 0.0)
      : values_(node_count * field_count, fill), field_count_(field_count) {}
  NodalField(std::vector<double> values, std::size_t field_count);

  std::size_t field_count() const noexcept { return field_count_; }
  std::size_t node_count() const noexcept {
    return field_count_ == 0 ? 0 : values_.size() / field_count_;
  }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> field(std::size_t f) noexcept {
    return std::span<double>(values_).subspan(f * node_count(), node_count());
  }
  std::span<const double> field(std::size_t f) const noexcept {
    return std::span<const double>(values_).subspan(f * node_count(), node_count());
  }

  double& operator()(std::size_t f, std::size_t node) noexcept {
    return values_[f * node_count() + node];
  }
  double operator()(std::size_t f, std::size_t node) const noexcept {
    return values_[f * node_count() + node];
  }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool all_finite() const noexcept;

  bool operator==(const NodalField&) const = default;

 private:
  std::vector<double> values_;
  std::size_t field_count_ = 0;
};

/// Cell-centred first-order jets. Stored cell-major so that one cell's jets
/// (all fields, all components) are contiguous: at(cell, field, comp).
class JetField {
 public:
  JetField(std::size_t cell_count, std::size_t field_count, std::size_t jet_size)
      : cells_(cell_count), fields_(field_count), jet_size_(jet_size),
        data_(cell_count * field_count * jet_size, 0.0) {}

  std::size_t cell_count() const noexcept { return cells_; }
  std::size_t field_count() const noexcept { return fields_; }
  std::size_t jet_size() const noexcept { return jet_size_; }

  double& at(std::size_t cell, std::size_t field, std::size_t comp) noexcept {
    return data_[(cell * fields_ + field) * jet_size_ + comp];
  }
  double at(std::size_t cell, std::size_t field, std::size_t comp) const noexcept {
    return data_[(cell * fields_ + field) * jet_size_ + comp];
  }

  /// All jets of one cell: field_count() * jet_size() values.
  std::span<const double> cell(std::size_t c) const noexcept {
    return std::span<const double>(data_).subspan(c * fields_ * jet_size_, fields_ * jet_size_);
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t cells_, fields_, jet_size_;
  std::vector<double> data_;
};

/// D: nodal fields to cell jets (4-corner mean, edge-pair differences).
JetField apply_jet(const Grid2D& grid, const NodalField& u);

/// D^T W: adjoint of apply_jet for the nodal Euclidean and the cell-weighted
/// jet inner products.
NodalField apply_jet_adjoint(const Grid2D& grid, const JetField& j);

/// <a, b>_W over jets.
double weighted_dot(const Grid2D& grid, const JetField& a, const JetField& b);

/// G = D^T W D for field_count stacked fields (block diagonal over fields).
///
/// In 2D the jet operator annihilates the checkerboard (-1)^(i+j), so G is
/// positive definite only on the complement of that mode in each field (see
/// CheckerboardProjector).
SparseMatrix assemble_gram(const Grid2D& grid, std::size_t field_count = 1);

/// Euclidean-orthogonal projector onto the complement of the per-field
/// checkerboard modes, i.e. the null space of D. Identity on 1D grids.
class CheckerboardProjector {
 public:
  CheckerboardProjector(const Grid2D& grid, std::size_t field_count);

  bool active() const noexcept { return !sign_.empty(); }
  void apply(std::span<double> x) const noexcept;
  /// Checkerboard component of one field, (c . x_f) / (c . c).
  double coefficient(std::span<const double> x, std::size_t field) const noexcept;

 private:
  std::size_t nodes_, fields_;
  std::vector<double> sign_;
};

}  // namespace sgflow
