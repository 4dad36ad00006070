#include "sgflow/grid_jet.hpp"

#include <cmath>
#include <string>

#include "sgflow/error.hpp"

namespace sgflow {

Grid2D::Grid2D(std::size_t nx, std::size_t ny, double lx, double ly)
    : nx_(nx), ny_(ny), lx_(lx), ly_(ny == 1 ? 0.0 : ly) {
  if (nx < 2) throw Error(ErrorCode::invalid_argument, "grid needs nx >= 2");
  if (ny == 0) throw Error(ErrorCode::invalid_argument, "grid needs ny >= 1");
  if (!(lx > 0.0) || !std::isfinite(lx))
    throw Error(ErrorCode::invalid_argument, "grid needs a positive lx");
  if (ny > 1 && (!(ly > 0.0) || !std::isfinite(ly)))
    throw Error(ErrorCode::invalid_argument, "grid needs a positive ly");

  hx_ = lx_ / static_cast<double>(nx_ - 1);
  hy_ = ny_ == 1 ? 0.0 : ly_ / static_cast<double>(ny_ - 1);

  if (ny_ == 1) {
    stencil_[0] = {0.5, 0.5, 0.0, 0.0};
    stencil_[1] = {-1.0 / hx_, 1.0 / hx_, 0.0, 0.0};
  } else {
    const double ax = 0.5 / hx_;
    const double ay = 0.5 / hy_;
    // corners: (i,j) (i+1,j) (i,j+1) (i+1,j+1)
    stencil_[0] = {0.25, 0.25, 0.25, 0.25};
    stencil_[1] = {-ax, ax, -ax, ax};
    stencil_[2] = {-ay, -ay, ay, ay};
  }
}

std::array<double, 2> Grid2D::cell_center(std::size_t cell) const noexcept {
  const std::size_t i = cell % cells_x();
  const std::size_t j = cell / cells_x();
  if (ny_ == 1) return {hx_ * (static_cast<double>(i) + 0.5), 0.0};
  return {hx_ * (static_cast<double>(i) + 0.5), hy_ * (static_cast<double>(j) + 0.5)};
}

std::array<std::size_t, 4> Grid2D::cell_nodes(std::size_t cell) const noexcept {
  const std::size_t i = cell % cells_x();
  const std::size_t j = cell / cells_x();
  if (ny_ == 1) return {i, i + 1, 0, 0};
  return {node(i, j), node(i + 1, j), node(i, j + 1), node(i + 1, j + 1)};
}

NodalField::NodalField(std::vector<double> values, std::size_t field_count)
    : values_(std::move(values)), field_count_(field_count) {
  if (field_count_ == 0 || values_.size() % field_count_ != 0)
    throw Error(ErrorCode::shape_mismatch, "nodal values do not split into equal fields");
}

bool NodalField::all_finite() const noexcept {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

JetField apply_jet(const Grid2D& grid, const NodalField& u) {
  if (u.field_count() == 0 || u.size() != grid.node_count() * u.field_count())
    throw Error(ErrorCode::shape_mismatch,
                "nodal field of size " + std::to_string(u.size()) +
                    " does not match grid with " + std::to_string(grid.node_count()) + " nodes");
  const std::size_t js = grid.jet_size();
  const std::size_t nc = grid.corner_count();
  JetField jets(grid.cell_count(), u.field_count(), js);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const auto nodes = grid.cell_nodes(c);
    for (std::size_t f = 0; f < u.field_count(); ++f) {
      const auto uf = u.field(f);
      for (std::size_t k = 0; k < js; ++k) {
        double acc = 0.0;
        for (std::size_t q = 0; q < nc; ++q) acc += grid.stencil(k, q) * uf[nodes[q]];
        jets.at(c, f, k) = acc;
      }
    }
  }
  return jets;
}

NodalField apply_jet_adjoint(const Grid2D& grid, const JetField& j) {
  if (j.cell_count() != grid.cell_count() || j.jet_size() != grid.jet_size())
    throw Error(ErrorCode::shape_mismatch, "jet field does not match grid cells");
  const std::size_t js = grid.jet_size();
  const std::size_t nc = grid.corner_count();
  const double w = grid.cell_weight();
  NodalField out(grid.node_count(), j.field_count());
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const auto nodes = grid.cell_nodes(c);
    for (std::size_t f = 0; f < j.field_count(); ++f) {
      auto of = out.field(f);
      for (std::size_t q = 0; q < nc; ++q) {
        double acc = 0.0;
        for (std::size_t k = 0; k < js; ++k) acc += grid.stencil(k, q) * j.at(c, f, k);
        of[nodes[q]] += w * acc;
      }
    }
  }
  return out;
}

double weighted_dot(const Grid2D& grid, const JetField& a, const JetField& b) {
  if (a.data().size() != b.data().size())
    throw Error(ErrorCode::shape_mismatch, "jet fields differ in size");
  return grid.cell_weight() * dot(a.data(), b.data());
}

SparseMatrix assemble_gram(const Grid2D& grid, std::size_t field_count) {
  if (field_count == 0) throw Error(ErrorCode::invalid_argument, "field_count must be positive");
  const std::size_t js = grid.jet_size();
  const std::size_t nc = grid.corner_count();
  const std::size_t nodes = grid.node_count();
  const double w = grid.cell_weight();

  // Local 4x4 (2x2) block, identical for every cell.
  double local[4][4] = {};
  for (std::size_t p = 0; p < nc; ++p)
    for (std::size_t q = 0; q < nc; ++q) {
      double acc = 0.0;
      for (std::size_t k = 0; k < js; ++k) acc += grid.stencil(k, p) * grid.stencil(k, q);
      local[p][q] = w * acc;
    }

  TripletBuilder builder(nodes * field_count, nodes * field_count);
  for (std::size_t f = 0; f < field_count; ++f) {
    const std::size_t off = f * nodes;
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
      const auto cn = grid.cell_nodes(c);
      for (std::size_t p = 0; p < nc; ++p)
        for (std::size_t q = 0; q < nc; ++q) builder.add(off + cn[p], off + cn[q], local[p][q]);
    }
  }
  return builder.build(true);
}

CheckerboardProjector::CheckerboardProjector(const Grid2D& grid, std::size_t field_count)
    : nodes_(grid.node_count()), fields_(field_count) {
  if (grid.dim() == 1) return;
  sign_.resize(nodes_);
  for (std::size_t j = 0; j < grid.ny(); ++j)
    for (std::size_t i = 0; i < grid.nx(); ++i) sign_[grid.node(i, j)] = ((i + j) % 2 == 0) ? 1.0 : -1.0;
}

double CheckerboardProjector::coefficient(std::span<const double> x,
                                          std::size_t field) const noexcept {
  if (sign_.empty()) return 0.0;
  const auto xf = x.subspan(field * nodes_, nodes_);
  return dot(xf, sign_) / static_cast<double>(nodes_);
}

void CheckerboardProjector::apply(std::span<double> x) const noexcept {
  if (sign_.empty()) return;
  for (std::size_t f = 0; f < fields_; ++f) {
    const double alpha = coefficient(x, f);
    auto xf = x.subspan(f * nodes_, nodes_);
    for (std::size_t n = 0; n < nodes_; ++n) xf[n] -= alpha * sign_[n];
  }
}

}  // namespace sgflow
