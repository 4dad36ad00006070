#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sgflow/grid_jet.hpp"
#include "sgflow/residual_system.hpp"

namespace sgflow {

enum class GLInit { uniform, gauged, seeded_noise };

const char* to_string(GLInit init) noexcept;

struct GLConfig {
  double kappa = 4.0;
  double h0 = 0.0;
  double lx = 4.0;
  double ly = 4.0;
  GLInit init = GLInit::seeded_noise;
  std::uint64_t seed = 0;
  double noise = 0.1;

  void validate() const;
};

/// Field order of GL states: r = Re u, s = Im u, a = A_x, b = A_y.
enum GLField : std::size_t { gl_r = 0, gl_s = 1, gl_a = 2, gl_b = 3 };

/// Residual of the nondimensional Ginzburg-Landau energy, six components per
/// cell (subscripts are partials):
///   r_x + a s,  s_x - a r,  r_y + b s,  s_y - b r,  b_x - a_y - H0,
///   kappa / sqrt(2) (r^2 + s^2 - 1).
SystemPtr gl_system(const GLConfig& config);

/// The free energy integrated directly from its density
///   |grad u - i A u|^2 / 2 + |curl A - H0|^2 / 2 + kappa^2 / 4 (|u|^2 - 1)^2
/// with the same jets and quadrature as the residual form.
double gl_free_energy(const GLConfig& config, const Grid2D& grid, const NodalField& state);

NodalField gl_initialize(const GLConfig& config, const Grid2D& grid);

/// |u| per node.
std::vector<double> gl_density(const NodalField& state);

struct VortexCell {
  std::size_t cell = 0;
  int winding = 0;
  double modulus = 0.0;  ///< |u| at the cell centre (corner mean of r, s)
};

struct VortexReport {
  long total_winding = 0;
  std::vector<VortexCell> vortices;
  std::vector<std::size_t> under_resolved;  ///< cells with |winding| >= 2
  std::vector<std::size_t> indeterminate;   ///< cells with a corner at u == 0
  std::size_t count() const noexcept { return vortices.size(); }
};

/// Plaquette phase winding of u = r + i s around every cell. Cells with a
/// nonzero winding and a corner with |u| < min_modulus are reported as
/// vortices.
VortexReport count_vortices(const Grid2D& grid, const NodalField& state,
                            double min_modulus = 0.7);

}  // namespace sgflow
