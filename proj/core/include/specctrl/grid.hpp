#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace specctrl {

enum class GridKind { interval, rectangle, stadium, cosh_mode };

const char* grid_kind_name(GridKind k);

// A discretized domain: the ordered set of active (interior, unknown-carrying)
// nodes with coordinates and per-node quadrature weights. Dirichlet boundary
// nodes carry value 0 and are excluded. 2D kinds keep the lattice map so
// stencil assembly and mask symmetry checks can work in (i,j) space.
struct Grid {
  GridKind kind = GridKind::interval;
  int dim = 1;

  std::vector<double> coords;   // dim entries per node
  std::vector<double> weights;  // strictly positive

  // Lattice structure (rectangle, stadium). node_of[j*nx + i] is the node
  // index at lattice position (i,j), or -1 if masked/inactive.
  int nx = 0, ny = 0;
  std::vector<std::int32_t> node_of;
  double hx = 0.0, hy = 0.0;

  // Builder parameters, recorded for provenance and serialization.
  double length = 0.0;       // interval
  double height = 0.0;       // rectangle: y spans (0, height)
  double radius = 0.0;       // stadium half-width r
  double flat = 0.0;         // stadium flat length L
  double half_length = 0.0;  // cosh_mode: x spans (-L, L)
  int mode = 0;              // cosh_mode angular index m

  // cosh_mode metric w(x) = cosh(x) at nodes and at the n+1 midpoints
  // (including the half-cells touching the Dirichlet ends).
  std::vector<double> metric;
  std::vector<double> metric_mid;

  std::size_t size() const { return weights.size(); }
  double x(std::size_t i) const { return coords[dim * i]; }
  double y(std::size_t i) const { return coords[dim * i + 1]; }
  double weight_sum() const;
  std::uint64_t content_hash() const;
  std::string describe() const;
};

Grid build_interval(int n, double length);
Grid build_rectangle(int nx, int ny, double a);
Grid build_stadium(int n_per_unit, double r, double flat_length);
Grid build_cosh_mode(int n, double half_length, int mode);

// Per-node indicator in [0,1]. Sharp regions are exactly {0,1}-valued.
struct Region {
  std::vector<double> indicator;
  std::string label;

  std::size_t support_count() const;
  bool empty() const { return support_count() == 0; }
};

// level > 0 means inside. With ramp_width == 0 the indicator is sharp;
// otherwise it follows the C1 cubic ramp 3t^2 - 2t^3 of t = level/ramp_width
// clamped to [0,1], so the indicator reaches 1 at depth ramp_width.
Region region_from_predicate(const Grid& g,
                             const std::function<double(double, double)>& level,
                             double ramp_width = 0.0,
                             std::string label = {});

// Convenience for plain membership predicates (always sharp).
Region region_from_predicate(const Grid& g,
                             const std::function<bool(double, double)>& inside,
                             std::string label = {});

double cubic_ramp(double t);  // 3t^2 - 2t^3 clamped to [0,1]

}  // namespace specctrl
