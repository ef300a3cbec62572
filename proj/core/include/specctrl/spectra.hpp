#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specctrl/grid.hpp"
#include "specctrl/lanczos.hpp"
#include "specctrl/sparse_operator.hpp"

namespace specctrl {

// A computed batch of eigenpairs. Vectors are Euclidean-orthonormal columns;
// the corresponding grid function is u(i) = v(i)/sqrt(w_i), which carries
// unit weighted mass. Masked quadratic forms sum(ind_i * w_i * |u|^2) reduce
// to sum(ind_i * |v_i|^2), so most consumers never need the weights.
struct EigenBand {
  VectorR values;
  MatrixZ vectors;
  VectorR residuals;
  double lo = 0.0, hi = 0.0;
  bool truncated = false;
  std::uint64_t grid_hash = 0;
  std::string provenance;

  int count() const { return static_cast<int>(values.size()); }
  VectorZ function(const Grid& g, int j) const;
  // integral of ind * |u|^2 (unit total mass per column)
  double mass(const Region& region, int j) const;
};

EigenBand compute_band(const SparseOperator& op, double lo, double hi, int max_count,
                       const BandOptions& opt = {});
EigenBand compute_lowest(const SparseOperator& op, int count, const BandOptions& opt = {});

// Discrete five-point eigenvalues of the Dirichlet rectangle (0,1)x(0,a) on
// an nx-by-ny interior lattice, tagged by mode numbers.
struct RectangleMode {
  double value;
  int m, k;
};
std::vector<RectangleMode> rectangle_spectrum_window(int nx, int ny, double a, double lo,
                                                     double hi);
std::vector<RectangleMode> rectangle_spectrum_lowest(int nx, int ny, double a, int count);

// Coefficients c_j = v_j^H x and the reconstruction sum_j c_j v_j.
VectorZ project_onto_band(const EigenBand& band, const VectorZ& x);
VectorZ band_reconstruct(const EigenBand& band, const VectorZ& coeffs);

// +1 even, -1 odd, 0 unclassified, about the midpoint of a 1D grid.
std::vector<int> parity_tags(const Grid& g, const EigenBand& band);

}  // namespace specctrl
