#pragma once

#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "specctrl/grid.hpp"
#include "specctrl/util.hpp"

namespace specctrl {

using SparseMatrixZ = Eigen::SparseMatrix<cdouble, Eigen::RowMajor>;
using VectorZ = Eigen::VectorXcd;
using VectorR = Eigen::VectorXd;
using MatrixZ = Eigen::MatrixXcd;

enum class Symmetry { hermitian, complex_symmetric, general };

// Compressed sparse row storage with complex scalars. The Eigen matrix is
// kept compressed with sorted inner indices, which is exactly CSR.
struct SparseOperator {
  SparseMatrixZ mat;
  Symmetry symmetry = Symmetry::general;
  std::string provenance;
  std::uint64_t grid_hash = 0;

  Eigen::Index n() const { return mat.rows(); }

  VectorZ apply(const VectorZ& x) const { return mat * x; }

  // A - shift*I as a fresh operator (used by CAP assembly and tests).
  SparseOperator shifted(cdouble shift) const;

  // A - i*scale*diag(d); flips a Hermitian flag to complex-symmetric.
  SparseOperator damped(const std::vector<double>& d, double scale) const;

  double hermitian_defect() const;  // max |A - A^*| entry
};

// Second-order Dirichlet discretization of the domain's natural operator:
//   interval   : -d2/dx2, 3-point
//   rectangle  : -laplace, 5-point
//   stadium    : -laplace, 5-point on the masked lattice
//   cosh_mode  : -(1/w) d/dx (w d/dx) + m^2/w^2, conservative form,
//                symmetrized by diag(sqrt(w_i * spacing)) so the returned
//                matrix is Hermitian in the Euclidean inner product
SparseOperator assemble_laplacian(const Grid& g);

}  // namespace specctrl
