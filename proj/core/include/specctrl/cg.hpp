#pragma once

#include <functional>

#include "specctrl/errors.hpp"
#include "specctrl/sparse_operator.hpp"

namespace specctrl {

struct CgResult {
  VectorZ x;
  int iterations = 0;
  double relative_residual = 0.0;
};

// Conjugate gradients for a Hermitian positive definite operator given as an
// apply contract. Nonpositive curvature p^H A p aborts with a diagnosable
// error rather than returning garbage.
inline CgResult cg_hermitian_solve(
    const std::function<VectorZ(const VectorZ&)>& apply, const VectorZ& rhs,
    double tol = 1e-10, int max_iterations = 0) {
  const Eigen::Index n = rhs.size();
  if (max_iterations <= 0)
    max_iterations = static_cast<int>(2 * n + 100);
  CgResult out;
  out.x = VectorZ::Zero(n);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) return out;

  VectorZ r = rhs;
  VectorZ p = r;
  double rr = r.squaredNorm();
  for (int it = 0; it < max_iterations; ++it) {
    if (std::sqrt(rr) <= tol * bnorm) break;
    const VectorZ ap = apply(p);
    const double curvature = std::real(p.dot(ap));
    if (curvature <= 0.0)
      throw indefinite_operator_error(
          "cg_hermitian_solve: nonpositive curvature at iteration " +
          std::to_string(it));
    const double alpha = rr / curvature;
    out.x += alpha * p;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
    out.iterations = it + 1;
  }
  out.relative_residual = std::sqrt(rr) / bnorm;
  if (out.relative_residual > tol)
    throw convergence_error("cg_hermitian_solve: stalled above tolerance",
                            out.relative_residual, out.iterations);
  return out;
}

}  // namespace specctrl
