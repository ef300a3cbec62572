#include "specctrl/singular.hpp"

#include <cmath>

#include "specctrl/errors.hpp"
#include "specctrl/util.hpp"

namespace specctrl {

SingularEstimate smallest_singular(const SparseOperator& op, const Factorization& fact,
                                   double tol, int max_iterations, std::uint64_t seed) {
  if (fact.shift() != cdouble(0.0, 0.0))
    throw invalid_argument("smallest_singular: factorization must be unshifted");
  if (fact.n() != op.n())
    throw invalid_argument("smallest_singular: dimension mismatch");
  const int n = op.n();
  Rng rng(seed);
  VectorZ v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.cnormal();
  v.normalize();

  double sigma_prev = -1.0;
  int it = 0;
  bool converged = false;
  for (; it < max_iterations && !converged; ++it) {
    VectorZ y = fact.solve_adjoint(v);
    VectorZ x = fact.solve(y);
    double theta = v.dot(x).real();
    if (!(theta > 0.0)) throw solver_error("smallest_singular: lost positivity");
    double sigma = 1.0 / std::sqrt(theta);
    double nx = x.norm();
    if (nx == 0.0) throw solver_error("smallest_singular: iterate vanished");
    v = x / nx;
    if (sigma_prev >= 0.0 && std::abs(sigma - sigma_prev) <= tol * sigma) converged = true;
    sigma_prev = sigma;
  }

  SingularEstimate out;
  VectorZ Av = op.apply(v);
  out.value = Av.norm();
  out.right_vector = v;
  out.iterations = it;
  VectorZ AhAv = op.mat.adjoint() * Av;
  out.residual = (AhAv - (out.value * out.value) * v).norm();

  if (!converged) {
    convergence_error err("smallest_singular: iteration cap reached");
    err.best_estimate = out.value;
    err.iterations = it;
    throw err;
  }
  return out;
}

SingularEstimate smallest_singular(const SparseOperator& op, double tol, int max_iterations,
                                   std::uint64_t seed) {
  Factorization fact(op, 0.0);
  return smallest_singular(op, fact, tol, max_iterations, seed);
}

}  // namespace specctrl
