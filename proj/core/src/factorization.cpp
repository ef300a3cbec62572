#include "specctrl/factorization.hpp"

#include <cmath>

#include "specctrl/errors.hpp"

namespace specctrl {

namespace {

// Deterministic +-1 probe; a plain basis vector can be nearly orthogonal to
// an oscillatory null vector, a sign-scrambled one is not.
VectorZ probe_vector(Eigen::Index n) {
  VectorZ b(n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::uint64_t h = fnv1a64(&i, sizeof(i));
    b[i] = (h & 1) ? s : -s;
  }
  return b;
}

double max_row_sum(const SparseMatrixZ& m) {
  double best = 0.0;
  for (int k = 0; k < m.outerSize(); ++k) {
    double s = 0.0;
    for (SparseMatrixZ::InnerIterator it(m, k); it; ++it)
      s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

}  // namespace

Factorization::Factorization(const SparseOperator& op, cdouble shift)
    : n_(op.n()), shift_(shift) {
  SparseMatrixZ shifted = op.mat;
  if (shift != cdouble(0.0, 0.0)) {
    SparseMatrixZ id(n_, n_);
    id.setIdentity();
    shifted = op.mat - shift * id;
  }
  ColMatrix a(shifted);
  a.makeCompressed();
  lu_ = std::make_shared<Eigen::SparseLU<ColMatrix>>();
  lu_->compute(a);
  if (lu_->info() != Eigen::Success)
    throw singular_shift_error("factorize: LU failed (shift " +
                               fmt_g17(shift.real()) + "+" +
                               fmt_g17(shift.imag()) + "i)");
  // Near-singularity guard: one probe solve estimates sigma_min from below.
  const double scale = max_row_sum(shifted);
  const VectorZ b = probe_vector(n_);
  const VectorZ x = lu_->solve(b);
  const double xn = x.norm();
  if (xn > 0.0 && b.norm() / xn < 1e-12 * scale)
    throw singular_shift_error("factorize: shift is singular to precision");
}

VectorZ Factorization::solve(const VectorZ& rhs) const {
  return lu_->solve(rhs);
}

VectorZ Factorization::solve_adjoint(const VectorZ& rhs) const {
  return lu_->adjoint().solve(rhs);
}

Factorization factorize(const SparseOperator& op, cdouble shift) {
  return Factorization(op, shift);
}

VectorZ solve(const Factorization& f, const VectorZ& rhs) {
  return f.solve(rhs);
}

}  // namespace specctrl
