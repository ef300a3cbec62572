#pragma once

#include <cstdint>

#include "specctrl/factorization.hpp"
#include "specctrl/sparse_operator.hpp"

namespace specctrl {

struct SingularEstimate {
  double value = 0.0;       // smallest singular value (direct ||A v||)
  VectorZ right_vector;     // unit right singular vector estimate
  int iterations = 0;
  double residual = 0.0;    // ||A^H A v - value^2 v||
};

// Smallest singular value of a square sparse operator by inverse iteration on
// the normal equations; both solves per step reuse a single LU of A.
// Exceeding max_iterations raises convergence_error carrying the best
// estimate so far. A singular A surfaces as singular_shift_error.
SingularEstimate smallest_singular(const SparseOperator& op, double tol = 1e-8,
                                   int max_iterations = 500,
                                   std::uint64_t seed = 0x517ea1ULL);

// Same, with a caller-owned factorization of A (shift must be zero).
SingularEstimate smallest_singular(const SparseOperator& op, const Factorization& fact,
                                   double tol = 1e-8, int max_iterations = 500,
                                   std::uint64_t seed = 0x517ea1ULL);

}  // namespace specctrl
