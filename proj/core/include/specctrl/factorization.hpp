#pragma once

#include <memory>

#include <Eigen/SparseLU>

#include "specctrl/sparse_operator.hpp"

namespace specctrl {

// Sparse LU of (A - shift*I), reusable for many solves. Immutable after
// construction; use one instance per thread.
class Factorization {
 public:
  Factorization(const SparseOperator& op, cdouble shift = 0.0);

  Eigen::Index n() const { return n_; }
  cdouble shift() const { return shift_; }

  // (A - shift*I) x = rhs
  VectorZ solve(const VectorZ& rhs) const;
  // (A - shift*I)^* x = rhs, reusing the same factors
  VectorZ solve_adjoint(const VectorZ& rhs) const;

 private:
  using ColMatrix = Eigen::SparseMatrix<cdouble, Eigen::ColMajor>;
  std::shared_ptr<Eigen::SparseLU<ColMatrix>> lu_;
  Eigen::Index n_ = 0;
  cdouble shift_{0.0, 0.0};
};

Factorization factorize(const SparseOperator& op, cdouble shift = 0.0);
VectorZ solve(const Factorization& f, const VectorZ& rhs);

}  // namespace specctrl
