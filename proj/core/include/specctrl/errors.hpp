#pragma once

#include <stdexcept>
#include <string>

namespace specctrl {

// Validation problems: bad sizes, empty regions, under-resolved grids,
// malformed configs. The CLI maps these to exit code 2.
class invalid_argument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class resolution_error : public invalid_argument {
 public:
  using invalid_argument::invalid_argument;
};

class dependency_error : public invalid_argument {
 public:
  using invalid_argument::invalid_argument;
};

// Numerical failures. The CLI maps these to exit code 3.
class solver_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A − σI singular to working precision; callers may perturb σ and retry.
class singular_shift_error : public solver_error {
 public:
  using solver_error::solver_error;
};

// Iteration cap hit; carries the best estimate so far.
class convergence_error : public solver_error {
 public:
  explicit convergence_error(const std::string& what, double best = 0.0,
                             int iterations = 0)
      : solver_error(what), best_estimate(best), iterations(iterations) {}
  double best_estimate = 0.0;
  int iterations = 0;
};

// CG observed nonpositive curvature.
class indefinite_operator_error : public solver_error {
 public:
  using solver_error::solver_error;
};

// Unobservable band: Gramian smallest eigenvalue below threshold.
class illposed_error : public solver_error {
 public:
  illposed_error(const std::string& what, double lambda_min)
      : solver_error(what), lambda_min(lambda_min) {}
  double lambda_min = 0.0;
};

class data_error : public solver_error {
 public:
  using solver_error::solver_error;
};

}  // namespace specctrl
