#pragma once

#include <vector>

#include "specctrl/scan.hpp"

namespace specctrl {

enum class ScalingLaw { log_law, pure_power, sqrt_log };
const char* scaling_law_name(ScalingLaw law);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Least-squares fit of a norm-vs-h scaling law, in its natural coordinates:
//   log_law    : h*norm    = C * log(1/h)       + b
//   pure_power : log(norm) = alpha * log(1/h)   + b
//   sqrt_log   : h*norm    = C * sqrt(log(1/h)) + b
// coefficient is C (resp. alpha) and r_squared lives in those coordinates;
// rss_log is sum of (log predicted - log actual)^2, the common space for
// ranking laws against each other (+inf if a prediction is nonpositive).
struct FitResult {
  ScalingLaw law = ScalingLaw::log_law;
  double coefficient = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double rss_log = 0.0;
  int points = 0;

  double predict(double h) const;
};

// Needs >= 4 points, h > 0 (< 1 for sqrt_log), norms > 0 for pure_power.
FitResult fit_scaling(const std::vector<double>& hs,
                      const std::vector<double>& norms, ScalingLaw law);

// Fit the per-h z-envelope of a scan.
FitResult fit_scan(const ScanResult& r, ScalingLaw law, bool use_cutoff = false);

// Spearman rank correlation, average ranks on ties; 0 if either side is
// constant.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace specctrl
