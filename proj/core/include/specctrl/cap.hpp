#pragma once

#include <string>
#include <vector>

#include "specctrl/grid.hpp"
#include "specctrl/sparse_operator.hpp"

namespace specctrl {

enum class CapFamily { hyperbolic, degenerate_well };
const char* cap_family_name(CapFamily f);

// A complex absorbing-layer model: Q = h^2 L (+ V) - z I - i * amp * diag(a),
// with a the C1-ramped absorber profile in [0,1] near both ends. The
// hyperbolic family lives on the cosh-metric mode grid with h = 1/mode and
// amp = h; the degenerate-well family lives on a flat interval of half-width
// X centered at coordinate X, with V = -(x - X)^(2*order) and amp = 1.
struct CapModel {
  CapFamily family = CapFamily::hyperbolic;
  Grid grid;
  SparseOperator q;
  std::vector<double> damping;  // absorber profile a, values in [0,1]
  std::vector<double> cutoff;   // chi, supported inside {a > 0}
  double amplitude = 0.0;       // scalar applied to the profile inside Q
  double h = 0.0;
  cdouble z{0.0, 0.0};
  int order = 0;  // well flatness exponent m (wells only)
  int mode = 0;   // angular index (hyperbolic only)
};

// Resolution policy: at least 24 nodes per shortest local wavelength, with a
// floor of 401 interior nodes.
int cap_auto_points(CapFamily family, double h, cdouble z, int order, double half_length);

// amplitude < 0 selects the family default (h for hyperbolic, 1 for wells);
// amplitude 0 gives the Hermitian control operator with the profile retained.
CapModel build_cap_hyperbolic(int mode, cdouble z, int n = 0, double half_length = 3.0,
                              double absorb_start = 1.5, double absorb_ramp = 0.5,
                              double amplitude = -1.0);
CapModel build_cap_degenerate_well(double h, int order, cdouble z, int n = 0,
                                   double half_width = 2.0, double absorb_start = 1.0,
                                   double absorb_ramp = 0.5, double amplitude = -1.0);

struct ResolventNorms {
  double full = 0.0;    // ||Q^{-1}||
  double cutoff = 0.0;  // ||Q^{-1} diag(chi)||
  int iterations = 0;   // total inner iterations across both estimates
};

// Both norms from a single LU of Q.
ResolventNorms resolvent_norms(const CapModel& model, double tol = 1e-8,
                               int max_iterations = 500);
double resolvent_norm(const CapModel& model);

// ||Q^{-1} diag(chi)||; chi must vanish wherever the absorber profile does
// (the support hypothesis of the gain estimate). check_support = false drops
// that requirement, e.g. chi == 1 everywhere recovers the full norm.
double cutoff_resolvent_norm(const CapModel& model);
double cutoff_resolvent_norm(const CapModel& model, const std::vector<double>& chi,
                             bool check_support = true);

}  // namespace specctrl
