#pragma once

#include <string>
#include <vector>

#include "specctrl/grid.hpp"
#include "specctrl/observability.hpp"
#include "specctrl/scan.hpp"
#include "specctrl/spectra.hpp"

namespace specctrl {

// Null control synthesized on a frequency band by duality: the dual
// coefficients solve M d = -c, where M is the band Gramian over omega and c
// are the band coefficients of the initial state. Both the state and the
// control live in the span of the band, so the terminal residual rho is an
// exactness test, not a modeling error.
struct ControlSolution {
  EigenBand band;
  Region omega;
  double T = 0.0;
  GramianMatrix gram;
  VectorZ c;  // band coefficients of the initial state
  VectorZ d;  // dual coefficients
  double cost = 0.0;           // ||g||^2 over [0,T] x omega
  double rho = 0.0;            // terminal band residual, relative
  double out_of_band = 0.0;    // part of u0 the band cannot see, relative
  int cg_iterations = 0;
  double cg_relative_residual = 0.0;

  // g(t) on the grid: the indicator times sum_k d_k e^{i lambda_k t} v_k.
  VectorZ control_at(double t) const;
};

// pre: lambda_min(Gramian) > 1e-12 * T; throws illposed_error with the
// offending eigenvalue otherwise. u0 is a grid function; its out-of-band part
// is recorded and ignored by the dynamics.
ControlSolution hum_control(const EigenBand& band, const Region& omega,
                            double T, const VectorZ& u0);

struct ControlVerification {
  double rho_quad = 0.0;      // terminal residual from quadrature propagation
  double rho_closed = 0.0;    // the solution's own residual
  double mismatch = 0.0;      // |rho_quad - rho_closed|
  double band_leak = 0.0;     // out-of-band content of the terminal state
  int steps = 0;
};

// Re-propagates the controlled dynamics with composite Simpson quadrature of
// the Duhamel integral, assembling g on the grid at every node instead of
// reusing the analytic time integrals.
ControlVerification verify_null_control(const ControlSolution& sol, int steps);

struct PipelineRecord {
  int mode = 0;
  double h = 0.0;
  double g_full = 0.0;    // h * resolvent norm from the scan
  double g_cutoff = 0.0;  // h * cutoff norm from the scan
  double T = 0.0;         // K * g_full
  int band_count = 0;
  double c_obs = 0.0;
  double ratio = 0.0;  // c_obs * T / g_cutoff^2
};

struct PipelineCheck {
  std::vector<PipelineRecord> records;
  double K = 0.0;
  double c0 = 0.0;  // smallest constant with c_obs*T >= g_cutoff^2/c0 throughout
  double min_over_median = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct PipelineConfig {
  std::vector<int> modes;
  double K = 100.0;
  double window_lo = 0.5;  // energy window for h^2 L, units of the trapped level
  double window_hi = 2.0;
  double omega_threshold = 1.5;  // observation set {|x| > threshold}
  double half_length = 3.0;
  double stability_threshold = 0.1;
  BandOptions band;
  bool use_cache = true;
  std::string cache_dir;
  unsigned workers = 0;
};

// For each mode m (h = 1/m): measured g(h) = h * norm and h * cutoff norm are
// taken from the scan, the horizon is T(h) = K * g(h), and the band
// observability constant of h^2 L_m over {|x| > omega_threshold} is assembled
// with semiclassical phases (hbar = h). A mode missing from the scan is a
// dependency error.
PipelineCheck theorem3_pipeline(const ScanResult& scan, const PipelineConfig& cfg);

// Truncated rectangle mode on a stadium (or plain rectangle) grid: a cutoff
// in the axial direction times a transverse sine. The frequency uses the
// grid's own dispersion, so on a rectangle with no cutoff the residual is
// roundoff. u is unnormalized; lambda is the discrete mode energy.
struct Quasimode {
  VectorZ u;
  double lambda = 0.0;
  std::string label;
};

Quasimode build_quasimode(const Grid& g, int transverse, int axial,
                          double ramp_width);

// || (A - lambda) u || / || u || for the quasimode above. Refuses fewer than
// 10 nodes per wavelength in either direction. The second form reuses an
// already-assembled operator for sweeps over many modes on one grid.
double quasimode_error(const Grid& g, int transverse, int axial,
                       double ramp_width = 0.05);
double quasimode_error(const Grid& g, const SparseOperator& op, int transverse,
                       int axial, double ramp_width = 0.05);

}  // namespace specctrl
