#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specctrl/grid.hpp"
#include "specctrl/lanczos.hpp"
#include "specctrl/spectra.hpp"

namespace specctrl {

// Fraction of the weighted |u|^2 mass inside the region. u holds function
// values at the grid nodes.
double mass_ratio(const Grid& g, const VectorZ& u, const Region& region);

struct ObservabilityRecord {
  double key = 0.0;    // abscissa (eigenvalue, mode number, transverse index)
  double value = 0.0;  // the reported quantity
  double extra = 0.0;  // secondary quantity (raw mass ratio, z, ...)
  std::string label;
};

struct ObservabilityReport {
  std::string experiment;
  std::vector<ObservabilityRecord> records;
  std::vector<std::string> skipped;
  double min_value = 0.0;
  double max_value = 0.0;
  double trend_slope = 0.0;  // slope of log(value) vs log(key) where sensible
  double trend_r2 = 0.0;
};

// --- stadium wing concentration -------------------------------------------

// Wings = the two end caps plus a margin-wide strip of the rectangle at each
// junction, i.e. {x < margin} or {x > L - margin}.
Region stadium_wings(const Grid& g, double margin = 0.05);

struct StadiumWingConfig {
  double lambda_max = 2000.0;
  int n_per_unit = 128;
  double radius = 0.5;
  double flat = 1.0;
  double margin = 0.05;
  BandOptions band;
  bool use_cache = true;
  std::string cache_dir;
};

// Wing mass of every Dirichlet eigenfunction with eigenvalue <= lambda_max.
// Record: key = eigenvalue, value = wing mass ratio, extra = rectangle mass.
// Refused unless the lattice carries >= 10 nodes per wavelength at lambda_max.
ObservabilityReport stadium_wing_scan(const StadiumWingConfig& cfg = {});

// --- barrier-top concentration on the cosh cylinder ------------------------

struct CdvpConfig {
  std::vector<int> modes;
  double delta = 0.5;  // half-width of the neighborhood of the waist
  double half_length = 3.0;
  int points_override = 0;  // nodes; 0 = resolution policy
  BandOptions band;
  bool use_cache = true;
  std::string cache_dir;
};

// For each angular mode m, pick the eigenvalue of L_m nearest m^2 (within
// 20%, else the mode is skipped with a flag), measure the mass fraction mu
// beyond |x| > delta, and report mu * log(lambda).
// Record: key = m, value = mu * log(lambda), extra = mu.
ObservabilityReport cdvp_log_scan(const CdvpConfig& cfg);

// --- per-transverse-mode 1D constants --------------------------------------

struct ProbePolicy {
  int n = 511;             // interior nodes of the unit interval
  int random_probes = 50;  // random right-hand sides on top of the eigenprobes
  std::uint64_t seed = 20260819;
};

// Ratio ||u||^2 / (||f||^2_{H^-1} + ||u|_omega||^2) for one right-hand side
// given by its coefficients in the discrete sine basis, where
// (L - mu) u = f with mu = z + (k*pi/a)^2 on the Dirichlet interval (0,1).
// The H^-1 norm is spectral: sum |f_n|^2 / (lambda_n + 1). Components with
// |lambda_n - mu| below 1e-12*(lambda_n + 1) are dropped from both sides.
double permode_probe_ratio(int k, double z, double a, double omega_lo,
                           double omega_hi, const VectorZ& f_coeffs);

// Best constant over the probe set: every sine eigenfunction (closed form,
// immune to the resonance guard) plus policy.random_probes random f draws.
double permode_constant(int k, double z, double a, double omega_lo,
                        double omega_hi, const ProbePolicy& policy = {});

struct PermodeConfig {
  int k_max = 50;
  double a = 1.0;
  double omega_lo = 0.1;
  double omega_hi = 0.3;
  double z_lo = -260.0;
  double z_hi = 0.0;
  int z_points = 21;
  ProbePolicy probes;
  int workers = 0;
};

// Record per (k, z) pair: key = k, extra = z, value = constant.
ObservabilityReport permode_scan(const PermodeConfig& cfg = {});

// --- band Gramian and observability constant -------------------------------

// Exact time integral of the phase difference: K(delta, T) =
// (e^{i delta T} - 1) / (i delta), evaluated stably, with K(0, T) = T.
cdouble phase_kernel(double delta, double T);

// Masked overlap B(j,k) = sum_i ind_i v_j(i) conj(v_k(i)); Hermitian, and
// real symmetric for real bands.
MatrixZ band_overlap(const EigenBand& band, const Region& omega);

struct GramianMatrix {
  MatrixZ m;       // Hermitian; M(j,k) = B(j,k) * K((mu_k - mu_j)/hbar, T)
  VectorR values;  // band eigenvalues mu_j driving the phases
  double T = 0.0;
  double hbar = 1.0;
  std::string omega_label;

  int size() const { return static_cast<int>(m.rows()); }
};

// Observation Gramian of the band over the time window [0, T]: the quadratic
// form c -> integral of ||1_omega u(t)||^2 dt where u(t) carries band
// coefficients with phases e^{i mu_j t / hbar}.
GramianMatrix gramian(const EigenBand& band, const Region& omega, double T,
                      double hbar = 1.0);

struct ObservabilityConstant {
  double c_obs = 0.0;
  VectorZ minimizer;
};

// Smallest eigenvalue and eigenvector of the Gramian (dense solve). Throws
// data_error if M is indefinite beyond -1e-10 * T.
ObservabilityConstant observability_constant(const GramianMatrix& g);

}  // namespace specctrl
