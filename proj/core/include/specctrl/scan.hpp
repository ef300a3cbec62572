#pragma once

#include <string>
#include <vector>

#include "specctrl/cap.hpp"

namespace specctrl {

struct ScanPoint {
  double h = 0.0;
  cdouble z{0.0, 0.0};
  double norm = 0.0;
  double cutoff_norm = 0.0;
  int iterations = 0;
};

struct ScanFailure {
  double h = 0.0;
  cdouble z{0.0, 0.0};
  std::string message;
};

// Default z policy: maximize over 11 real points in [0.9, 1.1] (hyperbolic)
// or [-0.05, 0.05] (wells).
std::vector<cdouble> default_z_grid(CapFamily family, int points = 11);

struct ScanConfig {
  CapFamily family = CapFamily::hyperbolic;
  int well_order = 1;
  std::vector<int> modes;   // hyperbolic: h = 1/mode
  std::vector<double> hs;   // wells
  std::vector<cdouble> zs;  // empty -> default_z_grid(family)
  int points_override = 0;  // fixed node count instead of the resolution policy
  double amplitude = -1.0;  // family default
  double tol = 1e-8;
  unsigned workers = 0;     // 0 -> hardware parallelism
  int refine_levels = 0;    // zoom-in passes around each per-h argmax z
  int refine_points = 11;   // probes per zoom level (>= 3)
};

// One row per h: the z-grid point that maximizes the full norm, with the
// cutoff norm and iteration count measured at that same z. Solver failures at
// individual (h, z) jobs are recorded and the scan continues; an h whose
// every z fails produces no row. Configuration errors throw before any work.
// refine_levels > 0 continues the maximization past the grid: the search
// seeds a small beam of candidate basins from the strongest grid rows,
// samples each bracket densely on the first level, then zooms the beam level
// by level to one probe spacing, so peaks far narrower than the grid step —
// including ones the grid argmax does not bracket — are still found. Failed
// probes are skipped silently.
struct ScanResult {
  CapFamily family = CapFamily::hyperbolic;
  int well_order = 0;
  std::vector<ScanPoint> points;  // h descending
  std::vector<ScanFailure> failures;
};

ScanResult run_scan(const ScanConfig& cfg);

// Per-h envelope over the z rows, h descending.
struct ReducedPoint {
  double h = 0.0;
  double norm = 0.0;
  double cutoff_norm = 0.0;
};
std::vector<ReducedPoint> reduce_max_over_z(const ScanResult& r);

// (h * cutoff_norm)^2 / (h * norm) per reduced point.
std::vector<double> gap_ratios(const ScanResult& r);

// Columns: h,z_re,z_im,norm,cutoff_norm,iterations. The CSV carries the rows
// only; a loaded result keeps default family metadata.
void save_scan_csv(const ScanResult& r, const std::string& path);
ScanResult load_scan_csv(const std::string& path);

}  // namespace specctrl
