#include "specctrl/observability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "specctrl/band_cache.hpp"
#include "specctrl/cap.hpp"
#include "specctrl/errors.hpp"
#include "specctrl/fit.hpp"
#include "specctrl/util.hpp"

namespace specctrl {

double mass_ratio(const Grid& g, const VectorZ& u, const Region& region) {
  if (static_cast<std::size_t>(u.size()) != g.size())
    throw invalid_argument("mass_ratio: vector does not match the grid");
  if (region.indicator.size() != g.size())
    throw invalid_argument("mass_ratio: region does not match the grid");
  if (region.empty()) throw invalid_argument("mass_ratio: region is empty");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double cell = g.weights[i] * std::norm(u[static_cast<Eigen::Index>(i)]);
    num += region.indicator[i] * cell;
    den += cell;
  }
  if (den == 0.0) throw invalid_argument("mass_ratio: zero function");
  return num / den;
}

namespace {

void finalize_report(ObservabilityReport& rep, bool log_trend) {
  if (rep.records.empty()) return;
  double lo = rep.records.front().value, hi = lo;
  for (const auto& r : rep.records) {
    lo = std::min(lo, r.value);
    hi = std::max(hi, r.value);
  }
  rep.min_value = lo;
  rep.max_value = hi;
  if (!log_trend || rep.records.size() < 2 || lo <= 0.0) return;
  std::vector<double> xs, ys;
  xs.reserve(rep.records.size());
  ys.reserve(rep.records.size());
  for (const auto& r : rep.records) {
    if (r.key <= 0.0) return;
    xs.push_back(std::log(r.key));
    ys.push_back(std::log(r.value));
  }
  if (std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) == xs.end())
    return;
  const LinearFit f = linear_fit(xs, ys);
  rep.trend_slope = f.slope;
  rep.trend_r2 = f.r_squared;
}

}  // namespace

// --- stadium wing concentration ---------------------------------------------

Region stadium_wings(const Grid& g, double margin) {
  if (g.kind != GridKind::stadium)
    throw invalid_argument("stadium_wings: stadium grids only");
  if (!(margin >= 0.0) || margin >= 0.5 * g.flat)
    throw invalid_argument("stadium_wings: margin must lie in [0, flat/2)");
  const double flat = g.flat;
  return region_from_predicate(
      g, std::function<bool(double, double)>(
             [flat, margin](double x, double) { return x < margin || x > flat - margin; }),
      "wings");
}

ObservabilityReport stadium_wing_scan(const StadiumWingConfig& cfg) {
  if (!(cfg.lambda_max > 0.0))
    throw invalid_argument("stadium_wing_scan: lambda_max must be positive");
  const double needed = 10.0 * std::sqrt(cfg.lambda_max) / (2.0 * std::numbers::pi);
  if (cfg.n_per_unit < needed)
    throw resolution_error(
        "stadium_wing_scan: need n_per_unit >= " +
        std::to_string(static_cast<int>(std::ceil(needed))) +
        " for 10 nodes per wavelength at lambda_max = " + fmt_g17(cfg.lambda_max));

  const Grid g = build_stadium(cfg.n_per_unit, cfg.radius, cfg.flat);
  const SparseOperator op = assemble_laplacian(g);
  const double area =
      2.0 * cfg.radius * cfg.flat + std::numbers::pi * cfg.radius * cfg.radius;
  const int cap =
      static_cast<int>(area * cfg.lambda_max / (4.0 * std::numbers::pi) * 1.4) + 64;
  const EigenBand band = compute_band_cached(op, 0.0, cfg.lambda_max, cap, cfg.band,
                                             cfg.use_cache, cfg.cache_dir);
  if (band.truncated)
    throw convergence_error("stadium_wing_scan: eigenvalue window truncated below " +
                            fmt_g17(cfg.lambda_max));

  const Region wings = stadium_wings(g, cfg.margin);
  const double flat = cfg.flat;
  const Region rect = region_from_predicate(
      g, std::function<bool(double, double)>(
             [flat](double x, double) { return x > 0.0 && x < flat; }),
      "rectangle");

  ObservabilityReport rep;
  rep.experiment = "stadium_wing_scan";
  rep.records.reserve(static_cast<std::size_t>(band.count()));
  for (int j = 0; j < band.count(); ++j)
    rep.records.push_back({band.values[j], band.mass(wings, j), band.mass(rect, j),
                           std::string{}});
  finalize_report(rep, true);
  return rep;
}

// --- barrier-top concentration on the cosh cylinder -------------------------

ObservabilityReport cdvp_log_scan(const CdvpConfig& cfg) {
  if (cfg.modes.empty()) throw invalid_argument("cdvp_log_scan: no modes");
  for (int m : cfg.modes)
    if (m < 1) throw invalid_argument("cdvp_log_scan: modes must be positive");
  if (!(cfg.delta > 0.0) || cfg.delta >= cfg.half_length)
    throw invalid_argument("cdvp_log_scan: delta must lie in (0, half_length)");

  ObservabilityReport rep;
  rep.experiment = "cdvp_log_scan";
  for (int m : cfg.modes) {
    const double h = 1.0 / m;
    const int n = cfg.points_override > 0
                      ? cfg.points_override
                      : cap_auto_points(CapFamily::hyperbolic, h, cdouble(1.0, 0.0), 1,
                                        cfg.half_length);
    const Grid g = build_cosh_mode(n, cfg.half_length, m);
    const SparseOperator op = assemble_laplacian(g);
    const double target = static_cast<double>(m) * m;
    const int cap =
        static_cast<int>(0.15 * m * std::log(std::max(m, 2)) ) + 48;
    const EigenBand band = compute_band_cached(op, 0.8 * target, 1.2 * target, cap,
                                               cfg.band, cfg.use_cache, cfg.cache_dir);
    if (band.truncated)
      throw convergence_error("cdvp_log_scan: band truncated at m = " +
                              std::to_string(m));
    if (band.count() == 0) {
      rep.skipped.push_back("m=" + std::to_string(m) +
                            ": no eigenvalue within 20% of m^2");
      continue;
    }
    int best = 0;
    for (int j = 1; j < band.count(); ++j)
      if (std::abs(band.values[j] - target) < std::abs(band.values[best] - target))
        best = j;
    const double delta = cfg.delta;
    const Region away = region_from_predicate(
        g, std::function<bool(double, double)>(
               [delta](double x, double) { return std::abs(x) > delta; }),
        "away");
    const double mu = band.mass(away, best);
    rep.records.push_back({static_cast<double>(m), mu * std::log(band.values[best]),
                           mu, "lambda=" + fmt_g17(band.values[best])});
  }
  finalize_report(rep, true);
  return rep;
}

// --- per-transverse-mode 1D constants ---------------------------------------

namespace {

// Discrete sine setting on the unit interval with n interior nodes:
// eigenvalues of the 3-point Dirichlet Laplacian, normalized eigenfunctions
// sqrt(2) sin(m pi x) sampled on the omega nodes, and their omega masses.
struct PermodeContext {
  int n = 0;
  double h = 0.0;
  VectorR lambda;
  VectorR mass;
  MatrixZ sine_omega;  // |omega| x n

  PermodeContext(int n_, double omega_lo, double omega_hi) : n(n_) {
    if (n < 3) throw invalid_argument("permode: need at least 3 nodes");
    if (!(omega_lo >= 0.0) || !(omega_hi <= 1.0) || !(omega_lo < omega_hi))
      throw invalid_argument("permode: omega_x must be a sub-interval of (0,1)");
    h = 1.0 / (n + 1);
    std::vector<int> nodes;
    for (int i = 0; i < n; ++i) {
      const double x = (i + 1) * h;
      if (x > omega_lo && x < omega_hi) nodes.push_back(i);
    }
    if (nodes.empty())
      throw invalid_argument("permode: omega_x contains no grid nodes");
    lambda.resize(n);
    mass.resize(n);
    sine_omega.resize(static_cast<Eigen::Index>(nodes.size()), n);
    for (int m = 1; m <= n; ++m) {
      const double s = std::sin(0.5 * m * std::numbers::pi * h);
      lambda[m - 1] = 4.0 / (h * h) * s * s;
      double acc = 0.0;
      for (std::size_t r = 0; r < nodes.size(); ++r) {
        const double x = (nodes[r] + 1) * h;
        const double v = std::numbers::sqrt2 * std::sin(m * std::numbers::pi * x);
        sine_omega(static_cast<Eigen::Index>(r), m - 1) = v;
        acc += v * v;
      }
      mass[m - 1] = h * acc;
    }
  }
};

double shifted_mu(int k, double z, double a) {
  if (k < 1) throw invalid_argument("permode: transverse index must be >= 1");
  if (!(a > 0.0)) throw invalid_argument("permode: height must be positive");
  if (!std::isfinite(z)) throw invalid_argument("permode: z must be finite");
  const double t = k * std::numbers::pi / a;
  return z + t * t;
}

// Max of the probe ratios for one (k, z); F columns are random f draws.
double pair_constant(const PermodeContext& ctx, double mu, const MatrixZ& F) {
  double best = 0.0;
  for (int m = 0; m < ctx.n; ++m) {
    const double gap = ctx.lambda[m] - mu;
    const double r = 1.0 / (gap * gap / (ctx.lambda[m] + 1.0) + ctx.mass[m]);
    best = std::max(best, r);
  }
  if (F.cols() == 0) return best;
  MatrixZ U = MatrixZ::Zero(ctx.n, F.cols());
  VectorR fh1 = VectorR::Zero(F.cols());
  VectorR unorm2 = VectorR::Zero(F.cols());
  for (int m = 0; m < ctx.n; ++m) {
    const double gap = ctx.lambda[m] - mu;
    if (std::abs(gap) < 1e-12 * (ctx.lambda[m] + 1.0)) continue;
    for (Eigen::Index p = 0; p < F.cols(); ++p) {
      const cdouble f = F(m, p);
      const cdouble u = f / gap;
      U(m, p) = u;
      fh1[p] += std::norm(f) / (ctx.lambda[m] + 1.0);
      unorm2[p] += std::norm(u);
    }
  }
  const MatrixZ on_omega = ctx.sine_omega * U;
  for (Eigen::Index p = 0; p < F.cols(); ++p) {
    const double den = fh1[p] + ctx.h * on_omega.col(p).squaredNorm();
    if (den == 0.0) continue;  // fully resonant draw: dropped everywhere
    best = std::max(best, unorm2[p] / den);
  }
  return best;
}

MatrixZ draw_probes(int n, const ProbePolicy& policy) {
  if (policy.random_probes < 0)
    throw invalid_argument("permode: negative probe count");
  MatrixZ F(n, policy.random_probes);
  Rng rng(policy.seed);
  for (Eigen::Index p = 0; p < F.cols(); ++p)
    for (int m = 0; m < n; ++m) F(m, p) = cdouble(rng.normal(), rng.normal());
  return F;
}

}  // namespace

double permode_probe_ratio(int k, double z, double a, double omega_lo,
                           double omega_hi, const VectorZ& f_coeffs) {
  const PermodeContext ctx(static_cast<int>(f_coeffs.size()), omega_lo, omega_hi);
  const double mu = shifted_mu(k, z, a);
  if (f_coeffs.isZero(0.0)) return 0.0;
  VectorZ u = VectorZ::Zero(ctx.n);
  double fh1 = 0.0, unorm2 = 0.0;
  for (int m = 0; m < ctx.n; ++m) {
    const double gap = ctx.lambda[m] - mu;
    if (std::abs(gap) < 1e-12 * (ctx.lambda[m] + 1.0)) continue;
    u[m] = f_coeffs[m] / gap;
    fh1 += std::norm(f_coeffs[m]) / (ctx.lambda[m] + 1.0);
    unorm2 += std::norm(u[m]);
  }
  const double den = fh1 + ctx.h * (ctx.sine_omega * u).squaredNorm();
  if (den == 0.0) return 0.0;
  return unorm2 / den;
}

double permode_constant(int k, double z, double a, double omega_lo,
                        double omega_hi, const ProbePolicy& policy) {
  const PermodeContext ctx(policy.n, omega_lo, omega_hi);
  const MatrixZ F = draw_probes(policy.n, policy);
  return pair_constant(ctx, shifted_mu(k, z, a), F);
}

ObservabilityReport permode_scan(const PermodeConfig& cfg) {
  if (cfg.k_max < 1) throw invalid_argument("permode_scan: k_max must be >= 1");
  if (cfg.z_points < 1) throw invalid_argument("permode_scan: need a z grid");
  if (!(cfg.z_lo <= cfg.z_hi)) throw invalid_argument("permode_scan: bad z range");
  const PermodeContext ctx(cfg.probes.n, cfg.omega_lo, cfg.omega_hi);
  const MatrixZ F = draw_probes(cfg.probes.n, cfg.probes);

  std::vector<double> zs(static_cast<std::size_t>(cfg.z_points));
  for (int j = 0; j < cfg.z_points; ++j)
    zs[static_cast<std::size_t>(j)] =
        cfg.z_points == 1
            ? cfg.z_lo
            : cfg.z_lo + (cfg.z_hi - cfg.z_lo) * j / (cfg.z_points - 1);

  ObservabilityReport rep;
  rep.experiment = "permode_scan";
  rep.records.resize(static_cast<std::size_t>(cfg.k_max) * zs.size());
  parallel_for(rep.records.size(), cfg.workers, [&](std::size_t idx) {
    const int k = 1 + static_cast<int>(idx / zs.size());
    const double z = zs[idx % zs.size()];
    rep.records[idx] = {static_cast<double>(k),
                        pair_constant(ctx, shifted_mu(k, z, cfg.a), F), z,
                        std::string{}};
  });
  finalize_report(rep, false);
  return rep;
}

// --- band Gramian and observability constant --------------------------------

cdouble phase_kernel(double delta, double T) {
  if (delta == 0.0) return {T, 0.0};
  const double half = std::sin(0.5 * delta * T);
  return {std::sin(delta * T) / delta, 2.0 * half * half / delta};
}

MatrixZ band_overlap(const EigenBand& band, const Region& omega) {
  if (band.count() == 0) throw invalid_argument("band_overlap: empty band");
  if (static_cast<Eigen::Index>(omega.indicator.size()) != band.vectors.rows())
    throw invalid_argument("band_overlap: region does not match the band");
  for (double v : omega.indicator)
    if (!(v >= 0.0)) throw invalid_argument("band_overlap: negative indicator");
  VectorZ ind(band.vectors.rows());
  for (Eigen::Index i = 0; i < ind.size(); ++i)
    ind[i] = omega.indicator[static_cast<std::size_t>(i)];
  MatrixZ b = band.vectors.transpose() * (ind.asDiagonal() * band.vectors.conjugate());
  b = 0.5 * (b + MatrixZ(b.adjoint()));
  return b;
}

GramianMatrix gramian(const EigenBand& band, const Region& omega, double T,
                      double hbar) {
  if (!(T > 0.0)) throw invalid_argument("gramian: T must be positive");
  if (!(hbar > 0.0)) throw invalid_argument("gramian: hbar must be positive");
  const MatrixZ b = band_overlap(band, omega);
  const int k = band.count();
  GramianMatrix g;
  g.values = band.values;
  g.T = T;
  g.hbar = hbar;
  g.omega_label = omega.label;
  g.m.resize(k, k);
  parallel_for(static_cast<std::size_t>(k), 0, [&](std::size_t row) {
    const int j = static_cast<int>(row);
    g.m(j, j) = b(j, j).real() * T;
    for (int c = j + 1; c < k; ++c) {
      const cdouble v =
          b(j, c) * phase_kernel((band.values[c] - band.values[j]) / hbar, T);
      g.m(j, c) = v;
    }
  });
  for (int j = 0; j < k; ++j)
    for (int c = 0; c < j; ++c) g.m(j, c) = std::conj(g.m(c, j));
  return g;
}

ObservabilityConstant observability_constant(const GramianMatrix& g) {
  if (g.size() == 0) throw invalid_argument("observability_constant: empty Gramian");
  Eigen::SelfAdjointEigenSolver<MatrixZ> es(g.m);
  if (es.info() != Eigen::Success)
    throw data_error("observability_constant: dense eigensolve failed");
  const double lo = es.eigenvalues()(0);
  if (lo < -1e-10 * g.T)
    throw data_error("observability_constant: Gramian indefinite, lambda_min = " +
                     fmt_g17(lo));
  ObservabilityConstant out;
  out.c_obs = std::max(lo, 0.0);
  out.minimizer = es.eigenvectors().col(0);
  return out;
}

}  // namespace specctrl
