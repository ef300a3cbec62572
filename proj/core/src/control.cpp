#include "specctrl/control.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "specctrl/band_cache.hpp"
#include "specctrl/cap.hpp"
#include "specctrl/cg.hpp"
#include "specctrl/errors.hpp"
#include "specctrl/sparse_operator.hpp"
#include "specctrl/util.hpp"

namespace specctrl {

namespace {

VectorZ band_phases(const VectorR& values, double t) {
  VectorZ p(values.size());
  for (Eigen::Index j = 0; j < p.size(); ++j)
    p[j] = std::exp(cdouble(0.0, values[j] * t));
  return p;
}

VectorZ apply_indicator(const Region& omega, const VectorZ& u) {
  VectorZ out = u;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out[i] *= omega.indicator[static_cast<std::size_t>(i)];
  return out;
}

}  // namespace

VectorZ ControlSolution::control_at(double t) const {
  const VectorZ coeffs = d.cwiseProduct(band_phases(band.values, t));
  return apply_indicator(omega, band_reconstruct(band, coeffs));
}

ControlSolution hum_control(const EigenBand& band, const Region& omega,
                            double T, const VectorZ& u0) {
  if (band.count() == 0) throw invalid_argument("hum_control: empty band");
  if (u0.size() != band.vectors.rows())
    throw invalid_argument("hum_control: initial state does not match the grid");
  if (!(T > 0.0)) throw invalid_argument("hum_control: need T > 0");

  ControlSolution sol;
  sol.band = band;
  sol.omega = omega;
  sol.T = T;
  sol.gram = gramian(band, omega, T);

  Eigen::SelfAdjointEigenSolver<MatrixZ> es(sol.gram.m);
  if (es.info() != Eigen::Success)
    throw data_error("hum_control: gramian eigensolve failed");
  const double lambda_min = es.eigenvalues()(0);
  if (!(lambda_min > 1e-12 * T))
    throw illposed_error(
        "hum_control: band not observable from omega (gramian lambda_min = " +
            fmt_g17(lambda_min) + ")",
        lambda_min);

  sol.c = project_onto_band(band, u0);
  const double cnorm = sol.c.norm();
  if (cnorm == 0.0)
    throw invalid_argument("hum_control: initial state has no band component");
  sol.out_of_band =
      (u0 - band_reconstruct(band, sol.c)).norm() / u0.norm();

  const MatrixZ& m = sol.gram.m;
  const CgResult cg = cg_hermitian_solve(
      [&m](const VectorZ& x) { return VectorZ(m * x); }, VectorZ(-sol.c), 1e-10);
  sol.d = cg.x;
  sol.cg_iterations = cg.iterations;
  sol.cg_relative_residual = cg.relative_residual;

  sol.cost = -std::real(sol.d.dot(sol.c));
  sol.rho = (sol.c + m * sol.d).norm() / cnorm;
  return sol;
}

ControlVerification verify_null_control(const ControlSolution& sol, int steps) {
  if (steps < 2 || steps % 2 != 0)
    throw invalid_argument("verify_null_control: steps must be even and >= 2");

  const EigenBand& band = sol.band;
  const int k = band.count();
  const double dt = sol.T / steps;

  // a_j(T) = e^{i lambda_j T} c_j + int_0^T e^{i lambda_j (T-s)} <v_j, g(s)> ds,
  // with g assembled on the grid at every quadrature node.
  VectorZ integral = VectorZ::Zero(k);
  for (int i = 0; i <= steps; ++i) {
    const double s = i * dt;
    const VectorZ g = sol.control_at(s);
    const VectorZ w = project_onto_band(band, g);
    const double weight = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    for (int j = 0; j < k; ++j)
      integral[j] += weight * w[j] * std::exp(cdouble(0.0, -band.values[j] * s));
  }
  integral *= dt / 3.0;

  VectorZ terminal(k);
  for (int j = 0; j < k; ++j)
    terminal[j] =
        std::exp(cdouble(0.0, band.values[j] * sol.T)) * (sol.c[j] + integral[j]);

  ControlVerification out;
  out.steps = steps;
  out.rho_closed = sol.rho;
  out.rho_quad = terminal.norm() / sol.c.norm();
  out.mismatch = std::abs(out.rho_quad - out.rho_closed);

  const VectorZ u_t = band_reconstruct(band, terminal);
  const double unorm = u_t.norm();
  if (unorm > 0.0) {
    const VectorZ back = project_onto_band(band, u_t);
    out.band_leak = (u_t - band_reconstruct(band, back)).norm() / unorm;
  }
  return out;
}

PipelineCheck theorem3_pipeline(const ScanResult& scan, const PipelineConfig& cfg) {
  if (cfg.modes.empty()) throw invalid_argument("theorem3_pipeline: no modes");
  if (!(cfg.K > 0.0)) throw invalid_argument("theorem3_pipeline: need K > 0");
  if (!(cfg.window_lo > 0.0) || !(cfg.window_hi > cfg.window_lo))
    throw invalid_argument("theorem3_pipeline: bad energy window");
  if (cfg.omega_threshold >= cfg.half_length)
    throw invalid_argument(
        "theorem3_pipeline: omega threshold must lie inside the cylinder "
        "(negative observes everything)");

  PipelineCheck check;
  check.K = cfg.K;
  check.threshold = cfg.stability_threshold;
  check.records.resize(cfg.modes.size());

  parallel_for(cfg.modes.size(), cfg.workers, [&](std::size_t idx) {
    const int mode = cfg.modes[idx];
    if (mode < 1) throw invalid_argument("theorem3_pipeline: modes must be positive");
    const double h = 1.0 / mode;

    const ScanPoint* row = nullptr;
    for (const ScanPoint& p : scan.points)
      if (std::abs(p.h - h) <= 1e-9 * h) row = &p;
    if (row == nullptr)
      throw dependency_error("theorem3_pipeline: mode " + std::to_string(mode) +
                             " is missing from the resolvent scan");

    PipelineRecord rec;
    rec.mode = mode;
    rec.h = h;
    rec.g_full = h * row->norm;
    rec.g_cutoff = h * row->cutoff_norm;
    rec.T = cfg.K * rec.g_full;

    const int n = cap_auto_points(CapFamily::hyperbolic, h, cdouble(1.0, 0.0), 1,
                                  cfg.half_length);
    const Grid g = build_cosh_mode(n, cfg.half_length, mode);
    const SparseOperator op = assemble_laplacian(g);
    const double scale = static_cast<double>(mode) * mode;
    const int cap = 2 * mode + 64;
    EigenBand band =
        compute_band_cached(op, cfg.window_lo * scale, cfg.window_hi * scale, cap,
                            cfg.band, cfg.use_cache, cfg.cache_dir);
    if (band.truncated)
      throw convergence_error("theorem3_pipeline: band truncated at mode " +
                              std::to_string(mode));
    if (band.count() == 0)
      throw data_error("theorem3_pipeline: empty band at mode " +
                       std::to_string(mode));
    band.values *= h * h;

    const double threshold = cfg.omega_threshold;
    const Region omega = region_from_predicate(
        g, std::function<bool(double, double)>([threshold](double x, double) {
          return std::abs(x) > threshold;
        }),
        "support");

    const GramianMatrix m = gramian(band, omega, rec.T, h);
    rec.band_count = band.count();
    rec.c_obs = observability_constant(m).c_obs;
    rec.ratio = rec.c_obs * rec.T / (rec.g_cutoff * rec.g_cutoff);
    check.records[idx] = rec;
  });

  std::vector<double> ratios;
  for (const PipelineRecord& r : check.records) ratios.push_back(r.ratio);
  std::sort(ratios.begin(), ratios.end());
  const double median = ratios.size() % 2
                            ? ratios[ratios.size() / 2]
                            : 0.5 * (ratios[ratios.size() / 2 - 1] +
                                     ratios[ratios.size() / 2]);
  for (const PipelineRecord& r : check.records)
    if (r.c_obs * r.T > 0.0)
      check.c0 = std::max(check.c0, r.g_cutoff * r.g_cutoff / (r.c_obs * r.T));
  check.min_over_median = median > 0.0 ? ratios.front() / median : 0.0;
  check.pass = check.min_over_median >= cfg.stability_threshold;
  return check;
}

Quasimode build_quasimode(const Grid& g, int transverse, int axial,
                          double ramp_width) {
  if (transverse < 1 || axial < 1)
    throw invalid_argument("build_quasimode: mode indices must be >= 1");
  if (!(ramp_width >= 0.0))
    throw invalid_argument("build_quasimode: ramp width must be >= 0");

  double len_x = 0.0, len_y = 0.0, off_x = 0.0, off_y = 0.0;
  bool truncated = false;
  switch (g.kind) {
    case GridKind::stadium:
      len_x = g.flat;
      len_y = 2.0 * g.radius;
      off_y = g.radius;
      truncated = true;
      break;
    case GridKind::rectangle:
      len_x = 1.0;
      len_y = g.height;
      break;
    default:
      throw invalid_argument("build_quasimode: need a stadium or rectangle grid");
  }
  if (2.0 * ramp_width >= len_x)
    throw invalid_argument("build_quasimode: ramps overlap");

  Quasimode q;
  const double sx = std::sin(0.5 * axial * std::numbers::pi * g.hx / len_x);
  const double sy = std::sin(0.5 * transverse * std::numbers::pi * g.hy / len_y);
  q.lambda = 4.0 / (g.hx * g.hx) * sx * sx + 4.0 / (g.hy * g.hy) * sy * sy;
  q.label = "transverse=" + std::to_string(transverse) +
            ",axial=" + std::to_string(axial);

  q.u.resize(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i) + off_x;
    const double y = g.y(i) + off_y;
    double chi = 1.0;
    if (truncated) {
      if (x <= 0.0 || x >= len_x) {
        chi = 0.0;
      } else if (ramp_width > 0.0) {
        chi = cubic_ramp(x / ramp_width) * cubic_ramp((len_x - x) / ramp_width);
      }
    }
    q.u[static_cast<Eigen::Index>(i)] =
        chi * std::sin(axial * std::numbers::pi * x / len_x) *
        std::sin(transverse * std::numbers::pi * y / len_y);
  }
  return q;
}

double quasimode_error(const Grid& g, const SparseOperator& op, int transverse,
                       int axial, double ramp_width) {
  const Quasimode q = build_quasimode(g, transverse, axial, ramp_width);
  double len_x = g.kind == GridKind::stadium ? g.flat : 1.0;
  double len_y = g.kind == GridKind::stadium ? 2.0 * g.radius : g.height;
  if (2.0 * len_x / (axial * g.hx) < 10.0 || 2.0 * len_y / (transverse * g.hy) < 10.0)
    throw resolution_error(
        "quasimode_error: fewer than 10 nodes per wavelength; refine the grid");
  if (op.mat.rows() != q.u.size())
    throw invalid_argument("quasimode_error: operator does not match the grid");

  const double unorm = q.u.norm();
  if (unorm == 0.0)
    throw invalid_argument("quasimode_error: mode vanishes on this grid");
  return (op.mat * q.u - q.lambda * q.u).norm() / unorm;
}

double quasimode_error(const Grid& g, int transverse, int axial,
                       double ramp_width) {
  return quasimode_error(g, assemble_laplacian(g), transverse, axial, ramp_width);
}

}  // namespace specctrl
