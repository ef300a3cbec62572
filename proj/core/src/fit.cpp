#include "specctrl/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "specctrl/errors.hpp"

namespace specctrl {

const char* scaling_law_name(ScalingLaw law) {
  switch (law) {
    case ScalingLaw::log_law: return "log_law";
    case ScalingLaw::pure_power: return "pure_power";
    case ScalingLaw::sqrt_log: return "sqrt_log";
  }
  return "unknown";
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw invalid_argument("linear_fit: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw invalid_argument("linear_fit: need at least 2 points");

  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw invalid_argument("linear_fit: degenerate abscissae");

  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += r * r;
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  f.r_squared = ss_tot == 0.0 ? (ss_res == 0.0 ? 1.0 : 0.0)
                              : 1.0 - ss_res / ss_tot;
  return f;
}

double FitResult::predict(double h) const {
  const double lg = std::log(1.0 / h);
  switch (law) {
    case ScalingLaw::log_law: return (coefficient * lg + intercept) / h;
    case ScalingLaw::pure_power: return std::exp(coefficient * lg + intercept);
    case ScalingLaw::sqrt_log:
      return (coefficient * std::sqrt(lg) + intercept) / h;
  }
  return 0.0;
}

FitResult fit_scaling(const std::vector<double>& hs,
                      const std::vector<double>& norms, ScalingLaw law) {
  if (hs.size() != norms.size())
    throw invalid_argument("fit_scaling: size mismatch");
  if (hs.size() < 4) throw invalid_argument("fit_scaling: need >= 4 points");

  std::vector<double> x(hs.size()), y(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double h = hs[i];
    if (!(h > 0.0)) throw invalid_argument("fit_scaling: h must be positive");
    const double lg = std::log(1.0 / h);
    switch (law) {
      case ScalingLaw::log_law:
        x[i] = lg;
        y[i] = h * norms[i];
        break;
      case ScalingLaw::pure_power:
        if (!(norms[i] > 0.0))
          throw invalid_argument("fit_scaling: pure_power needs positive norms");
        x[i] = lg;
        y[i] = std::log(norms[i]);
        break;
      case ScalingLaw::sqrt_log:
        if (!(h < 1.0))
          throw invalid_argument("fit_scaling: sqrt_log needs h < 1");
        x[i] = std::sqrt(lg);
        y[i] = h * norms[i];
        break;
    }
  }

  const LinearFit lf = linear_fit(x, y);
  FitResult out;
  out.law = law;
  out.coefficient = lf.slope;
  out.intercept = lf.intercept;
  out.r_squared = lf.r_squared;
  out.points = static_cast<int>(hs.size());
  out.rss_log = 0.0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double pred = out.predict(hs[i]);
    if (!(pred > 0.0) || !(norms[i] > 0.0)) {
      out.rss_log = std::numeric_limits<double>::infinity();
      break;
    }
    const double d = std::log(pred) - std::log(norms[i]);
    out.rss_log += d * d;
  }
  return out;
}

FitResult fit_scan(const ScanResult& r, ScalingLaw law, bool use_cutoff) {
  const std::vector<ReducedPoint> red = reduce_max_over_z(r);
  std::vector<double> hs, ns;
  hs.reserve(red.size());
  ns.reserve(red.size());
  for (const ReducedPoint& p : red) {
    hs.push_back(p.h);
    ns.push_back(use_cutoff ? p.cutoff_norm : p.norm);
  }
  return fit_scaling(hs, ns, law);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw invalid_argument("spearman_rho: size mismatch");
  if (x.size() < 2) throw invalid_argument("spearman_rho: need >= 2 points");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const std::size_t n = x.size();
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
    sxy += (rx[i] - mx) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace specctrl
