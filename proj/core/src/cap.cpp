#include "specctrl/cap.hpp"

#include <cmath>
#include <numbers>

#include "specctrl/errors.hpp"
#include "specctrl/factorization.hpp"
#include "specctrl/singular.hpp"

namespace specctrl {

const char* cap_family_name(CapFamily f) {
  switch (f) {
    case CapFamily::hyperbolic: return "hyperbolic";
    case CapFamily::degenerate_well: return "degenerate_well";
  }
  return "unknown";
}

namespace {

std::vector<double> absorber_profile(const Grid& g, double center, double start,
                                     double ramp) {
  std::vector<double> a(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    a[i] = cubic_ramp((std::abs(g.x(i) - center) - start) / ramp);
  return a;
}

void check_absorber(const char* where, double start, double ramp, double half) {
  if (start < 0.0 || ramp <= 0.0 || start + ramp > half)
    throw invalid_argument(std::string(where) +
                           ": absorber ramp must fit inside the domain");
}

}  // namespace

int cap_auto_points(CapFamily family, double h, cdouble z, int order,
                    double half_length) {
  double k_max = 0.0;
  if (family == CapFamily::hyperbolic) {
    k_max = std::sqrt(std::max(z.real(), 0.0)) / h;
  } else {
    const double barrier = std::pow(half_length, 2.0 * order);
    k_max = std::sqrt(std::max(z.real(), 0.0) + barrier) / h;
  }
  const double waves = k_max * (2.0 * half_length) / (2.0 * std::numbers::pi);
  const double n = std::ceil(24.0 * waves);
  return std::max(401, static_cast<int>(n));
}

CapModel build_cap_hyperbolic(int mode, cdouble z, int n, double half_length,
                              double absorb_start, double absorb_ramp,
                              double amplitude) {
  if (mode < 1)
    throw invalid_argument("build_cap_hyperbolic: mode must be >= 1");
  check_absorber("build_cap_hyperbolic", absorb_start, absorb_ramp, half_length);
  const double h = 1.0 / mode;
  if (amplitude < 0.0) amplitude = h;
  if (n <= 0)
    n = cap_auto_points(CapFamily::hyperbolic, h, z, 0, half_length);

  CapModel m;
  m.family = CapFamily::hyperbolic;
  m.grid = build_cosh_mode(n, half_length, mode);
  m.h = h;
  m.z = z;
  m.mode = mode;
  m.amplitude = amplitude;
  m.damping = absorber_profile(m.grid, 0.0, absorb_start, absorb_ramp);
  m.cutoff = m.damping;

  SparseOperator l = assemble_laplacian(m.grid);
  l.mat *= h * h;
  m.q = l.shifted(z).damped(m.damping, amplitude);
  m.q.provenance = "cap_hyperbolic:" + m.grid.describe();
  return m;
}

CapModel build_cap_degenerate_well(double h, int order, cdouble z, int n,
                                   double half_width, double absorb_start,
                                   double absorb_ramp, double amplitude) {
  if (!(h > 0.0))
    throw invalid_argument("build_cap_degenerate_well: h must be positive");
  if (order < 1)
    throw invalid_argument("build_cap_degenerate_well: order must be >= 1");
  check_absorber("build_cap_degenerate_well", absorb_start, absorb_ramp,
                 half_width);
  if (amplitude < 0.0) amplitude = 1.0;
  if (n <= 0)
    n = cap_auto_points(CapFamily::degenerate_well, h, z, order, half_width);

  CapModel m;
  m.family = CapFamily::degenerate_well;
  m.grid = build_interval(n, 2.0 * half_width);
  m.h = h;
  m.z = z;
  m.order = order;
  m.amplitude = amplitude;
  m.damping = absorber_profile(m.grid, half_width, absorb_start, absorb_ramp);
  m.cutoff = m.damping;

  SparseOperator l = assemble_laplacian(m.grid);
  l.mat *= h * h;
  for (Eigen::Index i = 0; i < l.n(); ++i) {
    const double xc = m.grid.x(static_cast<std::size_t>(i)) - half_width;
    l.mat.coeffRef(i, i) -= std::pow(xc, 2.0 * order);
  }
  m.q = l.shifted(z).damped(m.damping, amplitude);
  m.q.provenance = "cap_degenerate_well:" + m.grid.describe();
  return m;
}

namespace {

// Largest singular value of Q^{-1} diag(chi) by power iteration on
// diag(chi) Q^{-H} Q^{-1} diag(chi), reusing the caller's LU.
double cutoff_norm_power(const CapModel& model, const Factorization& fact,
                         const std::vector<double>& chi, bool check_support,
                         double tol, int max_iterations, int* iterations_out) {
  const Eigen::Index n = model.q.n();
  if (static_cast<Eigen::Index>(chi.size()) != n)
    throw invalid_argument("cutoff_resolvent_norm: cutoff size mismatch");
  bool any = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (chi[i] == 0.0) continue;
    any = true;
    if (chi[i] < 0.0)
      throw invalid_argument("cutoff_resolvent_norm: cutoff must be >= 0");
    if (check_support && model.damping[static_cast<std::size_t>(i)] <= 0.0)
      throw invalid_argument(
          "cutoff_resolvent_norm: cutoff must vanish outside the absorber");
  }
  if (!any)
    throw invalid_argument("cutoff_resolvent_norm: cutoff is identically zero");

  Rng rng(0xc0700ffULL);
  VectorZ v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v[i] = chi[i] > 0.0 ? rng.cnormal() : cdouble(0.0, 0.0);
  v /= v.norm();

  double sigma = 0.0;
  int it = 0;
  bool converged = false;
  for (; it < max_iterations && !converged; ++it) {
    VectorZ u(n);
    for (Eigen::Index i = 0; i < n; ++i) u[i] = chi[i] * v[i];
    const VectorZ w = fact.solve(u);
    VectorZ t = fact.solve_adjoint(w);
    for (Eigen::Index i = 0; i < n; ++i) t[i] *= chi[i];
    const double theta = std::max(v.dot(t).real(), 0.0);
    const double next = std::sqrt(theta);
    const double nrm = t.norm();
    if (nrm == 0.0)
      throw solver_error("cutoff_resolvent_norm: power iterate vanished");
    v = t / nrm;
    if (it > 0 && std::abs(next - sigma) <= tol * std::max(next, 1e-300))
      converged = true;
    sigma = next;
  }
  if (iterations_out) *iterations_out = it;
  if (!converged)
    throw convergence_error("cutoff_resolvent_norm: power iteration cap hit",
                            sigma, it);
  return sigma;
}

}  // namespace

ResolventNorms resolvent_norms(const CapModel& model, double tol,
                               int max_iterations) {
  const Factorization fact(model.q);
  ResolventNorms out;
  const SingularEstimate s =
      smallest_singular(model.q, fact, tol, max_iterations);
  out.full = 1.0 / s.value;
  int cut_it = 0;
  out.cutoff = cutoff_norm_power(model, fact, model.cutoff, true, tol,
                                 max_iterations, &cut_it);
  out.iterations = s.iterations + cut_it;
  return out;
}

double resolvent_norm(const CapModel& model) {
  const SingularEstimate s = smallest_singular(model.q);
  return 1.0 / s.value;
}

double cutoff_resolvent_norm(const CapModel& model) {
  return cutoff_resolvent_norm(model, model.cutoff);
}

double cutoff_resolvent_norm(const CapModel& model,
                             const std::vector<double>& chi,
                             bool check_support) {
  const Factorization fact(model.q);
  return cutoff_norm_power(model, fact, chi, check_support, 1e-8, 500, nullptr);
}

}  // namespace specctrl
