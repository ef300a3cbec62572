#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "specctrl/cap.hpp"
#include "specctrl/errors.hpp"
#include "specctrl/fit.hpp"
#include "specctrl/lanczos.hpp"
#include "specctrl/scan.hpp"

using namespace specctrl;

namespace {

CapModel diag_model(const std::vector<cdouble>& d) {
  CapModel m;
  SparseMatrixZ mat(static_cast<Eigen::Index>(d.size()),
                    static_cast<Eigen::Index>(d.size()));
  std::vector<Eigen::Triplet<cdouble>> t;
  for (std::size_t i = 0; i < d.size(); ++i)
    t.emplace_back(static_cast<int>(i), static_cast<int>(i), d[i]);
  mat.setFromTriplets(t.begin(), t.end());
  mat.makeCompressed();
  m.q.mat = std::move(mat);
  m.q.symmetry = Symmetry::general;
  m.damping.assign(d.size(), 1.0);
  m.cutoff = m.damping;
  return m;
}

SparseOperator quartic_well_unit(int n, double half_width) {
  Grid g = build_interval(n, 2.0 * half_width);
  SparseOperator l = assemble_laplacian(g);
  for (Eigen::Index i = 0; i < l.n(); ++i) {
    const double yc = g.x(static_cast<std::size_t>(i)) - half_width;
    l.mat.coeffRef(i, i) -= yc * yc * yc * yc;
  }
  return l;
}

std::vector<double> dyadic_hs(int lo_pow, int hi_pow) {
  std::vector<double> hs;
  for (int p = lo_pow; p <= hi_pow; ++p) hs.push_back(std::ldexp(1.0, -p));
  return hs;
}

}  // namespace

TEST_SUITE("resolvent") {

TEST_CASE("diagonal operator gives exact reciprocal of smallest entry") {
  const CapModel m = diag_model({cdouble(3.0, 0.0), cdouble(0.0, -2.0),
                                 cdouble(0.25, 0.0), cdouble(5.0, 1.0)});
  CHECK(resolvent_norm(m) == doctest::Approx(4.0).epsilon(1e-7));
}

TEST_CASE("hermitian limit: norm equals reciprocal spectral distance") {
  // h small enough that the symmetric wall pair is split far below the
  // comparison tolerance; the pair gap bounds what inverse iteration resolves.
  const double z = -8.0;
  CapModel m = build_cap_degenerate_well(0.125, 1, z, 801, 2.0, 1.0, 0.5, 0.0);
  REQUIRE(m.q.symmetry == Symmetry::hermitian);
  REQUIRE(m.q.hermitian_defect() == 0.0);

  BandOptions tight;
  tight.tol = 1e-12;
  const BandPairs low = eig_lowest(m.q, 1, tight);
  const double dist = low.values[0];  // spectrum of Q = H - z starts above 0
  REQUIRE(dist > 0.0);
  const ResolventNorms norms = resolvent_norms(m, 1e-11);
  CHECK(norms.full == doctest::Approx(1.0 / dist).epsilon(1e-8));
}

TEST_CASE("damping positivity: quadratic form has nonpositive imaginary part") {
  const CapModel m = build_cap_hyperbolic(4, 1.0, 401);
  Rng rng(911);
  const auto n = m.q.n();
  for (int trial = 0; trial < 100; ++trial) {
    VectorZ u(n);
    for (Eigen::Index i = 0; i < n; ++i) u[i] = rng.cnormal();
    const cdouble quad = u.dot(m.q.apply(u));
    CHECK(quad.imag() <= 1e-12 * u.squaredNorm());
  }
}

TEST_CASE("cutoff norm never exceeds full norm") {
  for (int mode : {8, 32}) {
    const CapModel m = build_cap_hyperbolic(mode, 1.0);
    const ResolventNorms norms = resolvent_norms(m);
    CHECK(norms.cutoff <= norms.full * (1.0 + 1e-9));
    CHECK(norms.cutoff > 0.0);
  }
  const CapModel w = build_cap_degenerate_well(0.125, 1, 0.0);
  const ResolventNorms norms = resolvent_norms(w);
  CHECK(norms.cutoff <= norms.full * (1.0 + 1e-9));
}

TEST_CASE("cutoff with identity weight recovers the full norm") {
  const CapModel m = build_cap_hyperbolic(8, 1.0, 501);
  const std::vector<double> ones(m.grid.size(), 1.0);
  const double full = resolvent_norm(m);
  const double cut = cutoff_resolvent_norm(m, ones, false);
  CHECK(cut == doctest::Approx(full).epsilon(1e-6));
}

TEST_CASE("cutoff support hypothesis is enforced") {
  const CapModel m = build_cap_hyperbolic(4, 1.0, 401);
  std::vector<double> chi(m.grid.size(), 0.0);
  chi[m.grid.size() / 2] = 1.0;  // center: absorber vanishes there
  CHECK_THROWS_AS((void)cutoff_resolvent_norm(m, chi), invalid_argument);
  CHECK_NOTHROW((void)cutoff_resolvent_norm(m, chi, false));

  const std::vector<double> zeros(m.grid.size(), 0.0);
  CHECK_THROWS_AS((void)cutoff_resolvent_norm(m, zeros), invalid_argument);

  std::vector<double> neg = m.damping;
  neg[0] = -0.5;
  CHECK_THROWS_AS((void)cutoff_resolvent_norm(m, neg), invalid_argument);
}

TEST_CASE("elliptic envelope: damping never increases the norm below spectrum") {
  const double z = -8.0;
  for (double h : {0.125, 0.0625}) {
    const CapModel off = build_cap_degenerate_well(h, 1, z, 0, 2.0, 1.0, 0.5, 0.0);
    const CapModel on = build_cap_degenerate_well(h, 1, z, 0, 2.0, 1.0, 0.5, 1.0);
    const double undamped = resolvent_norm(off);
    const double damped = resolvent_norm(on);
    CHECK(damped <= undamped * (1.0 + 1e-8));
  }
}

TEST_CASE("elliptic control scan is flat in h") {
  ScanConfig cfg;
  cfg.family = CapFamily::degenerate_well;
  cfg.well_order = 1;
  cfg.hs = {0.0625, 0.03125, 0.015625};
  cfg.zs = {cdouble(-8.0, 0.0)};
  cfg.amplitude = 0.0;
  const ScanResult r = run_scan(cfg);
  REQUIRE(r.points.size() == 3);
  REQUIRE(r.failures.empty());
  double lo = r.points[0].norm, hi = r.points[0].norm;
  for (const ScanPoint& p : r.points) {
    lo = std::min(lo, p.norm);
    hi = std::max(hi, p.norm);
  }
  CHECK(hi / lo < 1.25);
}

TEST_CASE("inverted-parabola norm grows as h shrinks") {
  double prev = 0.0;
  for (double h : {0.125, 0.0625, 0.03125}) {
    const double norm =
        resolvent_norm(build_cap_degenerate_well(h, 1, 0.0));
    CHECK(norm > prev);
    prev = norm;
  }
}

TEST_CASE("z maximizer over the default grid is interior") {
  const std::vector<cdouble> zs = default_z_grid(CapFamily::hyperbolic);
  REQUIRE(zs.size() == 11);
  CHECK(zs.front() == cdouble(0.9, 0.0));
  CHECK(zs.back() == cdouble(1.1, 0.0));
  std::vector<double> norms;
  for (const cdouble& z : zs)
    norms.push_back(resolvent_norm(build_cap_hyperbolic(16, z)));
  std::size_t argmax = 0;
  for (std::size_t i = 1; i < norms.size(); ++i)
    if (norms[i] > norms[argmax]) argmax = i;
  CHECK(argmax > 0);
  CHECK(argmax < norms.size() - 1);

  // the scan row records exactly that maximizer
  ScanConfig cfg;
  cfg.family = CapFamily::hyperbolic;
  cfg.modes = {16};
  const ScanResult r = run_scan(cfg);
  REQUIRE(r.points.size() == 1);
  CHECK(r.points[0].z == zs[argmax]);
  CHECK(r.points[0].norm == norms[argmax]);
}

TEST_CASE("dense svd agreement on a coarse discretization") {
  const CapModel m = build_cap_hyperbolic(4, 1.0, 200);
  const Eigen::MatrixXcd dense(m.q.mat);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(dense);
  const double sigma_min = svd.singularValues().minCoeff();
  CHECK(resolvent_norm(m) == doctest::Approx(1.0 / sigma_min).epsilon(1e-6));
}

TEST_CASE("quartic well rescaling between two discretizations") {
  const double h = 0.125;
  const double scale = std::pow(h, 4.0 / 3.0);
  const double stretch = std::pow(h, -1.0 / 3.0);

  const CapModel m = build_cap_degenerate_well(h, 2, 0.0, 4001, 2.0, 1.0, 0.5, 0.0);
  REQUIRE(m.q.symmetry == Symmetry::hermitian);
  const BandPairs direct = eig_lowest(m.q, 4);

  const SparseOperator scaled = quartic_well_unit(4001, 2.0 * stretch);
  const BandPairs reference = eig_lowest(scaled, 4);

  for (int j = 0; j < 4; ++j) {
    const double expected = scale * reference.values[j];
    CHECK(direct.values[j] ==
          doctest::Approx(expected).epsilon(5e-3));
  }
}

TEST_CASE("auto resolution policy: floor and wave-count growth") {
  CHECK(cap_auto_points(CapFamily::hyperbolic, 1.0 / 16, 1.0, 0, 3.0) == 401);
  const int fine = cap_auto_points(CapFamily::hyperbolic, 1.0 / 1024, 1.1, 0, 3.0);
  CHECK(fine > 20000);
  CHECK(fine < 30000);
  const int well = cap_auto_points(CapFamily::degenerate_well, 0.125, 0.0, 1, 2.0);
  CHECK(well >= 401);

  const CapModel m = build_cap_hyperbolic(16, 1.0);
  CHECK(static_cast<int>(m.grid.size()) ==
        cap_auto_points(CapFamily::hyperbolic, 1.0 / 16, 1.0, 0, 3.0));
}

TEST_CASE("scan rows are per-h maximizers over the z grid") {
  ScanConfig cfg;
  cfg.family = CapFamily::degenerate_well;
  cfg.well_order = 1;
  cfg.hs = {0.0625, 0.125};
  cfg.zs = {cdouble(0.0, 0.0), cdouble(-0.05, 0.0)};
  const ScanResult r = run_scan(cfg);
  REQUIRE(r.points.size() == 2);
  CHECK(r.points[0].h == 0.125);
  CHECK(r.points[1].h == 0.0625);
  CHECK(r.well_order == 1);
  CHECK(r.failures.empty());

  for (const ScanPoint& row : r.points) {
    double best = 0.0;
    cdouble best_z;
    for (const cdouble& z : cfg.zs) {
      ScanConfig one = cfg;
      one.hs = {row.h};
      one.zs = {z};
      const ScanResult single = run_scan(one);
      REQUIRE(single.points.size() == 1);
      if (single.points[0].norm > best) {
        best = single.points[0].norm;
        best_z = z;
      }
    }
    CHECK(row.norm == best);
    CHECK(row.z == best_z);
  }

  ScanConfig bad;
  bad.family = CapFamily::hyperbolic;
  CHECK_THROWS_AS((void)run_scan(bad), invalid_argument);
  bad.modes = {0};
  CHECK_THROWS_AS((void)run_scan(bad), invalid_argument);
  ScanConfig badw;
  badw.family = CapFamily::degenerate_well;
  badw.hs = {-0.5};
  CHECK_THROWS_AS((void)run_scan(badw), invalid_argument);
}

TEST_CASE("scan csv round trip is exact") {
  ScanResult r;
  r.points.push_back({0.0625, cdouble(0.9, 0.0), 123.456789012345678, 7.5, 42});
  r.points.push_back({0.03125, cdouble(-0.05, 1e-3), 1e17, 2.0 / 3.0, 7});
  const std::string path =
      (std::filesystem::temp_directory_path() / "specctrl-scan-rt.csv").string();
  save_scan_csv(r, path);
  const ScanResult back = load_scan_csv(path);
  REQUIRE(back.points.size() == r.points.size());
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    CHECK(back.points[i].h == r.points[i].h);
    CHECK(back.points[i].z == r.points[i].z);
    CHECK(back.points[i].norm == r.points[i].norm);
    CHECK(back.points[i].cutoff_norm == r.points[i].cutoff_norm);
    CHECK(back.points[i].iterations == r.points[i].iterations);
  }
  std::filesystem::remove(path);

  CHECK_THROWS_AS((void)load_scan_csv("/nonexistent/specctrl.csv"), data_error);
  const std::string badpath =
      (std::filesystem::temp_directory_path() / "specctrl-scan-bad.csv").string();
  {
    std::FILE* f = std::fopen(badpath.c_str(), "w");
    std::fputs("h,z_re,z_im,norm\n0.5,0,0,1\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS((void)load_scan_csv(badpath), data_error);
  std::filesystem::remove(badpath);
}

TEST_CASE("reduction takes the per-h envelope and gap ratios follow") {
  ScanResult r;
  r.points.push_back({0.5, cdouble(0.9, 0.0), 8.0, 1.0, 1});
  r.points.push_back({0.5, cdouble(1.1, 0.0), 6.0, 2.0, 1});
  r.points.push_back({0.25, cdouble(0.9, 0.0), 20.0, 5.0, 1});
  const auto red = reduce_max_over_z(r);
  REQUIRE(red.size() == 2);
  CHECK(red[0].h == 0.5);
  CHECK(red[0].norm == 8.0);
  CHECK(red[0].cutoff_norm == 2.0);
  CHECK(red[1].norm == 20.0);

  const auto gaps = gap_ratios(r);
  REQUIRE(gaps.size() == 2);
  CHECK(gaps[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(gaps[1] == doctest::Approx(1.25 * 1.25 / 5.0).epsilon(1e-12));
}

TEST_CASE("synthetic log law is recovered exactly") {
  const std::vector<double> hs = dyadic_hs(4, 10);
  std::vector<double> norms;
  for (double h : hs) norms.push_back(5.0 * std::log(1.0 / h) / h);
  const FitResult f = fit_scaling(hs, norms, ScalingLaw::log_law);
  CHECK(f.coefficient == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.rss_log < 1e-20);
  CHECK(f.points == 7);

  const FitResult wrong = fit_scaling(hs, norms, ScalingLaw::pure_power);
  CHECK(f.rss_log < wrong.rss_log);
}

TEST_CASE("synthetic power law is recovered exactly") {
  const std::vector<double> hs = dyadic_hs(4, 10);
  std::vector<double> norms;
  for (double h : hs) norms.push_back(std::pow(h, -4.0 / 3.0));
  const FitResult f = fit_scaling(hs, norms, ScalingLaw::pure_power);
  CHECK(f.coefficient == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.predict(0.01) == doctest::Approx(std::pow(0.01, -4.0 / 3.0)).epsilon(1e-9));
}

TEST_CASE("synthetic sqrt-log law is recovered exactly") {
  const std::vector<double> hs = dyadic_hs(4, 10);
  std::vector<double> norms;
  for (double h : hs) norms.push_back(2.0 * std::sqrt(std::log(1.0 / h)) / h);
  const FitResult f = fit_scaling(hs, norms, ScalingLaw::sqrt_log);
  CHECK(f.coefficient == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fits demand enough points and consistent shapes") {
  const std::vector<double> h3 = {0.5, 0.25, 0.125};
  const std::vector<double> n3 = {1.0, 2.0, 4.0};
  CHECK_THROWS_AS((void)fit_scaling(h3, n3, ScalingLaw::log_law),
                  invalid_argument);
  const std::vector<double> h4 = {0.5, 0.25, 0.125, 0.0625};
  CHECK_THROWS_AS((void)fit_scaling(h4, n3, ScalingLaw::pure_power),
                  invalid_argument);
  const std::vector<double> bad = {0.5, 0.25, -0.125, 0.0625};
  const std::vector<double> n4 = {1.0, 2.0, 4.0, 8.0};
  CHECK_THROWS_AS((void)fit_scaling(bad, n4, ScalingLaw::log_law),
                  invalid_argument);
  const std::vector<double> big = {2.0, 1.5, 1.25, 1.125};
  CHECK_THROWS_AS((void)fit_scaling(big, n4, ScalingLaw::sqrt_log),
                  invalid_argument);
}

TEST_CASE("spearman rank correlation") {
  CHECK(spearman_rho({1, 2, 3, 4, 5}, {2, 4, 8, 16, 32}) ==
        doctest::Approx(1.0));
  CHECK(spearman_rho({1, 2, 3, 4, 5}, {9, 7, 5, 3, 1}) == doctest::Approx(-1.0));
  CHECK(spearman_rho({1, 2, 3, 4}, {10, 10, 5, 1}) ==
        doctest::Approx(-3.0 / std::sqrt(10.0)).epsilon(1e-12));
  CHECK(spearman_rho({1, 2, 3, 4}, {7, 7, 7, 7}) == 0.0);
  CHECK_THROWS_AS((void)spearman_rho({1.0}, {2.0}), invalid_argument);
}

}  // TEST_SUITE
