#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "specctrl/band_cache.hpp"
#include "specctrl/errors.hpp"
#include "specctrl/grid.hpp"
#include "specctrl/lanczos.hpp"
#include "specctrl/sparse_operator.hpp"
#include "specctrl/spectra.hpp"
#include "specctrl/util.hpp"

using namespace specctrl;

TEST_SUITE_BEGIN("spectra");

TEST_CASE("rectangle spectrum: smallest entries by hand") {
  auto modes = rectangle_spectrum_window(3, 3, 1.0, 0.0, 1000.0);
  REQUIRE(modes.size() == 9);
  const double s2 = std::sqrt(2.0);
  CHECK(modes[0].value == doctest::Approx(32.0 * (2.0 - s2)).epsilon(1e-14));
  CHECK(modes[0].m == 1);
  CHECK(modes[0].k == 1);
  CHECK(modes[1].value == doctest::Approx(16.0 * (2.0 - s2) + 32.0).epsilon(1e-14));
  CHECK(modes.back().value == doctest::Approx(32.0 * (2.0 + s2)).epsilon(1e-14));
}

TEST_CASE("rectangle spectrum: symmetric pairs are exactly degenerate") {
  auto modes = rectangle_spectrum_window(16, 16, 1.0, 0.0, 200.0);
  bool pair = false;
  for (const auto& p : modes)
    for (const auto& q : modes)
      if (p.m == q.k && p.k == q.m && p.m != p.k) {
        CHECK(p.value == q.value);
        pair = true;
      }
  CHECK(pair);
}

TEST_CASE("rectangle spectrum: second-order convergence to the continuum") {
  double cont = M_PI * M_PI * 2.0;
  double e1 = std::abs(rectangle_spectrum_lowest(31, 31, 1.0, 1)[0].value - cont);
  double e2 = std::abs(rectangle_spectrum_lowest(63, 63, 1.0, 1)[0].value - cont);
  double order = std::log2(e1 / e2);
  CHECK(order > 1.9);
  CHECK(order < 2.1);
}

TEST_CASE("rectangle spectrum lowest: deterministic ordering and count") {
  auto modes = rectangle_spectrum_lowest(16, 16, 0.5, 25);
  REQUIRE(modes.size() == 25);
  for (size_t i = 1; i < modes.size(); ++i)
    CHECK(modes[i].value >= modes[i - 1].value);
  CHECK_THROWS_AS(rectangle_spectrum_lowest(3, 3, 1.0, 10), invalid_argument);
}

TEST_CASE("computed band carries grid functions with unit weighted mass") {
  Grid g = build_cosh_mode(101, 3.0, 2);
  SparseOperator op = assemble_laplacian(g);
  EigenBand band = compute_lowest(op, 4);
  REQUIRE(band.count() == 4);
  CHECK(band.grid_hash == g.content_hash());
  CHECK(band.provenance == op.provenance);
  for (int j = 0; j < band.count(); ++j) {
    VectorZ u = band.function(g, j);
    double mass = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i)
      mass += g.weights[static_cast<size_t>(i)] * std::norm(u[i]);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("mass against regions: full is one, empty is zero, halves split") {
  Grid g = build_interval(100, 1.0);  // even count: no node sits on the split
  SparseOperator op = assemble_laplacian(g);
  EigenBand band = compute_lowest(op, 3);
  Region full = region_from_predicate(
      g, std::function<bool(double, double)>([](double, double) { return true; }));
  Region none = region_from_predicate(
      g, std::function<bool(double, double)>([](double, double) { return false; }));
  Region left = region_from_predicate(
      g, std::function<bool(double, double)>([](double x, double) { return x < 0.5; }));
  Region right = region_from_predicate(
      g, std::function<bool(double, double)>([](double x, double) { return x >= 0.5; }));
  for (int j = 0; j < band.count(); ++j) {
    CHECK(band.mass(full, j) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(band.mass(none, j) == 0.0);
    CHECK(band.mass(left, j) + band.mass(right, j) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  // the ground state splits evenly across the midline
  CHECK(band.mass(left, 0) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("projection onto a band satisfies Pythagoras") {
  Grid g = build_interval(63, 1.0);
  SparseOperator op = assemble_laplacian(g);
  EigenBand band = compute_lowest(op, 5);
  Rng rng(3);
  VectorZ x(op.n());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.cnormal();
  VectorZ c = project_onto_band(band, x);
  VectorZ inside = band_reconstruct(band, c);
  VectorZ outside = x - inside;
  CHECK(std::abs(x.squaredNorm() - inside.squaredNorm() - outside.squaredNorm()) <=
        1e-10 * x.squaredNorm());
  CHECK(std::abs(project_onto_band(band, outside).norm()) <= 1e-10 * x.norm());
}

TEST_CASE("parity tags alternate at the bottom of a symmetric operator") {
  Grid g = build_cosh_mode(201, 3.0, 1);
  SparseOperator op = assemble_laplacian(g);
  EigenBand band = compute_lowest(op, 4);
  auto tags = parity_tags(g, band);
  REQUIRE(tags.size() == 4);
  CHECK(tags[0] == 1);
  CHECK(tags[1] == -1);
  CHECK(tags[2] == 1);
  CHECK(tags[3] == -1);
}

TEST_CASE("band cache: store, load, and read-through behavior") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "specctrl-band-cache-test";
  fs::remove_all(dir);

  Grid g = build_interval(41, 1.0);
  SparseOperator op = assemble_laplacian(g);
  EigenBand fresh = compute_band_cached(op, 0.0, 2000.0, 16, {}, true, dir.string());
  REQUIRE(fresh.count() > 0);
  CHECK_FALSE(fresh.truncated);

  std::uint64_t key =
      band_cache_key(op.grid_hash, op.provenance, 0.0, 2000.0, 16, BandOptions{}.tol);
  auto hit = load_cached_band(key, dir.string());
  REQUIRE(hit.has_value());
  CHECK(hit->count() == fresh.count());
  CHECK((hit->values - fresh.values).norm() == 0.0);
  CHECK((hit->vectors - fresh.vectors).norm() == 0.0);
  CHECK(hit->grid_hash == fresh.grid_hash);

  EigenBand warm = compute_band_cached(op, 0.0, 2000.0, 16, {}, true, dir.string());
  CHECK((warm.values - fresh.values).norm() == 0.0);
  CHECK((warm.vectors - fresh.vectors).norm() == 0.0);

  CHECK_FALSE(load_cached_band(key ^ 0x1234, dir.string()).has_value());

  EigenBand cold = compute_band_cached(op, 0.0, 2000.0, 16, {}, false, dir.string());
  CHECK((cold.values - fresh.values).norm() == 0.0);

  fs::remove_all(dir);
}

TEST_CASE("cache keys separate every parameter") {
  std::uint64_t base = band_cache_key(1, "p", 0.0, 1.0, 10, 1e-9);
  CHECK(band_cache_key(2, "p", 0.0, 1.0, 10, 1e-9) != base);
  CHECK(band_cache_key(1, "q", 0.0, 1.0, 10, 1e-9) != base);
  CHECK(band_cache_key(1, "p", 0.1, 1.0, 10, 1e-9) != base);
  CHECK(band_cache_key(1, "p", 0.0, 2.0, 10, 1e-9) != base);
  CHECK(band_cache_key(1, "p", 0.0, 1.0, 11, 1e-9) != base);
  CHECK(band_cache_key(1, "p", 0.0, 1.0, 10, 1e-8) != base);
}

TEST_SUITE_END();
