#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "specctrl/errors.hpp"
#include "specctrl/grid.hpp"
#include "specctrl/grid_io.hpp"
#include "specctrl/sparse_operator.hpp"

using namespace specctrl;

TEST_SUITE_BEGIN("grid");

TEST_CASE("interval nodes and weights") {
  Grid g = build_interval(3, 1.0);
  REQUIRE(g.size() == 3);
  CHECK(g.x(0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g.x(1) == doctest::Approx(0.50).epsilon(1e-15));
  CHECK(g.x(2) == doctest::Approx(0.75).epsilon(1e-15));
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(g.weights[i] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g.weight_sum() == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("interval operator has the closed-form spectrum") {
  Grid g = build_interval(3, 1.0);
  SparseOperator op = assemble_laplacian(g);
  CHECK(op.symmetry == Symmetry::hermitian);
  CHECK(op.hermitian_defect() == doctest::Approx(0.0));
  Eigen::MatrixXcd dense(op.mat);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
  REQUIRE(es.info() == Eigen::Success);
  const double s2 = std::sqrt(2.0);
  CHECK(es.eigenvalues()[0] == doctest::Approx(16.0 * (2.0 - s2)).epsilon(1e-13));
  CHECK(es.eigenvalues()[1] == doctest::Approx(32.0).epsilon(1e-13));
  CHECK(es.eigenvalues()[2] == doctest::Approx(16.0 * (2.0 + s2)).epsilon(1e-13));
}

TEST_CASE("rectangle lattice, weights, and lowest eigenvalue") {
  Grid g = build_rectangle(3, 3, 1.0);
  REQUIRE(g.size() == 9);
  CHECK(g.hx == doctest::Approx(0.25));
  CHECK(g.hy == doctest::Approx(0.25));
  CHECK(g.weights[0] == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(g.weight_sum() == doctest::Approx(9 * 0.0625).epsilon(1e-14));
  CHECK(g.node_of.size() == 9);
  CHECK(g.y(4) == doctest::Approx(0.5));

  SparseOperator op = assemble_laplacian(g);
  Eigen::MatrixXcd dense(op.mat);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
  CHECK(es.eigenvalues()[0] ==
        doctest::Approx(32.0 * (2.0 - std::sqrt(2.0))).epsilon(1e-13));
}

TEST_CASE("rectangle with aspect ratio keeps separate spacings") {
  Grid g = build_rectangle(7, 3, 0.5);
  CHECK(g.hx == doctest::Approx(1.0 / 8.0));
  CHECK(g.hy == doctest::Approx(0.5 / 4.0));
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g.x(i) > 0.0);
    CHECK(g.x(i) < 1.0);
    CHECK(g.y(i) > 0.0);
    CHECK(g.y(i) < 0.5);
  }
}

TEST_CASE("stadium guard refuses starved cross sections") {
  CHECK_THROWS_AS(build_stadium(4, 0.5, 1.0), invalid_argument);
}

TEST_CASE("stadium mask: symmetry and area consistency") {
  Grid g = build_stadium(16, 0.5, 1.0);
  REQUIRE(g.size() > 0);
  const int nx = g.nx, ny = g.ny;
  auto at = [&](int i, int j) { return g.node_of[static_cast<size_t>(j) * nx + i]; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      bool a = at(i, j) >= 0;
      bool up_down = at(i, ny - 1 - j) >= 0;
      bool left_right = at(nx - 1 - i, j) >= 0;
      CHECK(a == up_down);
      CHECK(a == left_right);
    }
  const double area = 1.0 + M_PI * 0.25;
  double discrete = g.weight_sum();
  CHECK(discrete < area);                       // strict-inside mask undershoots
  CHECK(discrete > area - (2.0 + M_PI) / 16.0); // by at most a perimeter strip
}

TEST_CASE("stadium refinement tightens the area defect") {
  double a16 = build_stadium(16, 0.5, 1.0).weight_sum();
  double a64 = build_stadium(64, 0.5, 1.0).weight_sum();
  const double area = 1.0 + M_PI * 0.25;
  CHECK(std::abs(a64 - area) < std::abs(a16 - area));
  CHECK(std::abs(a64 - area) < 0.02);
}

TEST_CASE("cosh weights integrate the metric exactly") {
  Grid g = build_cosh_mode(101, 3.0, 7);
  CHECK(g.weight_sum() == doctest::Approx(2.0 * std::sinh(3.0)).epsilon(1e-3));
  CHECK(g.weight_sum() == doctest::Approx(2.0 * std::sinh(3.0)).epsilon(1e-13));
  CHECK(g.mode == 7);
  REQUIRE(g.metric.size() == g.size());
  REQUIRE(g.metric_mid.size() == g.size() + 1);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(g.metric[i] == doctest::Approx(std::cosh(g.x(i))).epsilon(1e-15));
}

TEST_CASE("cosh operator is Hermitian with a positive floor") {
  Grid g = build_cosh_mode(63, 3.0, 4);
  SparseOperator op = assemble_laplacian(g);
  CHECK(op.symmetry == Symmetry::hermitian);
  CHECK(op.hermitian_defect() < 1e-12);
  Eigen::MatrixXcd dense(op.mat);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
  CHECK(es.eigenvalues()[0] > 16.0 / (std::cosh(3.0) * std::cosh(3.0)) * 0.9);
}

TEST_CASE("cubic ramp endpoints and interior") {
  CHECK(cubic_ramp(-1.0) == 0.0);
  CHECK(cubic_ramp(0.0) == 0.0);
  CHECK(cubic_ramp(0.5) == doctest::Approx(0.5));
  CHECK(cubic_ramp(1.0) == 1.0);
  CHECK(cubic_ramp(2.0) == 1.0);
}

TEST_CASE("regions: sharp and ramped indicators") {
  Grid g = build_interval(99, 1.0);
  Region sharp = region_from_predicate(
      g, std::function<bool(double, double)>(
             [](double x, double) { return x > 0.5; }),
      "right-half");
  CHECK(sharp.support_count() > 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double ind = sharp.indicator[i];
    CHECK((ind == 0.0 || ind == 1.0));
    CHECK(ind == (g.x(i) > 0.5 ? 1.0 : 0.0));
  }

  Region ramped = region_from_predicate(
      g, std::function<double(double, double)>(
             [](double x, double) { return x - 0.5; }),
      0.2, "ramped");
  for (std::size_t i = 0; i < g.size(); ++i) {
    double x = g.x(i);
    double expect = cubic_ramp((x - 0.5) / 0.2);
    CHECK(ramped.indicator[i] == doctest::Approx(expect).epsilon(1e-14));
  }

  Region nothing = region_from_predicate(
      g, std::function<bool(double, double)>([](double, double) { return false; }));
  CHECK(nothing.empty());
}

TEST_CASE("grid file round trip preserves every array") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "specctrl-grid-io-test";
  fs::create_directories(dir);

  Grid grids[] = {build_interval(11, 2.0), build_rectangle(5, 7, 0.5),
                  build_stadium(12, 0.5, 1.0), build_cosh_mode(21, 3.0, 3)};
  int idx = 0;
  for (const Grid& g : grids) {
    fs::path file = dir / ("grid" + std::to_string(idx++) + ".grid");
    save_grid(g, file.string());
    Grid back = load_grid(file.string());
    CHECK(back.kind == g.kind);
    CHECK(back.dim == g.dim);
    REQUIRE(back.coords == g.coords);
    REQUIRE(back.weights == g.weights);
    CHECK(back.node_of == g.node_of);
    CHECK(back.metric == g.metric);
    CHECK(back.metric_mid == g.metric_mid);
    CHECK(back.nx == g.nx);
    CHECK(back.ny == g.ny);
    CHECK(back.hx == g.hx);
    CHECK(back.hy == g.hy);
    CHECK(back.length == g.length);
    CHECK(back.height == g.height);
    CHECK(back.radius == g.radius);
    CHECK(back.flat == g.flat);
    CHECK(back.half_length == g.half_length);
    CHECK(back.mode == g.mode);
    CHECK(back.content_hash() == g.content_hash());
  }
  fs::remove_all(dir);
}

TEST_CASE("content hash separates grids and is reproducible") {
  Grid a = build_interval(11, 1.0);
  Grid b = build_interval(12, 1.0);
  Grid c = build_interval(11, 1.0);
  CHECK(a.content_hash() != b.content_hash());
  CHECK(a.content_hash() == c.content_hash());
}

TEST_CASE("builders validate their arguments") {
  CHECK_THROWS_AS(build_interval(0, 1.0), invalid_argument);
  CHECK_THROWS_AS(build_interval(5, -1.0), invalid_argument);
  CHECK_THROWS_AS(build_rectangle(0, 3, 1.0), invalid_argument);
  CHECK_THROWS_AS(build_rectangle(3, 3, 0.0), invalid_argument);
  CHECK_THROWS_AS(build_cosh_mode(5, 3.0, 0), invalid_argument);
  CHECK_THROWS_AS(build_cosh_mode(5, 0.0, 2), invalid_argument);
}

TEST_SUITE_END();
