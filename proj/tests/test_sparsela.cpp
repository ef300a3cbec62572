#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "specctrl/cg.hpp"
#include "specctrl/errors.hpp"
#include "specctrl/factorization.hpp"
#include "specctrl/grid.hpp"
#include "specctrl/lanczos.hpp"
#include "specctrl/singular.hpp"
#include "specctrl/sparse_operator.hpp"
#include "specctrl/spectra.hpp"
#include "specctrl/util.hpp"

using namespace specctrl;

namespace {

SparseOperator diag_operator(const std::vector<cdouble>& d) {
  SparseOperator op;
  op.mat.resize(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
  for (size_t i = 0; i < d.size(); ++i)
    op.mat.insert(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = d[i];
  op.mat.makeCompressed();
  op.symmetry = Symmetry::general;
  op.provenance = "diag";
  return op;
}

SparseOperator random_sparse(int n, Rng& rng) {
  SparseOperator op;
  op.mat.resize(n, n);
  std::vector<Eigen::Triplet<cdouble>> trips;
  for (int i = 0; i < n; ++i) {
    trips.emplace_back(i, i, rng.cnormal() + cdouble(3.0, 0.0));
    for (int k = 0; k < 3; ++k) {
      int j = static_cast<int>(rng.uniform() * n);
      if (j >= 0 && j < n) trips.emplace_back(i, j, rng.cnormal());
    }
  }
  op.mat.setFromTriplets(trips.begin(), trips.end());
  op.mat.makeCompressed();
  op.provenance = "random";
  return op;
}

}  // namespace

TEST_SUITE_BEGIN("sparsela");

TEST_CASE("factorization solves both directions") {
  Grid g = build_interval(41, 1.0);
  SparseOperator op = assemble_laplacian(g);
  Factorization f(op, cdouble(1.0, 2.0));
  Rng rng(7);
  VectorZ b(op.n());
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rng.cnormal();

  VectorZ x = f.solve(b);
  SparseMatrixZ shifted = op.shifted(cdouble(1.0, 2.0)).mat;
  CHECK((shifted * x - b).norm() <= 1e-10 * b.norm());

  VectorZ y = f.solve_adjoint(b);
  CHECK((shifted.adjoint() * y - b).norm() <= 1e-10 * b.norm());
}

TEST_CASE("factorization refuses a shift parked on an eigenvalue") {
  Grid g = build_interval(3, 1.0);
  SparseOperator op = assemble_laplacian(g);
  CHECK_THROWS_AS(Factorization(op, 32.0), singular_shift_error);
}

TEST_CASE("cg solves an SPD system to tight tolerance") {
  Grid g = build_interval(63, 1.0);
  SparseOperator op = assemble_laplacian(g);
  Rng rng(11);
  VectorZ b(op.n());
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rng.cnormal();
  auto apply = [&op](const VectorZ& v) { return op.apply(v); };
  CgResult r = cg_hermitian_solve(apply, b, 1e-12);
  CHECK((op.apply(r.x) - b).norm() <= 1e-10 * b.norm());
  CHECK(r.relative_residual <= 1e-12);
  CHECK(r.iterations > 0);
}

TEST_CASE("cg reports indefiniteness instead of looping") {
  VectorZ b(2);
  b << 1.0, 1.0;
  auto apply = [](const VectorZ& v) {
    VectorZ out(2);
    out[0] = v[0];
    out[1] = -v[1];
    return out;
  };
  CHECK_THROWS_AS(cg_hermitian_solve(apply, b, 1e-12), indefinite_operator_error);
}

TEST_CASE("smallest singular value: diagonal examples") {
  SparseOperator d123 = diag_operator({1.0, 2.0, 3.0});
  SingularEstimate est = smallest_singular(d123);
  CHECK(est.value == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(std::abs(est.right_vector[0]) == doctest::Approx(1.0).epsilon(1e-6));

  SparseOperator shifted = d123.shifted(cdouble(0.0, 0.5));
  SingularEstimate est2 = smallest_singular(shifted);
  CHECK(est2.value == doctest::Approx(std::sqrt(1.25)).epsilon(1e-7));
}

TEST_CASE("smallest singular value agrees with dense SVD on random matrices") {
  Rng rng(20260819);
  for (int trial = 0; trial < 12; ++trial) {
    int n = 8 + static_cast<int>(rng.uniform() * 40);
    SparseOperator op = random_sparse(n, rng);
    Eigen::MatrixXcd dense(op.mat);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(dense);
    double truth = svd.singularValues()(n - 1);
    if (truth < 1e-8) continue;
    SingularEstimate est = smallest_singular(op, 1e-10, 2000);
    CHECK(est.value == doctest::Approx(truth).epsilon(1e-8));
  }
}

TEST_CASE("smallest singular value surfaces an iteration cap") {
  SparseOperator d = diag_operator({1.0, 1.0000001, 2.0});
  try {
    smallest_singular(d, 1e-16, 1);
    FAIL("expected convergence_error");
  } catch (const convergence_error& e) {
    CHECK(e.best_estimate > 0.5);
    CHECK(e.best_estimate < 2.5);
    CHECK(e.iterations >= 1);
  }
}

TEST_CASE("eig_band recovers the full interval spectrum in one window") {
  Grid g = build_interval(3, 1.0);
  SparseOperator op = assemble_laplacian(g);
  BandPairs band = eig_band(op, 0.0, 60.0, 10);
  REQUIRE(band.count() == 3);
  const double s2 = std::sqrt(2.0);
  CHECK(band.values[0] == doctest::Approx(16.0 * (2.0 - s2)).epsilon(1e-12));
  CHECK(band.values[1] == doctest::Approx(32.0).epsilon(1e-12));
  CHECK(band.values[2] == doctest::Approx(16.0 * (2.0 + s2)).epsilon(1e-12));
  CHECK_FALSE(band.truncated);
  MatrixZ gram = band.vectors.adjoint() * band.vectors;
  CHECK((gram - MatrixZ::Identity(3, 3)).norm() <= 1e-10);
}

TEST_CASE("eig_band respects a window that cuts the spectrum") {
  Grid g = build_interval(3, 1.0);
  SparseOperator op = assemble_laplacian(g);
  BandPairs band = eig_band(op, 0.0, 40.0, 10);
  REQUIRE(band.count() == 2);
  CHECK(band.values[1] == doctest::Approx(32.0).epsilon(1e-12));
}

TEST_CASE("eig_band on the square finds every pair, degeneracies included") {
  Grid g = build_rectangle(16, 16, 1.0);
  SparseOperator op = assemble_laplacian(g);
  BandPairs band = eig_band(op, 0.0, 200.0, 64);
  auto analytic = rectangle_spectrum_window(16, 16, 1.0, 0.0, 200.0);
  REQUIRE(band.count() == static_cast<int>(analytic.size()));
  for (int j = 0; j < band.count(); ++j) {
    CHECK(band.values[j] ==
          doctest::Approx(analytic[static_cast<size_t>(j)].value).epsilon(1e-10));
    double res = (op.apply(band.vectors.col(j)) - band.values[j] * band.vectors.col(j)).norm();
    CHECK(res <= 1e-8 * std::max(std::abs(band.values[j]), 1.0));
  }
  MatrixZ gram = band.vectors.adjoint() * band.vectors;
  CHECK((gram - MatrixZ::Identity(band.count(), band.count())).norm() <= 1e-9);

  bool found_degenerate = false;
  for (int j = 0; j + 1 < band.count(); ++j)
    if (std::abs(band.values[j + 1] - band.values[j]) <
        1e-10 * std::max(1.0, band.values[j]))
      found_degenerate = true;
  CHECK(found_degenerate);
}

TEST_CASE("eig_band truncation keeps the lowest pairs and raises the flag") {
  Grid g = build_rectangle(16, 16, 1.0);
  SparseOperator op = assemble_laplacian(g);
  BandPairs full = eig_band(op, 0.0, 200.0, 64);
  REQUIRE(full.count() > 4);
  BandPairs cut = eig_band(op, 0.0, 200.0, 4);
  CHECK(cut.truncated);
  REQUIRE(cut.count() == 4);
  for (int j = 0; j < 4; ++j)
    CHECK(cut.values[j] == doctest::Approx(full.values[j]).epsilon(1e-9));
}

TEST_CASE("eig_lowest matches the analytic bottom of the square") {
  Grid g = build_rectangle(24, 24, 1.0);
  SparseOperator op = assemble_laplacian(g);
  BandPairs low = eig_lowest(op, 10);
  auto analytic = rectangle_spectrum_lowest(24, 24, 1.0, 10);
  REQUIRE(low.count() == 10);
  for (int j = 0; j < 10; ++j)
    CHECK(low.values[j] ==
          doctest::Approx(analytic[static_cast<size_t>(j)].value).epsilon(1e-10));
}

TEST_CASE("eig_band window edges: pinched empty window rejected") {
  Grid g = build_interval(5, 1.0);
  SparseOperator op = assemble_laplacian(g);
  CHECK_THROWS_AS(eig_band(op, 2.0, 2.0, 4), invalid_argument);
  CHECK_THROWS_AS(eig_band(op, 0.0, 10.0, 0), invalid_argument);
}

TEST_CASE("eig_band refuses non-Hermitian input") {
  SparseOperator op = diag_operator({cdouble(1.0, 0.5), cdouble(2.0, 0.0)});
  op.symmetry = Symmetry::general;
  CHECK_THROWS_AS(eig_band(op, 0.0, 10.0, 4), invalid_argument);
}

TEST_SUITE_END();
