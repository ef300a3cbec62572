#include "specctrl/sparse_operator.hpp"

#include <cmath>
#include <vector>

#include "specctrl/errors.hpp"

namespace specctrl {

SparseOperator SparseOperator::shifted(cdouble shift) const {
  SparseOperator out = *this;
  SparseMatrixZ id(n(), n());
  id.setIdentity();
  out.mat = mat - shift * id;
  if (symmetry == Symmetry::hermitian && shift.imag() != 0.0)
    out.symmetry = Symmetry::complex_symmetric;
  out.mat.makeCompressed();
  return out;
}

SparseOperator SparseOperator::damped(const std::vector<double>& d,
                                      double scale) const {
  if (static_cast<Eigen::Index>(d.size()) != n())
    throw invalid_argument("damped: diagonal size mismatch");
  SparseOperator out = *this;
  SparseMatrixZ diag(n(), n());
  std::vector<Eigen::Triplet<cdouble>> trips;
  trips.reserve(d.size());
  for (Eigen::Index i = 0; i < n(); ++i)
    if (d[i] != 0.0)
      trips.emplace_back(i, i, cdouble(0.0, -scale * d[i]));
  diag.setFromTriplets(trips.begin(), trips.end());
  out.mat = mat + diag;
  out.mat.makeCompressed();
  if (symmetry == Symmetry::hermitian && scale != 0.0)
    out.symmetry = Symmetry::complex_symmetric;
  return out;
}

double SparseOperator::hermitian_defect() const {
  SparseMatrixZ diff = SparseMatrixZ(mat - SparseMatrixZ(mat.adjoint()));
  double m = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrixZ::InnerIterator it(diff, k); it; ++it)
      m = std::max(m, std::abs(it.value()));
  return m;
}

namespace {

SparseOperator finish(SparseMatrixZ m, const Grid& g, const char* tag) {
  SparseOperator op;
  m.makeCompressed();
  op.mat = std::move(m);
  op.symmetry = Symmetry::hermitian;
  op.provenance = std::string(tag) + ":" + g.describe();
  op.grid_hash = g.content_hash();
  return op;
}

SparseOperator assemble_interval(const Grid& g) {
  const Eigen::Index n = g.size();
  const double c = 1.0 / (g.hx * g.hx);
  std::vector<Eigen::Triplet<cdouble>> t;
  t.reserve(3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t.emplace_back(i, i, 2.0 * c);
    if (i + 1 < n) {
      t.emplace_back(i, i + 1, -c);
      t.emplace_back(i + 1, i, -c);
    }
  }
  SparseMatrixZ m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return finish(std::move(m), g, "laplacian");
}

SparseOperator assemble_lattice2d(const Grid& g) {
  const Eigen::Index n = g.size();
  const double cx = 1.0 / (g.hx * g.hx);
  const double cy = 1.0 / (g.hy * g.hy);
  std::vector<Eigen::Triplet<cdouble>> t;
  t.reserve(5 * n);
  auto node_at = [&](int i, int j) -> std::int32_t {
    if (i < 0 || j < 0 || i >= g.nx || j >= g.ny) return -1;
    return g.node_of[static_cast<std::size_t>(j) * g.nx + i];
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::int32_t c = node_at(i, j);
      if (c < 0) continue;
      t.emplace_back(c, c, 2.0 * cx + 2.0 * cy);
      const std::int32_t xm = node_at(i - 1, j), xp = node_at(i + 1, j);
      const std::int32_t ym = node_at(i, j - 1), yp = node_at(i, j + 1);
      if (xm >= 0) t.emplace_back(c, xm, -cx);
      if (xp >= 0) t.emplace_back(c, xp, -cx);
      if (ym >= 0) t.emplace_back(c, ym, -cy);
      if (yp >= 0) t.emplace_back(c, yp, -cy);
    }
  SparseMatrixZ m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return finish(std::move(m), g, "laplacian");
}

SparseOperator assemble_cosh_mode(const Grid& g) {
  const Eigen::Index n = g.size();
  const double d2 = g.hx * g.hx;
  const double m2 = static_cast<double>(g.mode) * g.mode;
  std::vector<Eigen::Triplet<cdouble>> t;
  t.reserve(3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double wl = g.metric_mid[i];
    const double wr = g.metric_mid[i + 1];
    const double wi = g.metric[i];
    t.emplace_back(i, i, (wl + wr) / (d2 * wi) + m2 / (wi * wi));
    if (i + 1 < n) {
      const double off = -wr / (d2 * std::sqrt(wi * g.metric[i + 1]));
      t.emplace_back(i, i + 1, off);
      t.emplace_back(i + 1, i, off);
    }
  }
  SparseMatrixZ m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return finish(std::move(m), g, "sturm_liouville");
}

}  // namespace

SparseOperator assemble_laplacian(const Grid& g) {
  switch (g.kind) {
    case GridKind::interval: return assemble_interval(g);
    case GridKind::rectangle:
    case GridKind::stadium: return assemble_lattice2d(g);
    case GridKind::cosh_mode: return assemble_cosh_mode(g);
  }
  throw invalid_argument("assemble_laplacian: unknown grid kind");
}

}  // namespace specctrl
