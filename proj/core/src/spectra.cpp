#include "specctrl/spectra.hpp"

#include <algorithm>
#include <cmath>

#include "specctrl/errors.hpp"

namespace specctrl {

VectorZ EigenBand::function(const Grid& g, int j) const {
  if (j < 0 || j >= count()) throw invalid_argument("EigenBand::function: index");
  if (static_cast<Eigen::Index>(g.size()) != vectors.rows())
    throw invalid_argument("EigenBand::function: grid mismatch");
  VectorZ u = vectors.col(j);
  for (Eigen::Index i = 0; i < u.size(); ++i)
    u[i] /= std::sqrt(g.weights[static_cast<size_t>(i)]);
  return u;
}

double EigenBand::mass(const Region& region, int j) const {
  if (j < 0 || j >= count()) throw invalid_argument("EigenBand::mass: index");
  if (static_cast<Eigen::Index>(region.indicator.size()) != vectors.rows())
    throw invalid_argument("EigenBand::mass: region mismatch");
  double s = 0.0;
  for (Eigen::Index i = 0; i < vectors.rows(); ++i)
    s += region.indicator[static_cast<size_t>(i)] * std::norm(vectors(i, j));
  return s;
}

namespace {

bool matrix_is_real(const SparseMatrixZ& m) {
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrixZ::InnerIterator it(m, k); it; ++it)
      if (it.value().imag() != 0.0) return false;
  return true;
}

// Eigenvectors of a real symmetric matrix span self-conjugate eigenspaces, so
// each cluster admits a real orthonormal basis. Rebuilding the columns that
// way removes the stray phases complex arithmetic leaves behind; downstream
// overlap matrices then come out real symmetric instead of merely Hermitian.
void realify(const SparseOperator& op, EigenBand& band) {
  const int k = band.count();
  if (k == 0 || !matrix_is_real(op.mat)) return;
  const Eigen::Index n = band.vectors.rows();
  Eigen::MatrixXd real_vecs(n, k);
  int a = 0;
  while (a < k) {
    int b = a + 1;
    while (b < k && band.values[b] - band.values[b - 1] <=
                        1e-8 * std::max(1.0, std::abs(band.values[b])))
      ++b;
    const int s = b - a;
    Eigen::MatrixXd stack(n, 2 * s);
    stack.leftCols(s) = band.vectors.middleCols(a, s).real();
    stack.rightCols(s) = band.vectors.middleCols(a, s).imag();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(stack);
    real_vecs.middleCols(a, s) =
        qr.householderQ() * Eigen::MatrixXd::Identity(n, s);
    a = b;
  }
  // One real MGS sweep keeps cross-cluster orthogonality at rounding level.
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < j; ++i)
      real_vecs.col(j) -= real_vecs.col(i).dot(real_vecs.col(j)) * real_vecs.col(i);
    real_vecs.col(j).normalize();
    Eigen::Index imax = 0;
    real_vecs.col(j).cwiseAbs().maxCoeff(&imax);
    if (real_vecs(imax, j) < 0.0) real_vecs.col(j) = -real_vecs.col(j);
  }
  band.vectors = real_vecs.cast<cdouble>();
  for (int j = 0; j < k; ++j)
    band.residuals[j] =
        (op.mat * band.vectors.col(j) - band.values[j] * band.vectors.col(j))
            .norm();
}

EigenBand wrap(BandPairs&& pairs, const SparseOperator& op) {
  EigenBand band;
  band.values = std::move(pairs.values);
  band.vectors = std::move(pairs.vectors);
  band.residuals = std::move(pairs.residuals);
  band.lo = pairs.lo;
  band.hi = pairs.hi;
  band.truncated = pairs.truncated;
  band.grid_hash = op.grid_hash;
  band.provenance = op.provenance;
  realify(op, band);
  return band;
}

}  // namespace

EigenBand compute_band(const SparseOperator& op, double lo, double hi, int max_count,
                       const BandOptions& opt) {
  return wrap(eig_band(op, lo, hi, max_count, opt), op);
}

EigenBand compute_lowest(const SparseOperator& op, int count, const BandOptions& opt) {
  return wrap(eig_lowest(op, count, opt), op);
}

std::vector<RectangleMode> rectangle_spectrum_window(int nx, int ny, double a, double lo,
                                                     double hi) {
  if (nx < 1 || ny < 1) throw invalid_argument("rectangle_spectrum: empty lattice");
  if (!(a > 0.0)) throw invalid_argument("rectangle_spectrum: height must be positive");
  if (!(lo <= hi)) throw invalid_argument("rectangle_spectrum: window is empty");
  const double hx = 1.0 / (nx + 1);
  const double hy = a / (ny + 1);
  std::vector<RectangleMode> out;
  for (int m = 1; m <= nx; ++m) {
    double sx = std::sin(0.5 * m * M_PI * hx);
    double lx = 4.0 / (hx * hx) * sx * sx;
    if (lx > hi) break;
    for (int k = 1; k <= ny; ++k) {
      double sy = std::sin(0.5 * k * M_PI * hy / a);
      double lam = lx + 4.0 / (hy * hy) * sy * sy;
      if (lam > hi) break;
      if (lam >= lo) out.push_back({lam, m, k});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const RectangleMode& p, const RectangleMode& q) {
              if (p.value != q.value) return p.value < q.value;
              if (p.m != q.m) return p.m < q.m;
              return p.k < q.k;
            });
  return out;
}

std::vector<RectangleMode> rectangle_spectrum_lowest(int nx, int ny, double a, int count) {
  if (count < 1) throw invalid_argument("rectangle_spectrum: count must be positive");
  if (count > nx * ny) throw invalid_argument("rectangle_spectrum: count exceeds lattice");
  const double hx = 1.0 / (nx + 1);
  const double hy = a / (ny + 1);
  double hi = std::max(count * 4.0 * M_PI / std::max(a, 1e-12),
                       4.0 * (M_PI * M_PI) * (1.0 + 1.0 / (a * a)));
  for (;;) {
    auto modes = rectangle_spectrum_window(nx, ny, a, 0.0, hi);
    if (static_cast<int>(modes.size()) >= count) {
      modes.resize(static_cast<size_t>(count));
      return modes;
    }
    double cap = 4.0 / (hx * hx) + 4.0 / (hy * hy);
    if (hi >= cap) {
      modes.resize(std::min(modes.size(), static_cast<size_t>(count)));
      return modes;
    }
    hi = std::min(hi * 2.0, cap);
  }
}

VectorZ project_onto_band(const EigenBand& band, const VectorZ& x) {
  if (x.size() != band.vectors.rows())
    throw invalid_argument("project_onto_band: dimension mismatch");
  return band.vectors.adjoint() * x;
}

VectorZ band_reconstruct(const EigenBand& band, const VectorZ& coeffs) {
  if (coeffs.size() != band.count())
    throw invalid_argument("band_reconstruct: coefficient count");
  return band.vectors * coeffs;
}

std::vector<int> parity_tags(const Grid& g, const EigenBand& band) {
  if (g.dim != 1) throw invalid_argument("parity_tags: 1D grids only");
  const int n = static_cast<int>(g.size());
  if (band.vectors.rows() != n) throw invalid_argument("parity_tags: grid mismatch");
  std::vector<int> tags(static_cast<size_t>(band.count()), 0);
  for (int j = 0; j < band.count(); ++j) {
    double even = 0.0, odd = 0.0;
    for (int i = 0; i < n; ++i) {
      cdouble a = band.vectors(i, j), b = band.vectors(n - 1 - i, j);
      even += std::norm(a - b);
      odd += std::norm(a + b);
    }
    if (even < 1e-8 * std::max(odd, 1e-300))
      tags[static_cast<size_t>(j)] = 1;
    else if (odd < 1e-8 * std::max(even, 1e-300))
      tags[static_cast<size_t>(j)] = -1;
  }
  return tags;
}

}  // namespace specctrl
