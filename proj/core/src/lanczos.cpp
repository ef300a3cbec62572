#include "specctrl/lanczos.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "specctrl/errors.hpp"
#include "specctrl/factorization.hpp"
#include "specctrl/util.hpp"

namespace specctrl {

namespace {

struct Pair {
  double value;
  VectorZ vec;
  double residual;
};

struct SliceResult {
  std::vector<Pair> pairs;  // direct-residual-converged near the shift
  double radius;            // certified coverage radius around the shift
  bool exhausted;           // Krylov space spanned everything reachable
};

double spectral_scale(const SparseOperator& op) {
  double s = 0.0;
  for (int r = 0; r < op.mat.outerSize(); ++r) {
    double row = 0.0;
    for (SparseMatrixZ::InnerIterator it(op.mat, r); it; ++it) row += std::abs(it.value());
    s = std::max(s, row);
  }
  return std::max(s, 1e-300);
}

double gershgorin_floor(const SparseOperator& op) {
  double lo = std::numeric_limits<double>::max();
  for (int r = 0; r < op.mat.outerSize(); ++r) {
    double off = 0.0, diag = 0.0;
    for (SparseMatrixZ::InnerIterator it(op.mat, r); it; ++it) {
      if (it.col() == r)
        diag = it.value().real();
      else
        off += std::abs(it.value());
    }
    lo = std::min(lo, diag - off);
  }
  return lo;
}

VectorZ random_start(int n, Rng& rng) {
  VectorZ v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.cnormal();
  return v;
}

// w -= basis * (basis^H w), twice over for numerical orthogonality.
void orthogonalize(VectorZ& w, const MatrixZ& basis, int cols) {
  if (cols == 0) return;
  auto b = basis.leftCols(cols);
  for (int rep = 0; rep < 2; ++rep) w.noalias() -= b * (b.adjoint() * w).eval();
}

// Lanczos with full reorthogonalization on (A - sigma)^{-1}, deflating an
// orthonormal set of already-known eigenvectors. Eigenpairs are accepted only
// on a direct residual of A; the certified radius is the largest r such that
// every Ritz value within distance r of sigma passed that check.
SliceResult run_slice(const SparseOperator& op, const Factorization& fact, double sigma,
                      const MatrixZ& deflate, double want_radius, const BandOptions& opt,
                      Rng& rng) {
  const int n = op.n();
  const int n_deflate = static_cast<int>(deflate.cols());
  int m_max = opt.max_krylov > 0 ? opt.max_krylov
                                 : std::max(160, 6 * opt.slice_target + 40);
  m_max = std::min(m_max, n);

  MatrixZ V(n, m_max);
  std::vector<double> alpha, beta;
  alpha.reserve(static_cast<size_t>(m_max));
  beta.reserve(static_cast<size_t>(m_max));

  VectorZ v = random_start(n, rng);
  const double nv0 = v.norm();
  orthogonalize(v, deflate, n_deflate);
  double nv = v.norm();
  if (nv < 1e-12 * nv0) return {{}, std::numeric_limits<double>::infinity(), true};
  V.col(0) = v / nv;

  int j = 0;
  bool breakdown = false;
  double tail_beta = 0.0;
  while (true) {
    VectorZ w = fact.solve(V.col(j));
    cdouble aj = V.col(j).dot(w);
    orthogonalize(w, deflate, n_deflate);
    orthogonalize(w, V, j + 1);
    alpha.push_back(aj.real());
    double bj = w.norm();
    ++j;
    if (bj < 1e-13 * std::max(1.0, std::abs(alpha[0])) || j >= m_max) {
      breakdown = bj < 1e-13 * std::max(1.0, std::abs(alpha[0]));
      tail_beta = breakdown ? 0.0 : bj;
    } else {
      beta.push_back(bj);
      V.col(j) = w / bj;
      tail_beta = bj;
      if (j % opt.chunk != 0) continue;
    }

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(j, j);
    for (int i = 0; i < j; ++i) {
      T(i, i) = alpha[static_cast<size_t>(i)];
      if (i + 1 < j) T(i, i + 1) = T(i + 1, i) = beta[static_cast<size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const auto& theta = es.eigenvalues();
    const auto& Y = es.eigenvectors();

    struct Ritz {
      double lam, dist, bound;
      int idx;
    };
    std::vector<Ritz> near;
    const double theta_floor =
        breakdown ? 1e-300 : 1.0 / (64.0 * std::max(want_radius, 1e-300));
    for (int i = 0; i < j; ++i) {
      if (std::abs(theta[i]) < theta_floor) continue;  // far spectrum
      double lam = sigma + 1.0 / theta[i];
      double bnd = tail_beta * std::abs(Y(j - 1, i)) / (theta[i] * theta[i]);
      near.push_back({lam, std::abs(lam - sigma), bnd, i});
    }
    std::sort(near.begin(), near.end(),
              [](const Ritz& a, const Ritz& b) { return a.dist < b.dist; });

    std::vector<Pair> pairs;
    double radius = std::numeric_limits<double>::infinity();
    for (const auto& rz : near) {
      if (!breakdown && rz.dist > 4.0 * want_radius &&
          pairs.size() >= static_cast<size_t>(opt.slice_target))
        break;
      if (rz.bound > 1e-3 * std::max(std::abs(rz.lam), 1.0)) {
        radius = rz.dist;
        break;
      }
      VectorZ x = V.leftCols(j) * Y.col(rz.idx);
      double nx = x.norm();
      if (nx < 0.1) {
        radius = rz.dist;
        break;
      }
      x /= nx;
      VectorZ Ax = op.apply(x);
      double lam = x.dot(Ax).real();
      double res = (Ax - lam * x).norm();
      if (res <= opt.tol * std::max(std::abs(lam), 1.0)) {
        pairs.push_back({lam, std::move(x), res});
      } else {
        radius = rz.dist;
        break;
      }
    }

    bool covered = !std::isfinite(radius) || radius >= want_radius;
    bool informative = !pairs.empty() || n_deflate > 0;
    if ((covered && informative && j >= std::min(m_max, 24)) || breakdown || j >= m_max) {
      SliceResult out;
      out.pairs = std::move(pairs);
      out.exhausted = breakdown && !std::isfinite(radius);
      out.radius = std::isfinite(radius)
                       ? radius
                       : (out.exhausted ? std::numeric_limits<double>::infinity()
                                        : 4.0 * want_radius);
      return out;
    }
  }
}

bool same_pair(const Pair& a, const Pair& b) {
  if (std::abs(a.value - b.value) >
      1e-7 * std::max({std::abs(a.value), std::abs(b.value), 1.0}))
    return false;
  return std::abs(a.vec.dot(b.vec)) > 0.5;
}

void phase_fix(VectorZ& v) {
  for (long i = 0; i < v.size(); ++i) {
    double m = std::abs(v[i]);
    if (m > 1e-8) {
      v *= std::conj(v[i]) / m;
      return;
    }
  }
}

}  // namespace

BandPairs eig_band(const SparseOperator& op, double alpha, double beta, int max_count,
                   const BandOptions& opt) {
  if (!(alpha < beta)) throw invalid_argument("eig_band: window is empty");
  if (max_count < 1) throw invalid_argument("eig_band: max_count must be positive");
  if (op.symmetry != Symmetry::hermitian)
    throw invalid_argument("eig_band: operator must be Hermitian");
  const int n = op.n();
  if (n < 1) throw invalid_argument("eig_band: empty operator");

  const double scale = spectral_scale(op);
  const bool unbounded = !std::isfinite(beta);
  const double edge_ref = std::max({std::abs(alpha), unbounded ? 0.0 : std::abs(beta), 1.0});
  const double edge_eps = 1e-8 * edge_ref;
  const double margin = 1e-6 * edge_ref;

  const double lo_collect = alpha - edge_eps;
  const double hi_collect = unbounded ? beta : beta + edge_eps;

  std::vector<Pair> accepted;
  std::vector<Pair> shadow;  // converged but outside the window; deflation only
  Rng rng(opt.seed);

  double frontier = std::max(lo_collect, gershgorin_floor(op) - 1e-9 * scale - 1e-12);
  double span = unbounded ? std::max(scale - frontier, 1e-12) : beta - alpha;
  double radius_target = unbounded ? std::max(1e-4 * scale, 1e-12) : span / 8.0;
  bool truncated = false;
  int stall = 0;

  while (true) {
    if (!unbounded && frontier > hi_collect) break;
    if (static_cast<int>(accepted.size()) > max_count) {
      truncated = true;
      break;
    }
    if (unbounded && static_cast<int>(accepted.size()) >= max_count) {
      std::vector<double> vals;
      vals.reserve(accepted.size());
      for (auto& p : accepted) vals.push_back(p.value);
      std::nth_element(vals.begin(), vals.begin() + (max_count - 1), vals.end());
      if (frontier > vals[static_cast<size_t>(max_count - 1)]) break;
    }

    double sigma = frontier + radius_target;
    if (!unbounded) sigma = std::min(sigma, hi_collect);
    const double want = std::max(sigma - frontier, 0.5 * radius_target);

    MatrixZ deflate;
    {
      std::vector<const Pair*> close;
      for (const auto& p : accepted)
        if (std::abs(p.value - sigma) <= 8.0 * want) close.push_back(&p);
      for (const auto& p : shadow)
        if (std::abs(p.value - sigma) <= 8.0 * want) close.push_back(&p);
      deflate.resize(n, static_cast<long>(close.size()));
      for (size_t i = 0; i < close.size(); ++i)
        deflate.col(static_cast<long>(i)) = close[i]->vec;
    }

    Factorization fact = [&] {
      double s = sigma;
      for (int attempt = 0;; ++attempt) {
        try {
          return Factorization(op, s);
        } catch (const singular_shift_error&) {
          if (attempt >= 5) throw;
          s += (attempt + 1) * 1e-6 * std::max(1.0, std::abs(sigma));
        }
      }
    }();
    const double shift = fact.shift().real();

    std::vector<Pair> found;
    double radius = 0.0;
    bool exhausted = false;
    for (int pass = 0;; ++pass) {
      MatrixZ defl_all(n, deflate.cols() + static_cast<long>(found.size()));
      defl_all.leftCols(deflate.cols()) = deflate;
      for (size_t i = 0; i < found.size(); ++i)
        defl_all.col(deflate.cols() + static_cast<long>(i)) = found[i].vec;

      SliceResult sr = run_slice(op, fact, shift, defl_all, want, opt, rng);
      radius = std::max(radius, std::min(sr.radius, std::numeric_limits<double>::max()));
      exhausted = exhausted || sr.exhausted;
      int fresh = 0;
      for (auto& p : sr.pairs) {
        if (std::abs(p.value - shift) > sr.radius) continue;
        bool dup = false;
        for (const auto& q : found)
          if (same_pair(p, q)) {
            dup = true;
            break;
          }
        if (!dup)
          for (const auto& q : accepted)
            if (same_pair(p, q)) {
              dup = true;
              break;
            }
        if (!dup)
          for (const auto& q : shadow)
            if (same_pair(p, q)) {
              dup = true;
              break;
            }
        if (!dup) {
          found.push_back(std::move(p));
          ++fresh;
        }
      }
      if (fresh == 0 && (pass >= 1 || exhausted)) break;
      if (pass >= std::max(1, opt.verify_passes) + static_cast<int>(found.size())) break;
    }

    if (!exhausted && radius < want && shift - radius > frontier + 1e-12 * scale) {
      ++stall;
      radius_target *= 0.5;
      if (stall > 24) {
        convergence_error err("eig_band: window coverage stalled");
        err.iterations = stall;
        throw err;
      }
      continue;
    }
    stall = 0;

    for (auto& p : found) {
      if (p.value >= lo_collect && p.value <= hi_collect)
        accepted.push_back(std::move(p));
      else
        shadow.push_back(std::move(p));
    }

    if (exhausted) break;
    frontier = shift + radius;

    if (!found.empty()) {
      double lo_f = found.front().value, hi_f = lo_f;
      for (auto& p : found) {
        lo_f = std::min(lo_f, p.value);
        hi_f = std::max(hi_f, p.value);
      }
      double spacing = std::max(hi_f - lo_f, 1e-12 * scale) /
                       static_cast<double>(std::max<size_t>(found.size(), 1));
      radius_target = std::clamp(spacing * opt.slice_target * 0.5, 1e-7 * span, span);
    } else {
      radius_target = std::min(radius_target * 2.0, span);
    }
  }

  std::sort(accepted.begin(), accepted.end(),
            [](const Pair& a, const Pair& b) { return a.value < b.value; });
  std::vector<Pair> merged;
  for (auto& p : accepted) {
    bool dup = false;
    for (auto it = merged.rbegin(); it != merged.rend(); ++it) {
      if (p.value - it->value > 1e-6 * std::max(std::abs(p.value), 1.0)) break;
      if (same_pair(p, *it)) {
        dup = true;
        break;
      }
    }
    if (!dup) merged.push_back(std::move(p));
  }

  // ascending modified Gram-Schmidt; a collapsing norm is a duplicate that
  // slipped past the overlap test
  std::vector<Pair> basis;
  for (auto& p : merged) {
    VectorZ v = p.vec;
    for (const auto& q : basis) v -= q.vec.dot(v) * q.vec;
    double nv = v.norm();
    if (nv < 0.7) continue;
    v /= nv;
    for (const auto& q : basis) v -= q.vec.dot(v) * q.vec;
    v.normalize();
    VectorZ Av = op.apply(v);
    double lam = v.dot(Av).real();
    double res = (Av - lam * v).norm();
    basis.push_back({lam, std::move(v), res});
  }
  std::sort(basis.begin(), basis.end(),
            [](const Pair& a, const Pair& b) { return a.value < b.value; });

  // joint re-orthonormalization of near-degenerate clusters, with a
  // deterministic ordering and phase convention
  std::vector<char> clustered(basis.size(), 0);
  size_t i = 0;
  while (i < basis.size()) {
    size_t k = i + 1;
    while (k < basis.size() && basis[k].value - basis[k - 1].value <=
                                   1e-8 * std::max(std::abs(basis[k].value), 1.0))
      ++k;
    if (k - i > 1) {
      MatrixZ block(n, static_cast<long>(k - i));
      for (size_t c = i; c < k; ++c) block.col(static_cast<long>(c - i)) = basis[c].vec;
      Eigen::HouseholderQR<MatrixZ> qr(block);
      MatrixZ Q = qr.householderQ() * MatrixZ::Identity(n, static_cast<long>(k - i));
      std::vector<VectorZ> cols;
      for (long c = 0; c < Q.cols(); ++c) {
        VectorZ v = Q.col(c);
        phase_fix(v);
        cols.push_back(std::move(v));
      }
      std::sort(cols.begin(), cols.end(), [](const VectorZ& a, const VectorZ& b) {
        for (long t = 0; t < a.size(); ++t) {
          double da = std::abs(a[t]), db = std::abs(b[t]);
          if (std::abs(da - db) > 1e-10) return da > db;
        }
        return false;
      });
      for (size_t c = i; c < k; ++c) {
        VectorZ& v = cols[c - i];
        VectorZ Av = op.apply(v);
        basis[c].value = v.dot(Av).real();
        basis[c].residual = (Av - basis[c].value * v).norm();
        basis[c].vec = std::move(v);
        clustered[c] = 1;
      }
      std::sort(basis.begin() + static_cast<long>(i), basis.begin() + static_cast<long>(k),
                [](const Pair& a, const Pair& b) { return a.value < b.value; });
    } else {
      phase_fix(basis[i].vec);
    }
    i = k;
  }

  double lo_eff = alpha, hi_eff = beta;
  std::vector<Pair> kept;
  std::vector<char> kept_clustered;
  for (size_t c = 0; c < basis.size(); ++c) {
    Pair& p = basis[c];
    bool keep = false;
    if (p.value >= alpha && (unbounded || p.value <= beta)) {
      keep = true;
    } else if (p.value >= alpha - edge_eps && p.value < alpha) {
      lo_eff = std::min(lo_eff, alpha - margin);
      keep = true;
    } else if (!unbounded && p.value > beta && p.value <= beta + edge_eps) {
      hi_eff = std::max(hi_eff, beta + margin);
      keep = true;
    }
    if (keep) {
      kept.push_back(std::move(p));
      kept_clustered.push_back(clustered[c]);
    }
  }

  if (static_cast<int>(kept.size()) > max_count) {
    truncated = true;
    kept.resize(static_cast<size_t>(max_count));
  }

  BandPairs out;
  out.lo = lo_eff;
  out.hi = hi_eff;
  out.truncated = truncated;
  const long m = static_cast<long>(kept.size());
  out.values.resize(m);
  out.residuals.resize(m);
  out.vectors.resize(n, m);
  for (long c = 0; c < m; ++c) {
    out.values[c] = kept[static_cast<size_t>(c)].value;
    out.residuals[c] = kept[static_cast<size_t>(c)].residual;
    out.vectors.col(c) = kept[static_cast<size_t>(c)].vec;
  }
  for (long c = 0; c < m; ++c) {
    double ref = std::max(std::abs(out.values[c]), 1.0);
    double allow = kept_clustered[static_cast<size_t>(c)] ? 1.5e-8 * ref
                                                          : 4.0 * opt.tol * ref;
    if (out.residuals[c] > allow) {
      convergence_error err("eig_band: residual check failed after assembly");
      err.best_estimate = out.residuals[c];
      throw err;
    }
  }
  return out;
}

BandPairs eig_lowest(const SparseOperator& op, int count, const BandOptions& opt) {
  if (count < 1) throw invalid_argument("eig_lowest: count must be positive");
  double lo = gershgorin_floor(op);
  lo -= 1e-6 * std::max(1.0, std::abs(lo));
  BandPairs all = eig_band(op, lo, std::numeric_limits<double>::infinity(), count, opt);
  if (all.count() < count) {
    convergence_error err("eig_lowest: fewer pairs converged than requested");
    err.best_estimate = all.count();
    throw err;
  }
  return all;
}

}  // namespace specctrl
