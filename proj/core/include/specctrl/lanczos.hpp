#pragma once

#include <cstdint>

#include "specctrl/sparse_operator.hpp"

namespace specctrl {

struct BandOptions {
  double tol = 1e-9;         // direct residual tolerance, relative to max(|lambda|,1)
  std::uint64_t seed = 0x5eed5eedULL;
  int slice_target = 24;     // eigenpairs aimed at per shift
  int chunk = 32;            // Lanczos steps between convergence checks
  int max_krylov = 0;        // 0: automatic per slice
  int verify_passes = 3;     // deflated restarts hunting multiplicity
};

struct BandPairs {
  VectorR values;    // ascending
  MatrixZ vectors;   // Euclidean-orthonormal columns
  VectorR residuals; // ||A v - lambda v|| per pair
  double lo = 0.0, hi = 0.0;  // effective window (after edge expansion)
  bool truncated = false;     // window held more than max_count pairs
  int count() const { return static_cast<int>(values.size()); }
};

// All eigenvalues of a Hermitian operator in [alpha, beta] (up to max_count),
// by shift-invert Lanczos with full reorthogonalization. Wide windows are
// walked from below in slices; each slice is one factorization. Near-
// degenerate clusters (gap <= 1e-8*|lambda|) are re-orthonormalized jointly
// and ordered deterministically.
BandPairs eig_band(const SparseOperator& op, double alpha, double beta,
                   int max_count, const BandOptions& opt = {});

// Lowest `count` eigenpairs (window [spectral floor, +inf) walked up).
BandPairs eig_lowest(const SparseOperator& op, int count,
                     const BandOptions& opt = {});

}  // namespace specctrl
