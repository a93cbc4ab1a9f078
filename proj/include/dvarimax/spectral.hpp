#pragma once

// Truncated PCA of (1/n) X X^T and the isotropic-noise corrected
// quantities built on top of it.

#include <optional>
#include <span>

#include "dvarimax/linalg.hpp"
#include "dvarimax/model.hpp"

namespace dvarimax {

/// Relative floor applied to every eigenvalue division: d <= floor * d_1
/// counts as zero.
inline constexpr double kEigenFloor = 1e-12;

/// Eigenvalues with the noise variance removed, and what follows from them.
struct NoiseCorrection {
  double noise_var = 0.0;  // (1/(p-r)) sum_{j>r} d_j
  Vector eigvals;          // D_(r) - noise_var I, length r
  Matrix scores;           // corrected whitened scores, r x n
  Matrix sigma_n;          // noise_var * corrected^-1, r x r diagonal
};

struct PcaDecomposition {
  Vector eigvals;    // all min(p, n) eigenvalues, nonincreasing
  Matrix eigvecs;    // p x r, orthonormal columns (V_(r))
  Matrix scores;     // r x n, D_(r)^{-1/2} V_(r)^T X, rows satisfy U U^T = n I
  Index rank = 0;
  Index p = 0;
  std::optional<NoiseCorrection> correction;

  /// Leading r eigenvalues D_(r).
  Vector leading() const { return eigvals.head(rank); }
};

/// Eigendecomposition of (1/n) X X^T truncated to rank r. Uses the thin SVD
/// of X / sqrt(n) when p > 4n, else the symmetric p x p eigensolver.
PcaDecomposition eigendecompose(const ObservationMatrix& x, Index r);

/// Mean of the eigenvalues beyond r over the p - r trailing directions.
double noise_variance_estimate(const PcaDecomposition& decomp, Index p);

/// Adds the noise-corrected eigenvalues, scores and Sigma_N estimate.
/// Throws CorrectionInfeasible when a corrected eigenvalue falls below the
/// floor, and Parameter when p <= r.
PcaDecomposition corrected_decomposition(PcaDecomposition decomp,
                                         const ObservationMatrix& x);

/// Rank maximizing the eigen-ratio d_j / d_{j+1} over 1 <= j <= r_max
/// (1-based, lowest index on ties).
Index select_rank(std::span<const double> eigvals, Index r_max);

}  // namespace dvarimax
