#pragma once

// End-to-end PCA + deflation varimax loading estimators.

#include <cstdint>
#include <string>
#include <vector>

#include "dvarimax/init.hpp"
#include "dvarimax/linalg.hpp"
#include "dvarimax/model.hpp"
#include "dvarimax/rotation.hpp"
#include "dvarimax/spectral.hpp"

namespace dvarimax {

/// Base: D_(r), U_(r), plain gradient.
/// Improved1: corrected eigenvalues and scores, plain gradient.
/// Improved2: corrected eigenvalues and scores, bias-corrected gradient.
enum class EstimatorVariant { Base, Improved1, Improved2 };

const char* to_string(EstimatorVariant v);
EstimatorVariant parse_variant(const std::string& name);

struct EstimateOptions {
  EstimatorVariant variant = EstimatorVariant::Base;
  InitScheme init = MomInit{};
  RotationSolveConfig solve;  // `correction` is filled in by Improved2
  MomSubtraction mom_subtraction = MomSubtraction::AsWritten;
  /// Improved variants fall back to Base when the correction is infeasible
  /// instead of throwing.
  bool auto_fallback = false;
  /// Use the identity rotation (pure PCA loadings).
  bool skip_rotation = false;
};

struct EstimateDiagnostics {
  EstimatorVariant variant_used = EstimatorVariant::Base;
  bool fallback = false;
  std::vector<int> iter_counts;
  std::vector<double> grad_norms;
  std::vector<bool> converged;
  double min_singular = 1.0;       // smallest singular value of Q_hat
  bool near_duplicate = false;     // min_singular < 0.1
  double runtime_ms = 0.0;

  int total_iters() const;
};

struct LoadingEstimate {
  Matrix lambda_hat;  // p x r, operator norm 1
  Matrix q_check;     // r x r orthogonal
  PcaDecomposition decomposition;
  EstimateDiagnostics diagnostics;
};

inline constexpr double kNearDuplicateThreshold = 0.1;

/// Runs PCA, deflation varimax with s = r, and the loading normalization.
/// Randomized initializations draw from `rng`.
LoadingEstimate estimate_loading(const ObservationMatrix& x, Index r,
                                 const EstimateOptions& options,
                                 const Stream& rng);

/// Q^T U_(r) sqrt(d_1).
Matrix predict_factors(const PcaDecomposition& decomposition,
                       const Matrix& q_check);

}  // namespace dvarimax
