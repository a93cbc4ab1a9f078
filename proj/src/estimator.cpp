#include "dvarimax/estimator.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "dvarimax/error.hpp"

namespace dvarimax {

const char* to_string(EstimatorVariant v) {
  switch (v) {
    case EstimatorVariant::Base: return "base";
    case EstimatorVariant::Improved1: return "improved1";
    case EstimatorVariant::Improved2: return "improved2";
  }
  return "base";
}

EstimatorVariant parse_variant(const std::string& name) {
  if (name == "base") return EstimatorVariant::Base;
  if (name == "improved1") return EstimatorVariant::Improved1;
  if (name == "improved2") return EstimatorVariant::Improved2;
  throw Error(ErrorKind::Config, "unknown variant '" + name +
                                     "' (expected base, improved1, improved2)");
}

int EstimateDiagnostics::total_iters() const {
  return std::accumulate(iter_counts.begin(), iter_counts.end(), 0);
}

namespace {

bool needs_correction(const EstimateOptions& options) {
  if (options.variant != EstimatorVariant::Base) return true;
  const auto* mom = std::get_if<MomInit>(&options.init);
  return mom != nullptr && mom->improved;
}

}  // namespace

LoadingEstimate estimate_loading(const ObservationMatrix& x, Index r,
                                 const EstimateOptions& options,
                                 const Stream& rng) {
  const auto start = std::chrono::steady_clock::now();
  LoadingEstimate out;
  out.decomposition = eigendecompose(x, r);
  EstimatorVariant variant = options.variant;
  InitScheme init = options.init;

  if (needs_correction(options)) {
    try {
      out.decomposition = corrected_decomposition(out.decomposition, x);
    } catch (const Error& e) {
      const bool recoverable = e.kind() == ErrorKind::CorrectionInfeasible ||
                               e.kind() == ErrorKind::Parameter;
      if (!recoverable) throw;
      if (!options.auto_fallback) {
        throw Error(ErrorKind::CorrectionInfeasible,
                    std::string(e.what()) +
                        "; fall back to the base variant or enable auto_fallback",
                    e.index());
      }
      variant = EstimatorVariant::Base;
      if (auto* mom = std::get_if<MomInit>(&init)) mom->improved = false;
      out.diagnostics.fallback = true;
    }
  }
  out.diagnostics.variant_used = variant;

  const PcaDecomposition& decomp = out.decomposition;
  const bool corrected_scores = variant != EstimatorVariant::Base;
  const Matrix& scores =
      corrected_scores ? decomp.correction->scores : decomp.scores;
  const Vector eigvals =
      corrected_scores ? decomp.correction->eigvals : decomp.leading();

  if (options.skip_rotation) {
    out.q_check = Matrix::Identity(r, r);
  } else {
    RotationSolveConfig solve = options.solve;
    solve.correction.reset();
    if (variant == EstimatorVariant::Improved2) {
      solve.correction = decomp.correction->sigma_n;
    }
    std::optional<Matrix> sigma_n;
    if (decomp.correction) sigma_n = decomp.correction->sigma_n;
    const InitProvider provider =
        make_init_provider(init, scores, rng, sigma_n, options.mom_subtraction);
    RotationResult rot = deflate(scores, r, provider, solve);
    out.q_check = std::move(rot.q_check);
    out.diagnostics.iter_counts = std::move(rot.iter_counts);
    out.diagnostics.grad_norms = std::move(rot.grad_norms);
    out.diagnostics.converged = std::move(rot.converged);
    out.diagnostics.min_singular = rot.min_singular;
    out.diagnostics.near_duplicate = rot.min_singular < kNearDuplicateThreshold;
  }

  const Matrix unnormalized =
      decomp.eigvecs * eigvals.cwiseSqrt().asDiagonal() * out.q_check;
  out.lambda_hat = unnormalized / operator_norm(unnormalized);

  out.diagnostics.runtime_ms =
      std::chrono::duration<double, std::milli>(
          std::chrono::steady_clock::now() - start)
          .count();
  return out;
}

Matrix predict_factors(const PcaDecomposition& decomposition,
                       const Matrix& q_check) {
  if (q_check.rows() != decomposition.rank) {
    throw Error(ErrorKind::Dimension, "q_check must have r rows");
  }
  return std::sqrt(decomposition.eigvals(0)) *
         (q_check.transpose() * decomposition.scores);
}

}  // namespace dvarimax
