#pragma once

// Factor model X = Lambda Z + E and the synthetic generators used by the
// benchmark harness.

#include <cstdint>
#include <variant>

#include "dvarimax/linalg.hpp"
#include "dvarimax/rng.hpp"

namespace dvarimax {

/// p x n data matrix, one sample per column. Finite entries, n >= 2.
class ObservationMatrix {
 public:
  explicit ObservationMatrix(Matrix data);

  const Matrix& data() const noexcept { return data_; }
  Index p() const noexcept { return data_.rows(); }
  Index n() const noexcept { return data_.cols(); }

 private:
  Matrix data_;
};

struct GroundTruth {
  Matrix loading;        // p x r
  Matrix factors;        // r x n
  Matrix noise;          // p x n
  Matrix svd_left;       // p x r, orthonormal columns
  Vector svd_singulars;  // r, nonincreasing
  Matrix svd_right;      // r x r orthogonal; loading = L diag(S) A
  Matrix noise_covariance;  // p x p
  double sigma2 = 1.0;
  double eps2 = 0.0;
  double theta = 1.0;
  double kappa = 0.0;

  /// eps^2 S^-1 L^T Sigma_E L S^-1, the covariance of the projected noise
  /// in whitened coordinates (unit factor variance).
  Matrix projected_noise_covariance() const;
};

struct IdentityNoise {};
struct HeteroscedasticNoise {
  double alpha = 0.1;
};
struct ToeplitzNoise {
  double rho = 0.5;
};
using NoiseCovarianceKind =
    std::variant<IdentityNoise, HeteroscedasticNoise, ToeplitzNoise>;

struct SyntheticConfig {
  Index n = 900;
  Index p = 300;
  Index r = 5;
  double theta = 0.1;
  double varepsilon2 = 0.1;
  NoiseCovarianceKind noise_kind = IdentityNoise{};
  std::uint64_t seed = 0;

  void validate() const;
};

struct LoadingDraw {
  Matrix loading;  // p x r, operator norm 1
  Vector scales;   // d_1..d_r ~ Uniform[0.5, 1.5]
};

struct Dataset {
  ObservationMatrix observations;
  GroundTruth truth;
};

LoadingDraw generate_loading(Index p, Index r, Stream& rng);

/// Bernoulli-Gaussian factors Z_ij = B_ij W_ij, B ~ Bernoulli(theta).
Matrix generate_factors(Index r, Index n, double theta, Stream& rng);

/// Excess kurtosis (1/3)(E[Z^4]/sigma^4 - 3) of a Bernoulli-Gaussian
/// coordinate, i.e. 1/theta - 1.
double bernoulli_gaussian_kappa(double theta);

Matrix realize_noise_covariance(const NoiseCovarianceKind& kind, Index p,
                                Stream& rng);

/// Draws every component from streams derived from `config.seed`.
Dataset generate_dataset(const SyntheticConfig& config);

}  // namespace dvarimax
