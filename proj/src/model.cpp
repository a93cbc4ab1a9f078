#include "dvarimax/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "dvarimax/error.hpp"

namespace dvarimax {

ObservationMatrix::ObservationMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 2) {
    throw Error(ErrorKind::Dimension,
                "observation matrix needs p >= 1 and n >= 2, got " +
                    std::to_string(data_.rows()) + "x" +
                    std::to_string(data_.cols()));
  }
  if (!data_.allFinite()) {
    throw Error(ErrorKind::Domain, "observation matrix has non-finite entries");
  }
}

Matrix GroundTruth::projected_noise_covariance() const {
  const Vector inv_s = svd_singulars.cwiseInverse();
  const Matrix ls = svd_left * inv_s.asDiagonal();
  return eps2 * ls.transpose() * noise_covariance * ls;
}

void SyntheticConfig::validate() const {
  if (n < 2 || p < 1 || r < 1) {
    throw Error(ErrorKind::Dimension, "need n >= 2, p >= 1, r >= 1");
  }
  if (r > std::min(p, n)) {
    throw Error(ErrorKind::Dimension, "r = " + std::to_string(r) +
                                          " exceeds min(p, n) = " +
                                          std::to_string(std::min(p, n)));
  }
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw Error(ErrorKind::Parameter, "theta must lie in (0, 1]");
  }
  if (!(varepsilon2 >= 0.0) || !std::isfinite(varepsilon2)) {
    throw Error(ErrorKind::Parameter, "varepsilon2 must be finite and >= 0");
  }
}

LoadingDraw generate_loading(Index p, Index r, Stream& rng) {
  if (r < 1 || p < 1 || r > p) {
    throw Error(ErrorKind::Dimension,
                "generate_loading needs 1 <= r <= p, got p=" +
                    std::to_string(p) + " r=" + std::to_string(r));
  }
  Matrix raw = gaussian_matrix(p, r, rng);
  std::uniform_real_distribution<double> uniform(0.5, 1.5);
  Vector scales(r);
  for (Index j = 0; j < r; ++j) scales(j) = uniform(rng);
  Matrix loading = raw * scales.asDiagonal();
  loading /= operator_norm(loading);
  return {std::move(loading), std::move(scales)};
}

Matrix generate_factors(Index r, Index n, double theta, Stream& rng) {
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw Error(ErrorKind::Parameter, "theta must lie in (0, 1]");
  }
  std::bernoulli_distribution active(theta);
  std::normal_distribution<double> normal;
  Matrix z(r, n);
  for (Index t = 0; t < n; ++t) {
    for (Index i = 0; i < r; ++i) {
      const bool on = active(rng);
      const double w = normal(rng);
      z(i, t) = on ? w : 0.0;
    }
  }
  return z;
}

double bernoulli_gaussian_kappa(double theta) { return 1.0 / theta - 1.0; }

Matrix realize_noise_covariance(const NoiseCovarianceKind& kind, Index p,
                                Stream& rng) {
  if (p < 1) throw Error(ErrorKind::Dimension, "p must be >= 1");
  struct Visitor {
    Index p;
    Stream& rng;
    Matrix operator()(const IdentityNoise&) const {
      return Matrix::Identity(p, p);
    }
    Matrix operator()(const HeteroscedasticNoise& h) const {
      if (!(h.alpha >= 0.0) || !std::isfinite(h.alpha)) {
        throw Error(ErrorKind::Parameter, "alpha must be finite and >= 0");
      }
      std::uniform_real_distribution<double> uniform(0.0, 1.0);
      Vector v(p);
      for (Index j = 0; j < p; ++j) v(j) = std::pow(uniform(rng), h.alpha);
      const double total = v.sum();
      if (!(total > 0.0)) {
        throw Error(ErrorKind::Parameter, "degenerate heteroscedastic draw");
      }
      Vector gamma2 = (static_cast<double>(p) / total) * v;
      return gamma2.asDiagonal();
    }
    Matrix operator()(const ToeplitzNoise& t) const {
      if (!(t.rho > 0.0 && t.rho < 1.0)) {
        throw Error(ErrorKind::Parameter, "rho must lie in (0, 1)");
      }
      Matrix s(p, p);
      for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < p; ++j)
          s(i, j) = std::pow(t.rho, static_cast<double>(std::abs(i - j)));
      return s;
    }
  };
  return std::visit(Visitor{p, rng}, kind);
}

namespace {

// Columns ~ N(0, scale * cov).
Matrix gaussian_columns(const Matrix& cov, Index n, double scale,
                        Stream& rng) {
  const Index p = cov.rows();
  Matrix w = gaussian_matrix(p, n, rng);
  if (cov.isDiagonal()) {
    return (scale * cov.diagonal()).cwiseSqrt().asDiagonal() * w;
  }
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) {
    Matrix lw = llt.matrixL() * w;
    return std::sqrt(scale) * lw;
  }
  // PSD but singular: symmetric square root.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return std::sqrt(scale) *
         (eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose() * w);
}

}  // namespace

Dataset generate_dataset(const SyntheticConfig& config) {
  config.validate();
  Stream loading_rng = Stream::derive(config.seed, Purpose::Loading);
  Stream factor_rng = Stream::derive(config.seed, Purpose::Factors);
  Stream cov_rng = Stream::derive(config.seed, Purpose::NoiseCovariance);
  Stream noise_rng = Stream::derive(config.seed, Purpose::Noise);

  LoadingDraw draw = generate_loading(config.p, config.r, loading_rng);
  Matrix z = generate_factors(config.r, config.n, config.theta, factor_rng);
  Matrix cov = realize_noise_covariance(config.noise_kind, config.p, cov_rng);

  Matrix e;
  if (config.varepsilon2 > 0.0) {
    e = gaussian_columns(cov, config.n,
                         config.varepsilon2 / static_cast<double>(config.p),
                         noise_rng);
  } else {
    e = Matrix::Zero(config.p, config.n);
  }

  GroundTruth truth;
  Eigen::JacobiSVD<Matrix> svd(draw.loading,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  truth.svd_left = svd.matrixU();
  truth.svd_singulars = svd.singularValues();
  truth.svd_right = svd.matrixV().transpose();
  truth.sigma2 = config.theta;
  truth.theta = config.theta;
  truth.kappa = bernoulli_gaussian_kappa(config.theta);
  // Noise column covariance is (varepsilon2 / p) Sigma_E with unit-variance
  // factors scaled by sigma^2 = theta, so eps^2 = varepsilon2 / (p theta).
  truth.eps2 = config.varepsilon2 /
               (static_cast<double>(config.p) * config.theta);
  truth.noise_covariance = std::move(cov);

  Matrix x = draw.loading * z;
  if (config.varepsilon2 > 0.0) x += e;
  truth.loading = std::move(draw.loading);
  truth.factors = std::move(z);
  truth.noise = std::move(e);
  return Dataset{ObservationMatrix(std::move(x)), std::move(truth)};
}

}  // namespace dvarimax
