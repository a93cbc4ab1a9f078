#include "dvarimax/spectral.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dvarimax/error.hpp"

namespace dvarimax {

PcaDecomposition eigendecompose(const ObservationMatrix& x, Index r) {
  const Matrix& data = x.data();
  const Index p = x.p();
  const Index n = x.n();
  const Index m = std::min(p, n);
  if (r < 1 || r > m) {
    throw Error(ErrorKind::Dimension, "rank r = " + std::to_string(r) +
                                          " outside [1, min(p, n) = " +
                                          std::to_string(m) + "]");
  }
  const double inv_n = 1.0 / static_cast<double>(n);

  PcaDecomposition out;
  out.rank = r;
  out.p = p;
  out.eigvals.resize(m);
  Matrix vecs;
  if (p > 4 * n) {
    Eigen::BDCSVD<Matrix> svd(data * std::sqrt(inv_n), Eigen::ComputeThinU);
    out.eigvals = svd.singularValues().head(m).array().square();
    vecs = svd.matrixU().leftCols(r);
  } else {
    Matrix gram = inv_n * (data * data.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.info() != Eigen::Success) {
      throw Error(ErrorKind::Domain, "eigensolver failed to converge");
    }
    // Ascending order from Eigen; reverse.
    const Vector& values = eig.eigenvalues();
    for (Index j = 0; j < m; ++j) out.eigvals(j) = std::max(0.0, values(p - 1 - j));
    vecs.resize(p, r);
    for (Index j = 0; j < r; ++j) vecs.col(j) = eig.eigenvectors().col(p - 1 - j);
  }

  const double d1 = out.eigvals(0);
  for (Index j = 0; j < r; ++j) {
    if (!(out.eigvals(j) > kEigenFloor * d1) || !(d1 > 0.0)) {
      throw Error(ErrorKind::RankDeficient,
                  "eigenvalue d_" + std::to_string(j + 1) +
                      " is below the floor 1e-12 * d_1",
                  static_cast<long>(j + 1));
    }
  }
  canonicalize_column_signs(vecs);
  out.eigvecs = std::move(vecs);
  const Vector inv_root = out.eigvals.head(r).cwiseSqrt().cwiseInverse();
  out.scores = inv_root.asDiagonal() * (out.eigvecs.transpose() * data);
  return out;
}

double noise_variance_estimate(const PcaDecomposition& decomp, Index p) {
  const Index r = decomp.rank;
  if (p <= r) {
    throw Error(ErrorKind::Parameter,
                "noise variance needs p > r (p = " + std::to_string(p) +
                    ", r = " + std::to_string(r) +
                    "); use the uncorrected pipeline");
  }
  // Eigenvalues beyond min(p, n) are exactly zero, and so is anything under
  // the floor, so noiseless data gives exactly 0.
  const double floor = kEigenFloor * decomp.eigvals(0);
  double tail = 0.0;
  for (Index j = r; j < decomp.eigvals.size(); ++j) {
    if (decomp.eigvals(j) > floor) tail += decomp.eigvals(j);
  }
  return std::max(0.0, tail / static_cast<double>(p - r));
}

PcaDecomposition corrected_decomposition(PcaDecomposition decomp,
                                         const ObservationMatrix& x) {
  const Index r = decomp.rank;
  const double noise_var = noise_variance_estimate(decomp, x.p());
  const double floor = kEigenFloor * decomp.eigvals(0);
  NoiseCorrection c;
  c.noise_var = noise_var;
  c.eigvals = decomp.leading().array() - noise_var;
  for (Index j = 0; j < r; ++j) {
    if (!(c.eigvals(j) > floor)) {
      throw Error(ErrorKind::CorrectionInfeasible,
                  "corrected eigenvalue " + std::to_string(j + 1) +
                      " is not above the floor",
                  static_cast<long>(j + 1));
    }
  }
  // D^{-1/2} V^T X = D^{-1/2} D_(r)^{1/2} U_(r).
  const Vector rescale =
      (decomp.leading().array() / c.eigvals.array()).sqrt().matrix();
  c.scores = rescale.asDiagonal() * decomp.scores;
  c.sigma_n = (noise_var * c.eigvals.cwiseInverse()).asDiagonal();
  decomp.correction = std::move(c);
  return decomp;
}

Index select_rank(std::span<const double> eigvals, Index r_max) {
  if (r_max < 1) throw Error(ErrorKind::Parameter, "r_max must be >= 1");
  if (eigvals.empty() || !(eigvals[0] > std::numeric_limits<double>::min())) {
    throw Error(ErrorKind::NoSignal, "all eigenvalues are below the floor");
  }
  const double floor = kEigenFloor * eigvals[0];
  const Index last = std::min<Index>(r_max, static_cast<Index>(eigvals.size()) - 1);
  Index best = 1;
  double best_ratio = -1.0;
  for (Index j = 1; j <= last; ++j) {
    const double num = eigvals[j - 1];
    const double den = eigvals[j];
    const double ratio = den > floor ? num / den
                                     : std::numeric_limits<double>::infinity();
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = j;
    }
    if (std::isinf(ratio)) break;
  }
  return best;
}

}  // namespace dvarimax
