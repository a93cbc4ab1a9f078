#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "dvarimax/linalg.hpp"
#include "dvarimax/rng.hpp"

namespace dvarimax::testing {

// r = 2, n = 4 instance with columns (+-sqrt2, 0), (0, +-sqrt2).
inline Matrix hand_instance() {
  const double s = std::sqrt(2.0);
  Matrix h(2, 4);
  h << s, -s, 0, 0,
       0, 0, s, -s;
  return h;
}

// Haar-ish random orthogonal matrix via QR with sign fix.
inline Matrix random_orthogonal(Index r, Stream& rng) {
  Matrix g = gaussian_matrix(r, r, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix rr = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < r; ++j)
    if (rr(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

inline Vector random_unit(Index r, Stream& rng) {
  Vector v = gaussian_vector(r, rng);
  return v / v.norm();
}

// Exhaustive min over all 2^r r! signed permutations of ||est - truth P||_F.
inline double brute_force_signed_error(const Matrix& est, const Matrix& truth) {
  const Index r = truth.cols();
  std::vector<Index> perm(static_cast<std::size_t>(r));
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    for (unsigned mask = 0; mask < (1u << r); ++mask) {
      Matrix p = Matrix::Zero(r, r);
      for (Index k = 0; k < r; ++k) {
        const double sign = (mask >> k) & 1u ? -1.0 : 1.0;
        p(perm[static_cast<std::size_t>(k)], k) = sign;
      }
      best = std::min(best, (est - truth * p).norm());
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Bernoulli-Gaussian draws scaled to unit variance.
inline Matrix unit_bernoulli_gaussian(Index r, Index n, double theta,
                                      Stream& rng) {
  std::bernoulli_distribution on(theta);
  std::normal_distribution<double> normal;
  Matrix z(r, n);
  const double scale = 1.0 / std::sqrt(theta);
  for (Index t = 0; t < n; ++t)
    for (Index i = 0; i < r; ++i) {
      const bool b = on(rng);
      const double w = normal(rng);
      z(i, t) = b ? scale * w : 0.0;
    }
  return z;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace dvarimax::testing
