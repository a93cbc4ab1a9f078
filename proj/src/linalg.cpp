#include "dvarimax/linalg.hpp"

#include <cmath>
#include <random>

namespace dvarimax {

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double gram_deviation(const Matrix& m) {
  return (m.transpose() * m - Matrix::Identity(m.cols(), m.cols())).norm();
}

void canonicalize_sign(Eigen::Ref<Vector> v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  }
  if (v.size() > 0 && v(best) < 0) v = -v;
}

void canonicalize_column_signs(Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j) canonicalize_sign(m.col(j));
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix gaussian_matrix(Index rows, Index cols, Stream& rng) {
  std::normal_distribution<double> normal;
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

Vector gaussian_vector(Index size, Stream& rng) {
  std::normal_distribution<double> normal;
  Vector out(size);
  for (Index i = 0; i < size; ++i) out(i) = normal(rng);
  return out;
}

}  // namespace dvarimax
