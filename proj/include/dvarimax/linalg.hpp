#pragma once

#include <Eigen/Dense>

#include "dvarimax/rng.hpp"

namespace dvarimax {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Largest singular value.
double operator_norm(const Matrix& m);

/// ||M^T M - I||_F.
double gram_deviation(const Matrix& m);

/// Flip the sign of `v` so its largest-magnitude entry is positive
/// (first index wins ties).
void canonicalize_sign(Eigen::Ref<Vector> v);

/// Apply canonicalize_sign to every column.
void canonicalize_column_signs(Matrix& m);

bool all_finite(const Matrix& m);

/// i.i.d. N(0,1) entries drawn column-major from `rng`.
Matrix gaussian_matrix(Index rows, Index cols, Stream& rng);
Vector gaussian_vector(Index size, Stream& rng);

}  // namespace dvarimax
