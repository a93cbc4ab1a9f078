#pragma once

// Deflation varimax: the l4 objective on the unit sphere, its Riemannian
// gradient (plain and noise-corrected), projected gradient descent, the
// deflation loop and symmetric orthogonalization. Population-level
// objective and gradient are included for testing against.

#include <functional>
#include <optional>
#include <vector>

#include "dvarimax/linalg.hpp"

namespace dvarimax {

struct RotationSolveConfig {
  double step_size = 1e-5;
  double grad_tol = 1e-6;
  int max_iters = 5000;
  /// Sigma_N estimate for the bias-corrected gradient; plain PGD when empty.
  std::optional<Matrix> correction;

  /// Throws Parameter / Dimension on a bad configuration for dimension r.
  void validate(Index r) const;
};

struct PgdOutcome {
  Vector q;  // unit norm
  int iters = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

/// Called with (iteration, iterate) for the initial point and after every
/// update.
using IterateObserver = std::function<void(int, const Vector&)>;

/// Initialization for column k (0-based) given the previously solved
/// columns (r x k).
using InitProvider = std::function<Vector(Index k, const Matrix& prior)>;

struct RotationResult {
  Matrix q_hat;    // r x s stationary points, unit columns
  Matrix q_check;  // r x s orthonormal columns
  std::vector<int> iter_counts;
  std::vector<double> grad_norms;
  std::vector<bool> converged;
  double min_singular = 0.0;  // smallest singular value of q_hat
};

/// F(q; U) = -(1/(12 n)) sum_t (q^T U_t)^4.
double objective(const Vector& q, const Matrix& scores);

/// -(1/(3n)) (I - q q^T) sum_t (q^T U_t)^3 U_t.
Vector riemannian_gradient(const Vector& q, const Matrix& scores);

/// Riemannian gradient plus (1 + q^T S q) (I - q q^T) S q.
Vector corrected_gradient(const Vector& q, const Matrix& scores,
                          const Matrix& sigma_n);

/// Projected gradient descent q <- (q - step g) / ||q - step g|| until
/// ||g|| <= grad_tol or max_iters updates. A non-converged run returns the
/// last iterate with converged = false.
PgdOutcome pgd_solve(const Vector& q0, const Matrix& scores,
                     const RotationSolveConfig& config,
                     const IterateObserver& observer = {});

/// Solves s columns independently from `init` (no orthogonality
/// constraint against earlier columns), then symmetrically orthogonalizes.
RotationResult deflate(const Matrix& scores, Index s, const InitProvider& init,
                       const RotationSolveConfig& config);

/// U V^T from the thin SVD of q_hat. Throws DegenerateSolutions when
/// sigma_min <= 1e-12 sigma_max.
Matrix symmetric_orthogonalize(const Matrix& q_hat);

/// -(1/4)(kappa ||A^T q||_4^4 + 1 + 2 q^T S q + (q^T S q)^2).
double population_objective(const Vector& q, const Matrix& a, double kappa,
                            const Matrix& sigma_n);

/// -kappa (I - q q^T) A (A^T q)^{o3}.
Vector population_gradient_h(const Vector& q, const Matrix& a, double kappa);

}  // namespace dvarimax
