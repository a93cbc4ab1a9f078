#include "dvarimax/rotation.hpp"

#include <cmath>
#include <string>

#include "dvarimax/error.hpp"

namespace dvarimax {

namespace {

constexpr double kUnitTol = 1e-8;
constexpr double kMinNorm = 1e-14;

void require_unit(const Vector& q, Index r, const char* where) {
  if (q.size() != r) {
    throw Error(ErrorKind::Dimension,
                std::string(where) + ": q has length " +
                    std::to_string(q.size()) + ", expected " +
                    std::to_string(r));
  }
  if (!(std::abs(q.norm() - 1.0) <= kUnitTol)) {
    throw Error(ErrorKind::Domain,
                std::string(where) + ": q is not unit norm");
  }
}

Vector project_tangent(const Vector& q, const Vector& v) {
  return v - q * q.dot(v);
}

// Gradient without input validation; pgd_solve checks once up front.
Vector gradient_unchecked(const Vector& q, const Matrix& scores,
                          const Matrix* sigma_n) {
  const double n = static_cast<double>(scores.cols());
  const Vector proj = scores.transpose() * q;
  const Vector cubes = proj.array().cube().matrix();
  Vector g = project_tangent(q, (scores * cubes) * (-1.0 / (3.0 * n)));
  if (sigma_n != nullptr) {
    const Vector sq = *sigma_n * q;
    g += (1.0 + q.dot(sq)) * project_tangent(q, sq);
  }
  return g;
}

}  // namespace

void RotationSolveConfig::validate(Index r) const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw Error(ErrorKind::Parameter, "step_size must be positive");
  }
  if (!(grad_tol > 0.0)) {
    throw Error(ErrorKind::Parameter, "grad_tol must be positive");
  }
  if (max_iters < 1) {
    throw Error(ErrorKind::Parameter, "max_iters must be >= 1");
  }
  if (correction) {
    const Matrix& c = *correction;
    if (c.rows() != r || c.cols() != r) {
      throw Error(ErrorKind::Dimension, "correction must be r x r");
    }
    if (!((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-10)) {
      throw Error(ErrorKind::Parameter, "correction must be symmetric");
    }
  }
}

double objective(const Vector& q, const Matrix& scores) {
  require_unit(q, scores.rows(), "objective");
  const double n = static_cast<double>(scores.cols());
  const Vector proj = scores.transpose() * q;
  return -proj.array().square().square().sum() / (12.0 * n);
}

Vector riemannian_gradient(const Vector& q, const Matrix& scores) {
  require_unit(q, scores.rows(), "riemannian_gradient");
  return gradient_unchecked(q, scores, nullptr);
}

Vector corrected_gradient(const Vector& q, const Matrix& scores,
                          const Matrix& sigma_n) {
  require_unit(q, scores.rows(), "corrected_gradient");
  if (sigma_n.rows() != q.size() || sigma_n.cols() != q.size()) {
    throw Error(ErrorKind::Dimension, "correction must be r x r");
  }
  return gradient_unchecked(q, scores, &sigma_n);
}

PgdOutcome pgd_solve(const Vector& q0, const Matrix& scores,
                     const RotationSolveConfig& config,
                     const IterateObserver& observer) {
  const Index r = scores.rows();
  config.validate(r);
  require_unit(q0, r, "pgd_solve");
  const Matrix* sigma_n = config.correction ? &*config.correction : nullptr;

  PgdOutcome out;
  out.q = q0 / q0.norm();
  if (observer) observer(0, out.q);
  Vector g = gradient_unchecked(out.q, scores, sigma_n);
  out.grad_norm = g.norm();
  while (true) {
    if (!std::isfinite(out.grad_norm)) {
      throw Error(ErrorKind::Divergence,
                  "non-finite gradient at iteration " +
                      std::to_string(out.iters),
                  out.iters);
    }
    if (out.grad_norm <= config.grad_tol) {
      out.converged = true;
      break;
    }
    if (out.iters >= config.max_iters) break;
    Vector next = out.q - config.step_size * g;
    const double norm = next.norm();
    if (!std::isfinite(norm) || norm < kMinNorm) {
      throw Error(ErrorKind::Divergence,
                  "iterate collapsed at iteration " +
                      std::to_string(out.iters + 1),
                  out.iters + 1);
    }
    out.q = next / norm;
    ++out.iters;
    if (observer) observer(out.iters, out.q);
    g = gradient_unchecked(out.q, scores, sigma_n);
    out.grad_norm = g.norm();
  }
  return out;
}

Matrix symmetric_orthogonalize(const Matrix& q_hat) {
  if (q_hat.cols() == 0 || q_hat.cols() > q_hat.rows()) {
    throw Error(ErrorKind::Dimension,
                "symmetric_orthogonalize needs 1 <= s <= r");
  }
  Eigen::JacobiSVD<Matrix> svd(q_hat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-12 * sv(0))) {
    throw Error(ErrorKind::DegenerateSolutions,
                "solutions are rank deficient (duplicate recovered columns)");
  }
  return svd.matrixU() * svd.matrixV().transpose();
}

RotationResult deflate(const Matrix& scores, Index s, const InitProvider& init,
                       const RotationSolveConfig& config) {
  const Index r = scores.rows();
  if (s < 1 || s > std::min(r, scores.cols())) {
    throw Error(ErrorKind::Dimension, "deflate needs 1 <= s <= min(r, n)");
  }
  RotationResult out;
  out.q_hat = Matrix::Zero(r, s);
  for (Index k = 0; k < s; ++k) {
    const Vector q0 = init(k, out.q_hat.leftCols(k));
    PgdOutcome solved;
    try {
      solved = pgd_solve(q0, scores, config);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Divergence) throw;
      throw Error(ErrorKind::Divergence,
                  "column " + std::to_string(k + 1) + ": " + e.what(),
                  static_cast<long>(k + 1));
    }
    out.q_hat.col(k) = solved.q;
    out.iter_counts.push_back(solved.iters);
    out.grad_norms.push_back(solved.grad_norm);
    out.converged.push_back(solved.converged);
  }
  Eigen::JacobiSVD<Matrix> svd(out.q_hat);
  out.min_singular = svd.singularValues()(s - 1);
  out.q_check = symmetric_orthogonalize(out.q_hat);
  return out;
}

double population_objective(const Vector& q, const Matrix& a, double kappa,
                            const Matrix& sigma_n) {
  require_unit(q, a.rows(), "population_objective");
  const double l4 = (a.transpose() * q).array().square().square().sum();
  const double quad = q.dot(sigma_n * q);
  return -0.25 * (kappa * l4 + 1.0 + 2.0 * quad + quad * quad);
}

Vector population_gradient_h(const Vector& q, const Matrix& a, double kappa) {
  require_unit(q, a.rows(), "population_gradient_h");
  const Vector cubes = (a.transpose() * q).array().cube().matrix();
  return -kappa * project_tangent(q, a * cubes);
}

}  // namespace dvarimax
