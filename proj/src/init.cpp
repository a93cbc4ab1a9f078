#include "dvarimax/init.hpp"

#include <memory>
#include <string>

#include "dvarimax/error.hpp"

namespace dvarimax {

Matrix complement_projector(const Matrix& prior, Index r) {
  if (prior.cols() > 0 && prior.rows() != r) {
    throw Error(ErrorKind::Dimension, "prior columns must have length r");
  }
  Matrix p = Matrix::Identity(r, r);
  if (prior.cols() > 0) p -= prior * prior.transpose();
  return p;
}

Matrix complement_basis(const Matrix& prior, Index r) {
  const Index k = prior.cols();
  if (k == 0) return Matrix::Identity(r, r);
  if (prior.rows() != r) {
    throw Error(ErrorKind::Dimension, "prior columns must have length r");
  }
  if (k >= r || !prior.allFinite()) {
    throw Error(ErrorKind::DegenerateProjector,
                "complement of " + std::to_string(k) +
                    " prior columns in dimension " + std::to_string(r) +
                    " is empty or undefined");
  }
  Eigen::JacobiSVD<Matrix> svd(prior, Eigen::ComputeFullU);
  return svd.matrixU().rightCols(r - k);
}

Vector random_init(const Matrix& prior, Index r, Stream& rng) {
  const Matrix basis = complement_basis(prior, r);
  const Vector g = gaussian_vector(basis.cols(), rng);
  Vector q = basis * g;
  const double norm = q.norm();
  if (!(norm > 0.0)) {
    throw Error(ErrorKind::DegenerateProjector, "random draw collapsed to zero");
  }
  return q / norm;
}

Vector multi_random_init(const Matrix& scores, const Matrix& prior, int draws,
                         Stream& rng) {
  if (draws < 1) throw Error(ErrorKind::Parameter, "draws must be >= 1");
  const Index r = scores.rows();
  Vector best = random_init(prior, r, rng);
  double best_value = objective(best, scores);
  for (int l = 1; l < draws; ++l) {
    Vector candidate = random_init(prior, r, rng);
    const double value = objective(candidate, scores);
    if (value < best_value) {
      best_value = value;
      best = std::move(candidate);
    }
  }
  return best;
}

FourthMomentTensor::FourthMomentTensor(const Matrix& scores)
    : r_(scores.rows()) {
  const Index n = scores.cols();
  Matrix outer(r_ * r_, n);
  for (Index t = 0; t < n; ++t) {
    for (Index j = 0; j < r_; ++j)
      outer.col(t).segment(j * r_, r_) = scores.col(t) * scores(j, t);
  }
  tensor_ = (outer * outer.transpose()) / (3.0 * static_cast<double>(n));
}

Matrix FourthMomentTensor::contract(const Matrix& g) const {
  if (g.rows() != r_ || g.cols() != r_) {
    throw Error(ErrorKind::Dimension, "slice matrix must be r x r");
  }
  const Vector vec_g = Eigen::Map<const Vector>(g.data(), r_ * r_);
  const Vector out = tensor_ * vec_g;
  return Eigen::Map<const Matrix>(out.data(), r_, r_);
}

Matrix mom_matrix(const FourthMomentTensor& moments, const Matrix& g,
                  bool improved, const std::optional<Matrix>& sigma_u,
                  MomSubtraction subtraction) {
  const Index r = moments.dim();
  Matrix m = moments.contract(g);
  const Matrix sym = g + g.transpose();
  const double weight = subtraction == MomSubtraction::AsWritten ? 1.0 : 1.0 / 3.0;
  if (improved) {
    if (!sigma_u || sigma_u->rows() != r || sigma_u->cols() != r) {
      throw Error(ErrorKind::Dimension,
                  "improved moment matrix needs an r x r Sigma_U");
    }
    const Matrix& s = *sigma_u;
    m -= weight * (s * sym * s + (g * s).trace() * s);
  } else {
    m -= weight * sym;
    if (subtraction == MomSubtraction::LemmaConsistent) {
      m.diagonal().array() -= g.trace() / 3.0;
    }
  }
  return m;
}

Matrix mom_matrix(const Matrix& scores, const Matrix& g, bool improved,
                  const std::optional<Matrix>& sigma_u,
                  MomSubtraction subtraction) {
  return mom_matrix(FourthMomentTensor(scores), g, improved, sigma_u,
                    subtraction);
}

MomSelection mom_init(const FourthMomentTensor& moments, const Matrix& prior,
                      int slices, bool improved,
                      const std::optional<Matrix>& sigma_u, const Stream& rng,
                      MomSubtraction subtraction) {
  if (slices < 1) throw Error(ErrorKind::Parameter, "slices must be >= 1");
  const Index r = moments.dim();
  MomSelection out;
  if (r == 1) {
    out.q0 = Vector::Ones(1);
    out.gaps.assign(static_cast<std::size_t>(slices), 0.0);
    return out;
  }
  const Matrix proj = complement_projector(prior, r);
  const bool project = prior.cols() > 0;
  double best_gap = -1.0;
  Vector best_vec;
  out.gaps.reserve(static_cast<std::size_t>(slices));
  for (int i = 0; i < slices; ++i) {
    Stream slice_rng = rng.child(Purpose::Slices, static_cast<std::uint64_t>(i));
    const Matrix g = gaussian_matrix(r, r, slice_rng);
    Matrix m = mom_matrix(moments, g, improved, sigma_u, subtraction);
    if (project) m = proj * m * proj;
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
    const Vector& sv = svd.singularValues();
    const double gap = sv(0) - sv(1);
    out.gaps.push_back(gap);
    if (gap > best_gap) {
      best_gap = gap;
      out.slice = i;
      best_vec = svd.matrixU().col(0);
    }
  }
  if (!(best_gap >= 1e-12)) {
    throw Error(ErrorKind::DegenerateSlicing,
                "every slice has a top singular gap below 1e-12");
  }
  canonicalize_sign(best_vec);
  out.q0 = best_vec / best_vec.norm();
  out.gap = best_gap;
  return out;
}

InitProvider make_init_provider(const InitScheme& scheme, const Matrix& scores,
                                const Stream& rng,
                                const std::optional<Matrix>& sigma_n,
                                MomSubtraction subtraction) {
  const Index r = scores.rows();
  auto column_stream = [rng](Index k) {
    return rng.child(Purpose::Init, static_cast<std::uint64_t>(k));
  };
  if (std::holds_alternative<RandomInit>(scheme)) {
    return [r, column_stream](Index k, const Matrix& prior) {
      Stream s = column_stream(k);
      return random_init(prior, r, s);
    };
  }
  if (const auto* multi = std::get_if<MultiRandomInit>(&scheme)) {
    const int draws = multi->draws.value_or(default_draws(r));
    auto data = std::make_shared<const Matrix>(scores);
    return [data, draws, column_stream](Index k, const Matrix& prior) {
      Stream s = column_stream(k);
      return multi_random_init(*data, prior, draws, s);
    };
  }
  const auto& mom = std::get<MomInit>(scheme);
  const int slices = mom.slices.value_or(default_slices(r));
  std::optional<Matrix> sigma_u;
  if (mom.improved) {
    if (!sigma_n) {
      throw Error(ErrorKind::Parameter,
                  "improved method-of-moments init needs a Sigma_N estimate");
    }
    sigma_u = Matrix::Identity(r, r) + *sigma_n;
  }
  auto moments = std::make_shared<FourthMomentTensor>(scores);
  return [moments, slices, improved = mom.improved, sigma_u, subtraction,
          column_stream](Index k, const Matrix& prior) {
    return mom_init(*moments, prior, slices, improved, sigma_u,
                    column_stream(k), subtraction)
        .q0;
  };
}

}  // namespace dvarimax
