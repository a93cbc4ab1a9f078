#include <doctest.h>

#include <cmath>
#include <vector>

#include "dvarimax/error.hpp"
#include "dvarimax/estimator.hpp"
#include "dvarimax/eval.hpp"
#include "helpers.hpp"

using namespace dvarimax;
using namespace dvarimax::testing;

namespace {

// Converging step for tests that need stationary points; the library
// default (1e-5) stops far short of them within 5000 iterations.
constexpr double kTestStep = 0.05;

EstimateOptions options(EstimatorVariant v, InitScheme init = MomInit{}) {
  EstimateOptions o;
  o.variant = v;
  o.init = init;
  o.solve.step_size = kTestStep;
  return o;
}

Dataset small_dataset(std::uint64_t seed, double varepsilon2 = 0.1) {
  SyntheticConfig c;
  c.n = 600;
  c.p = 40;
  c.r = 3;
  c.varepsilon2 = varepsilon2;
  c.seed = seed;
  return generate_dataset(c);
}

// p x n data with (1/n) X X^T = I_p.
Matrix flat_spectrum(Index p, Index n, Stream& rng) {
  const Matrix rows = random_orthogonal(n, rng).topRows(p);
  return std::sqrt(double(n)) * random_orthogonal(p, rng) * rows;
}

}  // namespace

TEST_CASE("variant names round-trip") {
  for (auto v : {EstimatorVariant::Base, EstimatorVariant::Improved1, EstimatorVariant::Improved2})
    CHECK(parse_variant(to_string(v)) == v);
  CHECK_THROWS_AS(parse_variant("improved3"), Error);
}

TEST_CASE("estimate invariants hold for every variant and init") {
  const Dataset ds = small_dataset(3);
  for (auto v : {EstimatorVariant::Base, EstimatorVariant::Improved1, EstimatorVariant::Improved2}) {
    for (const InitScheme& init :
         std::vector<InitScheme>{RandomInit{}, MultiRandomInit{}, MomInit{}, MomInit{{}, true}}) {
      const LoadingEstimate est = estimate_loading(ds.observations, 3, options(v, init), Stream(1));
      CHECK(std::abs(operator_norm(est.lambda_hat) - 1.0) <= 1e-10);
      CHECK(gram_deviation(est.q_check) <= 1e-10);
      const Matrix& u = est.decomposition.scores;
      CHECK((u * u.transpose() / double(u.cols()) - Matrix::Identity(3, 3)).norm() <= 1e-8);
      CHECK(est.diagnostics.iter_counts.size() == 3);
      CHECK(est.diagnostics.grad_norms.size() == 3);
      CHECK(est.diagnostics.near_duplicate == (est.diagnostics.min_singular < 0.1));
      CHECK_FALSE(est.diagnostics.fallback);
      CHECK(est.diagnostics.variant_used == v);
      // rotation never leaves the PCA subspace
      const Matrix& vr = est.decomposition.eigvecs;
      CHECK((est.lambda_hat - vr * (vr.transpose() * est.lambda_hat)).norm() <= 1e-10);
    }
  }
}

TEST_CASE("noiseless recovery of an orthogonal loading") {
  std::vector<double> errors;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Stream rng(300 + seed);
    const Matrix a = random_orthogonal(3, rng);
    const Matrix z = generate_factors(3, 20000, 0.1, rng);
    const LoadingEstimate est =
        estimate_loading(ObservationMatrix(a * z), 3, options(EstimatorVariant::Base), rng.child(Purpose::Estimate));
    errors.push_back(signed_permutation_error(est.lambda_hat, a).error);
  }
  MESSAGE("median error " << median(errors));
  CHECK(median(errors) <= 0.15);
}

TEST_CASE("skipping the rotation gives the PCA loading") {
  const Dataset ds = small_dataset(4);
  EstimateOptions o = options(EstimatorVariant::Base);
  o.skip_rotation = true;
  const LoadingEstimate est = estimate_loading(ds.observations, 3, o, Stream(2));
  const PcaDecomposition& d = est.decomposition;
  const Matrix pca = d.eigvecs * d.leading().cwiseSqrt().asDiagonal();
  CHECK((est.lambda_hat - pca / operator_norm(pca)).norm() <= 1e-14);
  CHECK(est.q_check == Matrix::Identity(3, 3));
}

TEST_CASE("estimation is deterministic") {
  const Dataset ds = small_dataset(5);
  for (const InitScheme& init : std::vector<InitScheme>{RandomInit{}, MultiRandomInit{}, MomInit{}}) {
    const EstimateOptions o = options(EstimatorVariant::Improved2, init);
    const LoadingEstimate a = estimate_loading(ds.observations, 3, o, Stream(9));
    const LoadingEstimate b = estimate_loading(ds.observations, 3, o, Stream(9));
    CHECK(a.lambda_hat == b.lambda_hat);
    CHECK(a.diagnostics.iter_counts == b.diagnostics.iter_counts);
  }
}

TEST_CASE("noiseless data: first improvement equals the base estimator bitwise") {
  const Dataset ds = small_dataset(6, 0.0);
  for (const InitScheme& init : std::vector<InitScheme>{RandomInit{}, MomInit{}}) {
    const LoadingEstimate base = estimate_loading(ds.observations, 3, options(EstimatorVariant::Base, init), Stream(4));
    const LoadingEstimate imp = estimate_loading(ds.observations, 3, options(EstimatorVariant::Improved1, init), Stream(4));
    CHECK(base.lambda_hat == imp.lambda_hat);
    CHECK(base.q_check == imp.q_check);
  }
}

TEST_CASE("infeasible correction: explicit error or recorded fallback") {
  Stream rng(8);
  const ObservationMatrix x(flat_spectrum(4, 12, rng));
  try {
    estimate_loading(x, 2, options(EstimatorVariant::Improved2), Stream(1));
    FAIL("expected a correction-infeasible error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CorrectionInfeasible);
  }
  EstimateOptions o = options(EstimatorVariant::Improved2, MomInit{{}, true});
  o.auto_fallback = true;
  o.skip_rotation = true;  // a flat spectrum has no rotation to find
  const LoadingEstimate est = estimate_loading(x, 2, o, Stream(1));
  CHECK(est.diagnostics.fallback);
  CHECK(est.diagnostics.variant_used == EstimatorVariant::Base);
  CHECK_FALSE(est.decomposition.correction.has_value());

  // p = r leaves no tail to estimate the noise from
  Stream rng2(3);
  const ObservationMatrix square(gaussian_matrix(3, 50, rng2));
  CHECK_THROWS_AS(estimate_loading(square, 3, options(EstimatorVariant::Improved1), Stream(1)), Error);
  EstimateOptions fb = options(EstimatorVariant::Improved1);
  fb.auto_fallback = true;
  CHECK(estimate_loading(square, 3, fb, Stream(1)).diagnostics.fallback);
}

TEST_CASE("rank outside [1, min(p, n)] is rejected") {
  const Dataset ds = small_dataset(7);
  CHECK_THROWS_AS(estimate_loading(ds.observations, 0, options(EstimatorVariant::Base), Stream(1)), Error);
  CHECK_THROWS_AS(estimate_loading(ds.observations, 41, options(EstimatorVariant::Base), Stream(1)), Error);
}

TEST_CASE("factor prediction") {
  SUBCASE("identity rotation and unit spectrum return the scores") {
    PcaDecomposition d;
    d.eigvals = Vector::Ones(2);
    d.rank = 2;
    Stream rng(1);
    d.scores = gaussian_matrix(2, 9, rng);
    CHECK(predict_factors(d, Matrix::Identity(2, 2)) == d.scores);
    CHECK_THROWS_AS(predict_factors(d, Matrix::Identity(3, 3)), Error);
  }
  SUBCASE("Frobenius norm follows the whitening identity") {
    const Dataset ds = small_dataset(9);
    const LoadingEstimate est = estimate_loading(ds.observations, 3, options(EstimatorVariant::Base), Stream(3));
    const Matrix zhat = predict_factors(est.decomposition, est.q_check);
    const double d1 = est.decomposition.eigvals(0);
    CHECK(zhat.norm() == doctest::Approx(std::sqrt(d1 * 600.0 * 3.0)).epsilon(1e-8));
  }
  SUBCASE("noiseless prediction correlates with the true factors") {
    SyntheticConfig c;
    c.n = 20000;
    c.p = 30;
    c.r = 3;
    c.varepsilon2 = 0.0;
    c.seed = 12;
    const Dataset ds = generate_dataset(c);
    const LoadingEstimate est = estimate_loading(ds.observations, 3, options(EstimatorVariant::Base), Stream(5));
    const Matrix zhat = predict_factors(est.decomposition, est.q_check);
    const Matrix& z = ds.truth.factors;
    for (Index i = 0; i < 3; ++i) {
      double best = 0.0;
      for (Index j = 0; j < 3; ++j) {
        const double corr = zhat.row(i).dot(z.row(j)) / (zhat.row(i).norm() * z.row(j).norm());
        best = std::max(best, std::abs(corr));
      }
      CHECK(best >= 0.9);
    }
  }
}
