#pragma once

// Initialization providers for the deflation loop.

#include <optional>
#include <variant>

#include "dvarimax/linalg.hpp"
#include "dvarimax/rng.hpp"
#include "dvarimax/rotation.hpp"

namespace dvarimax {

struct RandomInit {};

struct MultiRandomInit {
  std::optional<int> draws;  // L; r^2 when unset
};

struct MomInit {
  std::optional<int> slices;  // N; max(16, 4 r^2) when unset
  bool improved = false;      // use Sigma_U = I + Sigma_N in the moment matrix
};

using InitScheme = std::variant<RandomInit, MultiRandomInit, MomInit>;

/// Which second-moment term the method-of-moments matrix subtracts.
/// AsWritten removes G + G^T; LemmaConsistent removes the Gaussian
/// expectation (1/3)(tr(G) I + G + G^T) of the quartic term.
enum class MomSubtraction { AsWritten, LemmaConsistent };

inline int default_draws(Index r) { return static_cast<int>(r * r); }
inline int default_slices(Index r) {
  return static_cast<int>(std::max<Index>(16, 4 * r * r));
}

/// I_r - sum_i Q_i Q_i^T over the columns of `prior` (r x k).
Matrix complement_projector(const Matrix& prior, Index r);

/// Orthonormal basis (r x (r - k)) of the orthogonal complement of the
/// prior columns, from the trailing left singular vectors of `prior`.
Matrix complement_basis(const Matrix& prior, Index r);

/// normalize(V_(-k) g) with g ~ N(0, I_{r-k}).
Vector random_init(const Matrix& prior, Index r, Stream& rng);

/// Best of `draws` random_init candidates by objective value on `scores`
/// (lowest draw index on ties).
Vector multi_random_init(const Matrix& scores, const Matrix& prior, int draws,
                         Stream& rng);

/// Precomputed (1/(3n)) sum_t vec(U_t U_t^T) vec(U_t U_t^T)^T, so that
/// each slice of the moment matrix costs O(r^4) instead of O(r^2 n).
class FourthMomentTensor {
 public:
  explicit FourthMomentTensor(const Matrix& scores);

  /// (1/(3n)) sum_t U_t U_t^T (U_t^T G U_t).
  Matrix contract(const Matrix& g) const;
  Index dim() const noexcept { return r_; }

 private:
  Index r_;
  Matrix tensor_;  // r^2 x r^2
};

/// Method-of-moments slice M(G). `sigma_u` is required when `improved`.
Matrix mom_matrix(const FourthMomentTensor& moments, const Matrix& g,
                  bool improved, const std::optional<Matrix>& sigma_u,
                  MomSubtraction subtraction = MomSubtraction::AsWritten);
Matrix mom_matrix(const Matrix& scores, const Matrix& g, bool improved,
                  const std::optional<Matrix>& sigma_u,
                  MomSubtraction subtraction = MomSubtraction::AsWritten);

struct MomSelection {
  Vector q0;
  int slice = 0;      // selected slice index (0-based)
  double gap = 0.0;   // sigma_1 - sigma_2 of the selected slice
  std::vector<double> gaps;  // gap of every slice
};

/// Draws `slices` Gaussian matrices from sub-streams of `rng`, projects each
/// moment slice onto the complement of `prior`, and returns the leading
/// left singular vector of the slice with the widest top-two singular gap.
MomSelection mom_init(const FourthMomentTensor& moments, const Matrix& prior,
                      int slices, bool improved,
                      const std::optional<Matrix>& sigma_u, const Stream& rng,
                      MomSubtraction subtraction = MomSubtraction::AsWritten);

/// Provider bundling a scheme with its data for use with deflate(). Column
/// k draws from rng.child(Purpose::Init, k).
InitProvider make_init_provider(const InitScheme& scheme, const Matrix& scores,
                                const Stream& rng,
                                const std::optional<Matrix>& sigma_n = {},
                                MomSubtraction subtraction =
                                    MomSubtraction::AsWritten);

}  // namespace dvarimax
