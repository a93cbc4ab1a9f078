#pragma once

#include <cstdint>
#include <limits>

namespace dvarimax {

/// Purpose tags used to split independent streams off a master seed.
enum class Purpose : std::uint64_t {
  Loading = 1,
  LoadingScales = 2,
  Factors = 3,
  NoiseCovariance = 4,
  Noise = 5,
  Dataset = 6,
  Estimate = 7,
  Init = 8,
  Slices = 9,
};

/// Counter-based random stream. Output i is a bijective mix of
/// (key, i), so a stream is fully described by its key and position and
/// child streams can be split off without touching the parent.
///
/// Satisfies UniformRandomBitGenerator, so it plugs into <random>
/// distributions.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) noexcept : key_(mix(key)), counter_(0) {}

  /// Stream for (master seed, purpose, index).
  static Stream derive(std::uint64_t master, Purpose purpose,
                       std::uint64_t index = 0) noexcept;

  /// Independent child of this stream's key; does not advance `*this`.
  Stream child(std::uint64_t tag, std::uint64_t index = 0) const noexcept;
  Stream child(Purpose purpose, std::uint64_t index = 0) const noexcept {
    return child(static_cast<std::uint64_t>(purpose), index);
  }

  result_type operator()() noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t position() const noexcept { return counter_; }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  /// splitmix64 finalizer.
  static std::uint64_t mix(std::uint64_t x) noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace dvarimax
