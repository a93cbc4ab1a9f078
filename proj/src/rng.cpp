#include "dvarimax/rng.hpp"

namespace dvarimax {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kTagMul = 0xd1b54a32d192ed03ULL;
constexpr std::uint64_t kIndexMul = 0xaef17502108ef2d9ULL;
}  // namespace

std::uint64_t Stream::mix(std::uint64_t x) noexcept {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Stream Stream::derive(std::uint64_t master, Purpose purpose,
                      std::uint64_t index) noexcept {
  return Stream(master).child(purpose, index);
}

Stream Stream::child(std::uint64_t tag, std::uint64_t index) const noexcept {
  const std::uint64_t a = mix(key_ ^ (tag * kTagMul));
  return Stream(a ^ mix(index * kIndexMul + tag));
}

Stream::result_type Stream::operator()() noexcept {
  return mix(key_ + kGolden * ++counter_);
}

}  // namespace dvarimax
