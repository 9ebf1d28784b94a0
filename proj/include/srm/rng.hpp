#pragma once

#include <cstdint>
#include <limits>

namespace srm {

/// Identifies one replicate's random stream: the experiment's master seed and
/// the replicate's index. Two runs with equal SeedPath draw identical values
/// no matter which worker executes the replicate.
struct SeedPath {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate = 0;

  friend bool operator==(const SeedPath&, const SeedPath&) = default;
};

namespace detail {
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Counter-based substream: output k is a bijective mix of (key, k), where the
/// key is derived from the SeedPath. Satisfies UniformRandomBitGenerator.
class Substream {
 public:
  using result_type = std::uint64_t;

  explicit Substream(SeedPath path) noexcept
      : key_(detail::mix64(path.master_seed ^ detail::mix64(path.replicate + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(key_ + counter_);
  }

  /// Uniform on the open interval (0, 1): (k + 1/2) 2^-52 with k < 2^52, so
  /// both u and 1 - u (for u >= 1/2) are exact doubles.
  double uniform() noexcept { return (static_cast<double>((*this)() >> 12) + 0.5) * 0x1p-52; }

  /// Index drawn uniformly from [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept {
    // Lemire's multiply-shift; the bias is < 2^-64 * bound and ignored.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * bound) >> 64);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace srm
