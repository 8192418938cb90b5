#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace fedgraph {

/// Mixes a 64-bit value (SplitMix64 finalizer).
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a stream key from a master seed and a list of stream coordinates,
/// e.g. (seed, device, iteration). Equal inputs give equal keys on every
/// platform; the order of the coordinates matters.
std::uint64_t stream_key(std::uint64_t master,
                         std::initializer_list<std::uint64_t> coords) noexcept;

/// xoshiro256** generator with portable uniform/normal transforms.
///
/// Streams are keyed rather than shared: every device/iteration pair gets its
/// own generator built from stream_key(), so results never depend on the
/// order in which workers consume random numbers.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept;

  static Rng keyed(std::uint64_t master,
                   std::initializer_list<std::uint64_t> coords) noexcept {
    return Rng(stream_key(master, coords));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept { return next(); }
  std::uint64_t next() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }
  /// Uniform integer in [0, n), n > 0 (unbiased rejection sampling).
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Draws k distinct indices from [0, n) uniformly (partial Fisher-Yates).
/// `scratch` is reused across calls to avoid reallocations; the result is
/// written to `out` in draw order.
void sample_without_replacement(Rng& rng, std::size_t n, std::size_t k,
                                std::vector<int>& scratch,
                                std::vector<int>& out);

}  // namespace fedgraph
