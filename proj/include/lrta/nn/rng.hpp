#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace lrta::nn {

/// Counter-based generator (SplitMix64 over seed + counter). The output is a
/// pure function of (seed, number of draws so far), which makes every run
/// bit-reproducible independently of the standard library's distributions.
class RngState {
 public:
  explicit RngState(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();
  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }

  /// Independent stream for a named purpose. Does not advance this stream.
  RngState derive(std::string_view purpose) const;
  RngState derive(std::uint64_t tag) const;

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);
/// FNV-1a, used for stable config and schema fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace lrta::nn
