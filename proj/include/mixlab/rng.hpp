#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mixlab/errors.hpp"

namespace mixlab {

namespace detail {
// SplitMix64 finalizer.  Statistically solid and cheap; used both as the
// output mixer of the counter RNG and to derive stream keys.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
} // namespace detail

/// Counter-based generator: output k of stream (seed, stream) is
/// mix(key + k*gamma), so any draw is addressable and streams derived from
/// the same seed never collide.  Splitting rule: substream i of (seed, s)
/// is (seed, mix(s) ^ i), applied by `split`.
class Rng {
public:
  Rng() : Rng(0, 0) {}
  Rng(std::uint64_t seed, std::uint64_t stream)
      : key_(detail::mix64(seed ^ detail::mix64(stream + 0x632be59bd9b4e019ull))), counter_(0) {}

  Rng split(std::uint64_t i) const {
    Rng r;
    r.key_ = detail::mix64(key_ ^ detail::mix64(i + 0xd1342543de82ef95ull));
    r.counter_ = 0;
    return r;
  }

  std::uint64_t next_u64() { return detail::mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

  /// Uniform on [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (two uniforms per pair, cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double c = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(c);
    have_spare_ = true;
    return r * std::cos(c);
  }

  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

private:
  std::uint64_t key_;
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Walker alias table for O(1) draws from a finite distribution.
class AliasTable {
public:
  AliasTable() = default;

  explicit AliasTable(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    require(n > 0, errc::precondition, "alias table needs at least one weight");
    double total = 0.0;
    for (double w : weights) {
      require(w >= 0.0 && std::isfinite(w), errc::precondition, "alias weights must be finite and >= 0");
      total += w;
    }
    require(total > 0.0, errc::precondition, "alias weights sum to zero");
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * static_cast<double>(n) / total;
    std::vector<std::size_t> small, large;
    small.reserve(n);
    large.reserve(n);
    for (std::size_t i = 0; i < n; ++i) (scaled[i] < 1.0 ? small : large).push_back(i);
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      small.pop_back();
      const std::size_t l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::size_t i : large) prob_[i] = 1.0;
    for (std::size_t i : small) prob_[i] = 1.0;
  }

  std::size_t size() const { return prob_.size(); }

  std::size_t draw(Rng& rng) const {
    const std::size_t i = static_cast<std::size_t>(rng.below(prob_.size()));
    return rng.uniform() < prob_[i] ? i : alias_[i];
  }

private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

} // namespace mixlab
