#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace casunext {

/// Splittable 64-bit RNG (splitmix64 core). Child streams are derived from a
/// parent seed and a string tag, so every layer / sample gets an independent,
/// reproducible stream regardless of draw order elsewhere.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal via Box-Muller (one value per pair of draws).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Independent child stream named by `tag`.
  SplitRng split(std::string_view tag) const {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (char c : tag) {
      h ^= static_cast<std::uint8_t>(c);
      h *= 0x100000001b3ull;
    }
    SplitRng child(state_ ^ h);
    child.next_u64();  // decorrelate from raw seed
    return child;
  }

  SplitRng split(std::string_view tag, std::uint64_t index) const {
    SplitRng child = split(tag);
    child.state_ ^= 0x517cc1b727220a95ull * (index + 1);
    child.next_u64();
    return child;
  }

 private:
  std::uint64_t state_;
};

}  // namespace casunext
