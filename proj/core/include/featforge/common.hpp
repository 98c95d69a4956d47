#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace featforge {

/// Raised for problems with input data: unreadable files, malformed CSV,
/// invariants of a Dataset that cannot be satisfied.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seedable generator with labeled, independent substreams.
///
/// Every stochastic component of a run draws from its own substream derived
/// from the run seed and a fixed label, so adding draws in one component never
/// perturbs another.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static std::uint64_t derive(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : label) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return mix(seed ^ mix(h));
  }

  Rng substream(std::string_view label) const { return Rng(derive(seed_, label)); }

  std::uint64_t seed() const { return seed_; }
  engine_type& engine() { return engine_; }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: empty range");
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  std::uint64_t next() { return engine_(); }

 private:
  std::uint64_t seed_;
  engine_type engine_;
};

}  // namespace featforge
