#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace chronofuse {

/// splitmix64 finalizer; used to derive independent seeds from (seed, tag) pairs.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);
std::uint64_t hash_str(const std::string& s);

/// Deterministic RNG: a standard mt19937_64 engine (whose output sequence is
/// pinned by the C++ standard) with hand-rolled distributions, so draws are
/// reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::int64_t uniform_int(std::int64_t n);
  /// Standard normal via Box-Muller (second draw cached).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Gamma(shape, scale) via Marsaglia-Tsang.
  double gamma(double shape, double scale);
  /// Poisson(mean) via Knuth's product method; intended for small means.
  int poisson(double mean);
  bool bernoulli(double p) { return uniform() < p; }

  /// Independent stream derived from this stream's seed (not its position).
  Rng child(std::uint64_t tag) const { return Rng(hash_combine(seed_, tag)); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(static_cast<std::int64_t>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_ = 0;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace chronofuse
