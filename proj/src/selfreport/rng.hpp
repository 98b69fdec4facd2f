#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace selfreport {

// Identifies one independent random stream. Streams are keyed by what they
// are for rather than by call order, so concurrent execution cannot change
// results.
struct SeedKey {
  std::uint64_t root = 0;
  std::string_view purpose;
  std::string_view context_id;
  std::uint64_t index = 0;
};

std::uint64_t derive_seed(const SeedKey& key);

// Portable variates on top of mt19937_64; the standard distributions are
// implementation-defined, which would break cross-toolchain reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  explicit Rng(const SeedKey& key) : engine_(derive_seed(key)) {}

  std::uint64_t next() { return engine_(); }
  // [0, 1) with 53 bits of resolution.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal();
  double exponential();
  bool bernoulli(double p) { return uniform01() < p; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform01() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace selfreport
