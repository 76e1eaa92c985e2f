#pragma once

#include <cstdint>
#include <random>

namespace qfc::rng {

// One SplitMix64 step; advances `state` and returns the scrambled output.
std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic substream derivation. Stream k of a root seed is the
// SplitMix64 output of root + (k + 1) * 0x9E3779B97F4A7C15. Every batched
// sampler in this project derives per-item seeds with this rule, so any
// emitted table can be reproduced cell by cell.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

// Seeded draws on top of std::mt19937_64 (whose output sequence is fully
// specified). The Poisson and normal samplers are implemented here instead
// of using std::*_distribution, which is implementation-defined and would
// break the reproducibility contract of emitted tables.
class Generator {
 public:
  explicit Generator(std::uint64_t seed) : engine_(seed) {}

  double uniform();                // [0, 1)
  double normal();                 // mean 0, sd 1 (Box-Muller)
  long long poisson(double mean);  // mean >= 0

 private:
  long long poisson_knuth(double mean);
  long long poisson_ptrs(double mean);

  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace qfc::rng
