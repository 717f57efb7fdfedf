#pragma once
#include <cstdint>
#include <vector>

#include "tann/matrix.hpp"

namespace tann {

// Deterministic generator with identical output on every platform:
// xoshiro256** seeded through splitmix64, 53-bit uniform doubles, Box-Muller
// normals (pairwise, second value cached). std::mt19937 + distributions are
// avoided on purpose: libstdc++/libc++ disagree on distribution streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();                        // [0, 1), 53-bit resolution
  double uniform(double lo, double hi);    // [lo, hi)
  double normal();                         // standard normal
  int uniform_int(int n);                  // [0, n)
  void shuffle(std::vector<int>& v);       // Fisher-Yates, back to front
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t s_[4];
  std::uint64_t seed_ = 0;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Stream splitting for per-epoch shuffles and per-fold seeds: decorrelates
// substreams while keeping them a pure function of (seed, index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

// Glorot/Xavier uniform fill: entries in +-sqrt(6/(fan_in+fan_out)).
void fill_glorot(Matrix& m, int fan_in, int fan_out, Rng& rng);
void fill_uniform(Matrix& m, double lo, double hi, Rng& rng);
void fill_normal(Matrix& m, double scale, Rng& rng);

}  // namespace tann
