#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace mpg {

// Counter-based generator (splitmix64): the state walks a Weyl sequence and
// each output is a bijective hash of the counter, so draws are reproducible
// and O(1)-seekable. Streams derived from one master seed via stream() start
// at hash-scattered counters and are treated as independent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    return Rng(mix(master_seed + kGamma * (stream_id + 1)));
  }

  std::uint64_t next() {
    state_ += kGamma;
    return mix(state_);
  }

  // Uniform on [0, 1) with 53 significant bits; identical across platforms.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Index draw from nonnegative weights summing to ~1; the final index
  // absorbs any rounding drift in the cumulative walk.
  int categorical(std::span<const double> weights) {
    const double u = uniform();
    double acc = 0.0;
    const int last = static_cast<int>(weights.size()) - 1;
    for (int a = 0; a < last; ++a) {
      acc += weights[a];
      if (u < acc) return a;
    }
    return last;
  }

  // Uniform point on the k-simplex (Dirichlet(1,...,1)) via normalized
  // exponentials.
  std::vector<double> simplex_point(int k) {
    std::vector<double> x(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (double& v : x) {
      v = -std::log1p(-uniform());
      sum += v;
    }
    if (sum <= 0.0) {  // all draws hit exactly zero; vanishing probability
      x[0] = 1.0;
      return x;
    }
    for (double& v : x) v /= sum;
    return x;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

}  // namespace mpg
