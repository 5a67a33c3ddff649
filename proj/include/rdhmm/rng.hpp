#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace rdhmm {

// All randomness in the library flows through this stream. It wraps
// std::mt19937_64 (fully specified by the standard, so sequences are
// identical across platforms) and converts raw 64-bit draws to doubles
// with the usual 53-bit-mantissa scaling instead of
// uniform_real_distribution, whose output is implementation-defined.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  // Uniform draw in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  std::uint64_t raw() { return gen_(); }

private:
  std::mt19937_64 gen_;
};

// Seed for the k-th independent sub-stream of a base seed. Chunk 0 reuses
// the base seed so single-chunk runs coincide with the plain stream;
// later chunks are decorrelated with a splitmix64 round.
inline std::uint64_t chunk_seed(std::uint64_t base, std::uint64_t chunk) {
  if (chunk == 0) return base;
  std::uint64_t z = base + chunk * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Inverse-CDF sampler over a fixed discrete distribution.
class CategoricalTable {
public:
  CategoricalTable() = default;
  explicit CategoricalTable(const Eigen::VectorXd& probs) {
    cdf_.resize(probs.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      cdf_[i] = acc;
    }
    cdf_[probs.size() - 1] = 1.0;  // guard against accumulated round-off
  }

  int sample(RandomStream& rng) const {
    const double u = rng.uniform();
    int lo = 0, hi = static_cast<int>(cdf_.size()) - 1;
    while (lo < hi) {
      const int mid = (lo + hi) / 2;
      if (u < cdf_[mid]) hi = mid; else lo = mid + 1;
    }
    return lo;
  }

private:
  Eigen::VectorXd cdf_;
};

}  // namespace rdhmm
