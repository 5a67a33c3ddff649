#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rdhmm/hmm.hpp"
#include "rdhmm/rng.hpp"

namespace rdhmm {

// N independent observation triples, each from a fresh chain start:
// h1 ~ pi, x1 ~ O(.|h1), h2 ~ T(.|h1), x2 ~ O(.|h2), h3 ~ T(.|h2),
// x3 ~ O(.|h3). Triples are i.i.d., not sliding windows of one chain.
struct TripleSample {
  int v = 0;
  std::uint64_t seed = 0;
  std::vector<std::array<int, 3>> triples;
  std::int64_t n() const { return static_cast<std::int64_t>(triples.size()); }
};

// Deterministic under a fixed seed: one RandomStream, six uniforms per
// triple in a fixed order.
TripleSample sample_triples(const Hmm& hmm, std::int64_t n, std::uint64_t seed);

// Draws a length-t observation sequence from the chain (used by the
// synthetic-corpus tooling).
std::vector<int> sample_sequence(const Hmm& hmm, int t, RandomStream& rng);

// Count-normalized P1 (from x1), P21 (from (x2, x1)) and P3x1 (from
// (x3, x2, x1)). Counts are accumulated as integers and divided by N
// once, so two paths counting the same triples produce identical bits.
JointDistributions empirical_joint_distributions(const TripleSample& sample,
                                                 int v);

}  // namespace rdhmm
