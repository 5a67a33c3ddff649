#include "rdhmm/sampling.hpp"

#include <stdexcept>

namespace rdhmm {

namespace {

// Per-HMM sampling tables; one uniform per categorical draw, fixed order.
struct SamplerTables {
  CategoricalTable pi;
  std::vector<CategoricalTable> t_cols;
  std::vector<CategoricalTable> o_cols;

  explicit SamplerTables(const Hmm& hmm) : pi(hmm.pi) {
    t_cols.reserve(hmm.m);
    o_cols.reserve(hmm.m);
    for (int j = 0; j < hmm.m; ++j) {
      t_cols.emplace_back(hmm.T.col(j));
      o_cols.emplace_back(hmm.O.col(j));
    }
  }

  std::array<int, 3> triple(RandomStream& rng) const {
    const int h1 = pi.sample(rng);
    const int x1 = o_cols[h1].sample(rng);
    const int h2 = t_cols[h1].sample(rng);
    const int x2 = o_cols[h2].sample(rng);
    const int h3 = t_cols[h2].sample(rng);
    const int x3 = o_cols[h3].sample(rng);
    return {x1, x2, x3};
  }
};

}  // namespace

TripleSample sample_triples(const Hmm& hmm, std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample size must be >= 1");
  SamplerTables tables(hmm);
  RandomStream rng(seed);
  TripleSample sample;
  sample.v = hmm.v;
  sample.seed = seed;
  sample.triples.resize(static_cast<std::size_t>(n));
  for (auto& t : sample.triples) t = tables.triple(rng);
  return sample;
}

std::vector<int> sample_sequence(const Hmm& hmm, int t, RandomStream& rng) {
  if (t < 1) throw std::invalid_argument("sequence length must be >= 1");
  SamplerTables tables(hmm);
  std::vector<int> seq(t);
  int h = tables.pi.sample(rng);
  seq[0] = tables.o_cols[h].sample(rng);
  for (int i = 1; i < t; ++i) {
    h = tables.t_cols[h].sample(rng);
    seq[i] = tables.o_cols[h].sample(rng);
  }
  return seq;
}

JointDistributions empirical_joint_distributions(const TripleSample& sample,
                                                 int v) {
  if (sample.triples.empty()) throw std::invalid_argument("empty sample");
  std::vector<std::int64_t> c1(v, 0);
  Eigen::MatrixX<std::int64_t> c21 = Eigen::MatrixX<std::int64_t>::Zero(v, v);
  std::vector<Eigen::MatrixX<std::int64_t>> c3(
      v, Eigen::MatrixX<std::int64_t>::Zero(v, v));
  for (const auto& [x1, x2, x3] : sample.triples) {
    if (x1 < 0 || x1 >= v || x2 < 0 || x2 >= v || x3 < 0 || x3 >= v) {
      throw std::out_of_range("triple symbol outside vocabulary");
    }
    ++c1[x1];
    ++c21(x2, x1);
    ++c3[x2](x3, x1);
  }
  const double n = static_cast<double>(sample.triples.size());
  JointDistributions dists;
  dists.v = v;
  dists.P1.resize(v);
  for (int i = 0; i < v; ++i) dists.P1[i] = static_cast<double>(c1[i]) / n;
  dists.P21 = c21.cast<double>() / n;
  dists.P3x1.reserve(v);
  for (int x = 0; x < v; ++x) dists.P3x1.push_back(c3[x].cast<double>() / n);
  return dists;
}

}  // namespace rdhmm
