#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rdhmm/hmm.hpp"
#include "rdhmm/moments.hpp"

namespace rdhmm {

// Unigram/bigram/trigram counts over a dense vocabulary of size v whose
// last slot is the out-of-vocabulary token. Bigrams are keyed (x1, x2) in
// reading order; trigrams are sliced by the middle symbol and keyed
// (x1, x3), so projected contractions stream one slice at a time without
// a v^3 array.
struct NgramCounts {
  static constexpr const char* kOovToken = "<OOV>";

  std::vector<std::string> vocab;  // size v, vocab[v-1] == kOovToken
  int v = 0;
  std::vector<std::uint64_t> unigram;
  std::map<std::pair<int, int>, std::uint64_t> bigram;
  std::map<int, std::map<std::pair<int, int>, std::uint64_t>> trigram;
  std::uint64_t total1 = 0, total2 = 0, total3 = 0;

  int index_of(const std::string& token) const;  // -1 when absent
};

// Parses TSV rows `token[\ttoken[\ttoken]]\tcount` from any mix of files.
// The v-1 highest-unigram-count tokens are kept (ties broken by
// lexicographically smaller token); everything else folds into the OOV
// slot in every order. Kept tokens are indexed by descending count, ties
// lexicographic, OOV last. Throws ParseError with the offending line.
NgramCounts load_counts(const std::vector<std::filesystem::path>& paths, int v);

// Counts normalized by their own order totals. Throws on a zero-mass
// order.
JointDistributions distributions_from_counts(const NgramCounts& counts);

// Dense bigram probability matrix oriented as P21(x2, x1), for the SVD.
Eigen::MatrixXd p21_from_counts(const NgramCounts& counts);

// Empirical moments under the map W, contracted directly from sparse
// counts (mu from unigrams, sigma from bigrams, kappa streamed over
// trigram slices).
MomentSet moments_from_counts(const NgramCounts& counts,
                              const Eigen::MatrixXd& W);

enum class QMode { kNone, kInverseSqrtP1 };

struct CurveRow {
  int m = 0;
  double lambda_hat = 0.0;
  bool lambda_zero_entry = false;
  double sigma_m_hat = 0.0;
  bool ok = false;
  std::string status;  // "ok" or the failure reason
};

struct CurveResult {
  std::vector<CurveRow> rows;
  bool slopes_defined = false;
  double lambda_slope = 0.0;  // least-squares log lambda_hat vs log m
  double sigma_slope = 0.0;   // least-squares log sigma_hat  vs log m
};

// For each m: U = first m left singular vectors of the count P21,
// optionally row-rescaled, then weighted by q when q_mode is set
// (q_i = 1/sqrt(P1_i); zero-mass entries get q_i = 1 and a note in the
// row status). Rows where P21's m-th singular value is below rank_tol, or
// where sigma_hat is singular, carry a failure marker instead of values.
CurveResult lambda_curve(const NgramCounts& counts,
                         const std::vector<int>& m_values, bool rescale,
                         QMode q_mode, double rank_tol = 1e-12);

}  // namespace rdhmm
