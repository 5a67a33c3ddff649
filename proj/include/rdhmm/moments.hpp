#pragma once

#include <cstdint>
#include <vector>

#include "rdhmm/hmm.hpp"
#include "rdhmm/sampling.hpp"

namespace rdhmm {

enum class Provenance { kExact, kEmpirical };

// First three moments of the projected observation y_t = W^T delta_{x_t}
// for some v x m observation map W (an orthonormal projection, a
// row-rescaled one, or a weighted diag(q)^2 U).
//   mu    = E y1                                  (m)
//   sigma = E y2 y1^T                             (m x m)
//   kappa[j] = slice K(e_j), so K(a) = sum_j a_j kappa[j]
struct MomentSet {
  int m = 0;
  Provenance provenance = Provenance::kExact;
  std::int64_t n = 0;  // sample size when empirical
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  std::vector<Eigen::MatrixXd> kappa;

  // K(a) = sum_j a_j kappa[j]; linear in a.
  Eigen::MatrixXd k_of(const Eigen::VectorXd& a) const;
};

// Orientation of the third-moment slices. kThirdFirst is the working
// definition, kappa[j] = E[y3 y1^T (y2)_j]; kFirstThird is the transposed
// alternative kappa[j] = E[y1 y3^T (y2)_j], kept switchable for
// comparison tests only.
enum class ThirdMomentOrdering { kThirdFirst, kFirstThird };

// Per-triple accumulation with Neumaier-compensated sums, merged over
// fixed-size chunks (kMomentChunk triples) in chunk order, so results are
// identical for any thread count.
inline constexpr std::int64_t kMomentChunk = 1 << 20;

MomentSet empirical_moments(const TripleSample& sample,
                            const Eigen::MatrixXd& W,
                            ThirdMomentOrdering ordering =
                                ThirdMomentOrdering::kThirdFirst,
                            int threads = 1);

// Population moments:
//   mu    = W^T O pi
//   sigma = W^T O T diag(pi) O^T W
//   kappa[j] = W^T O T diag(O^T W e_j) T diag(pi) O^T W
MomentSet exact_moments(const Hmm& hmm, const Eigen::MatrixXd& W);

// Samples n triples and accumulates moments without materializing them.
// Chunk k of kMomentChunk triples draws from chunk_seed(seed, k); with a
// single chunk this coincides with empirical_moments over
// sample_triples(hmm, n, seed). The concatenated stream is
// distribution-identical, not sequence-identical, to one long stream.
// For tiny vocabularies the chunk is first reduced to an exact integer
// count cube and contracted afterwards; draws are identical either way.
MomentSet sampled_moments(const Hmm& hmm, const Eigen::MatrixXd& W,
                          std::int64_t n, std::uint64_t seed,
                          int threads = 1);

// min over { |mu_i|, |(sigma^-1)_ij|, |kappa_ijk| }. The inverse is
// materialized here (and only here) after checking
// sigma_min > tol_scale * max(1, sigma_max); failing that throws
// SingularSigmaError. exact_zero flags structural zeros that force the
// minimum to 0.
struct LambdaResult {
  double value = 0.0;
  bool exact_zero = false;
  double sigma_min = 0.0;
};

LambdaResult lambda_of(const MomentSet& moments, double tol_scale = 1e-10);

// Smallest singular value.
double sigma_min(const Eigen::MatrixXd& mat);

}  // namespace rdhmm
