#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rdhmm/hmm.hpp"
#include "rdhmm/moments.hpp"
#include "rdhmm/projection.hpp"

namespace rdhmm {

// Reduced-dimension observable model:
//   c1 = mu,  sigma^T c_inf = mu,  C[j] = kappa[j] sigma^{-1},
//   C(y) = sum_j y_j C[j]
// Sequence probability estimate: c_inf^T C(y_t) ... C(y_1) c1 with
// y_i = W^T delta_{x_i}.
struct SpectralModel {
  Eigen::MatrixXd W;  // v x m observation map the moments were built with
  Eigen::VectorXd c1;
  Eigen::VectorXd c_inf;
  std::vector<Eigen::MatrixXd> C;
  Provenance provenance = Provenance::kExact;
  std::int64_t n = 0;

  int m() const { return static_cast<int>(c1.size()); }
  int v() const { return static_cast<int>(W.rows()); }
  Eigen::MatrixXd c_of(const Eigen::VectorXd& y) const;
};

// Throws SingularSigmaError when sigma_min(sigma) falls below
// tol_scale * max(1, sigma_max).
SpectralModel build_model(const MomentSet& moments, const Eigen::MatrixXd& W,
                          double tol_scale = 1e-10);

// Empirical models can produce values outside [0, 1]; raw keeps the
// signed estimate, clamped is the [0, 1] companion.
struct SequenceProb {
  double raw = 0.0;
  double clamped = 0.0;
};

SequenceProb sequence_prob(const SpectralModel& model, std::span<const int> seq);

// Normalized internal state. The prefix probability is tracked as
// log |.| plus a sign so long sequences survive; signed values cannot go
// through plain log space.
struct BeliefState {
  Eigen::VectorXd c;
  int t = 0;
  double log_abs_prefix = 0.0;
  int sign = 1;

  // Signed unnormalized prefix probability, exp(log_abs_prefix) * sign.
  double prefix_prob() const;
};

BeliefState initial_state(const SpectralModel& model);

struct ConditionalUpdate {
  BeliefState state;
  double conditional = 0.0;  // c_inf^T C(y) c_t; signed for empirical models
};

// One belief update. Throws UnstableConditionalError when the normalizer
// is within zero_tol of 0. A negative normalizer is returned as a
// negative conditional; recovery policy is the caller's.
ConditionalUpdate conditional_update(const SpectralModel& model,
                                     const BeliefState& state, int x,
                                     double zero_tol = 1e-14);

// Baseline observable model with per-symbol operators:
//   b1 = U^T P1,  b_inf^T = P1^T (U^T P21)^+,  B[x] = (U^T P3x1[x]) (U^T P21)^+
struct HsuModel {
  Eigen::MatrixXd U;
  Eigen::VectorXd b1;
  Eigen::VectorXd b_inf;
  std::vector<Eigen::MatrixXd> B;

  int m() const { return static_cast<int>(b1.size()); }
  int v() const { return static_cast<int>(B.size()); }
};

// The pseudo-inverse truncates singular values below
// pinv_tol_scale * sigma_max. Throws RankDeficiencyError when U^T P21 is
// numerically zero (no usable direction at all).
HsuModel build_hsu_model(const JointDistributions& dists,
                         const Eigen::MatrixXd& U,
                         double pinv_tol_scale = 1e-10);

SequenceProb hsu_sequence_prob(const HsuModel& model, std::span<const int> seq);

// Likelihood-ratio variant. With per-symbol weights q > 0 the target is
//   lambda(x_{1:t}) = Pr(x_{1:t}) * Q(x_{1:t})^2,  Q = prod_i q(x_i),
// estimated by the same machinery applied to y* = U^T diag(q)^2 delta_x,
// i.e. plain moments under the map W = diag(q)^2 U.
struct WeightedModel {
  Eigen::VectorXd q;
  SpectralModel model;  // model.W = diag(q)^2 U
  std::vector<std::string> warnings;
};

// Checks |diag(q) U| <= 1 (needed for the concentration guarantee) and
// |diag(q)^2 U| <= 1 (the |y*| bound); violations are recorded as
// warnings, not errors. Throws std::invalid_argument on q <= 0.
WeightedModel build_weighted_model(const Hmm& hmm, const Eigen::MatrixXd& U,
                                   const Eigen::VectorXd& q,
                                   double tol_scale = 1e-10);
WeightedModel build_weighted_model(const TripleSample& sample,
                                   const Eigen::MatrixXd& U,
                                   const Eigen::VectorXd& q,
                                   double tol_scale = 1e-10);
// Sampling counterpart of sampled_moments for large n.
WeightedModel sampled_weighted_model(const Hmm& hmm, const Eigen::MatrixXd& U,
                                     const Eigen::VectorXd& q, std::int64_t n,
                                     std::uint64_t seed, int threads = 1,
                                     double tol_scale = 1e-10);

struct LikelihoodRatio {
  double lambda = 0.0;          // c*_inf^T C*(y*_t) ... C*(y*_1) c*_1
  double q_squared = 0.0;       // Q(x_{1:t})^2
  double recovered_prob = 0.0;  // lambda / Q^2
};

LikelihoodRatio likelihood_ratio(const WeightedModel& model,
                                 std::span<const int> seq);

}  // namespace rdhmm
