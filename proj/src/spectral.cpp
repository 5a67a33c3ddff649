#include "rdhmm/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "rdhmm/errors.hpp"

namespace rdhmm {

namespace {

void check_symbols(std::span<const int> seq, int v) {
  for (int x : seq) {
    if (x < 0 || x >= v) {
      throw std::out_of_range("symbol index " + std::to_string(x) +
                              " outside [0, " + std::to_string(v) + ")");
    }
  }
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

Eigen::MatrixXd truncated_pinv(const Eigen::MatrixXd& mat, double tol_scale) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv.maxCoeff() : 0.0;
  if (!(smax > 0.0)) {
    throw RankDeficiencyError("pseudo-inverse of a numerically zero matrix",
                              smax);
  }
  const double cutoff = tol_scale * smax;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cutoff) inv[i] = 1.0 / sv[i];
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace

Eigen::MatrixXd SpectralModel::c_of(const Eigen::VectorXd& y) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m(), m());
  for (int j = 0; j < m(); ++j) out += y[j] * C[j];
  return out;
}

SpectralModel build_model(const MomentSet& moments, const Eigen::MatrixXd& W,
                          double tol_scale) {
  if (W.cols() != moments.m) {
    throw std::invalid_argument("map and moments disagree on m");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(moments.sigma);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  const double tol = tol_scale * std::max(1.0, smax);
  if (smin <= tol) throw SingularSigmaError(smin, tol);

  SpectralModel model;
  model.W = W;
  model.provenance = moments.provenance;
  model.n = moments.n;
  model.c1 = moments.mu;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(moments.sigma.transpose());
  model.c_inf = lu.solve(moments.mu);
  model.C.reserve(moments.m);
  for (const auto& slice : moments.kappa) {
    // C_j = kappa_j Sigma^{-1} via Sigma^T X^T = kappa_j^T
    model.C.push_back(lu.solve(slice.transpose()).transpose());
  }
  return model;
}

SequenceProb sequence_prob(const SpectralModel& model,
                           std::span<const int> seq) {
  check_symbols(seq, model.v());
  Eigen::VectorXd state = model.c1;
  for (int x : seq) {
    state = model.c_of(model.W.row(x).transpose()) * state;
  }
  const double raw = model.c_inf.dot(state);
  return SequenceProb{raw, clamp01(raw)};
}

double BeliefState::prefix_prob() const {
  return sign * std::exp(log_abs_prefix);
}

BeliefState initial_state(const SpectralModel& model) {
  return BeliefState{model.c1, 0, 0.0, 1};
}

ConditionalUpdate conditional_update(const SpectralModel& model,
                                     const BeliefState& state, int x,
                                     double zero_tol) {
  if (x < 0 || x >= model.v()) {
    throw std::out_of_range("symbol index out of range");
  }
  const Eigen::VectorXd next_unnorm =
      model.c_of(model.W.row(x).transpose()) * state.c;
  const double normalizer = model.c_inf.dot(next_unnorm);
  if (std::abs(normalizer) <= zero_tol) {
    throw UnstableConditionalError(normalizer);
  }
  BeliefState next;
  next.c = next_unnorm / normalizer;
  next.t = state.t + 1;
  next.log_abs_prefix = state.log_abs_prefix + std::log(std::abs(normalizer));
  next.sign = normalizer < 0.0 ? -state.sign : state.sign;
  return ConditionalUpdate{std::move(next), normalizer};
}

HsuModel build_hsu_model(const JointDistributions& dists,
                         const Eigen::MatrixXd& U, double pinv_tol_scale) {
  if (U.rows() != dists.v) {
    throw std::invalid_argument("projection row count != vocabulary");
  }
  const Eigen::MatrixXd UtP21 = U.transpose() * dists.P21;
  const Eigen::MatrixXd pinv = truncated_pinv(UtP21, pinv_tol_scale);
  HsuModel model;
  model.U = U;
  model.b1 = U.transpose() * dists.P1;
  model.b_inf = pinv.transpose() * dists.P1;
  model.B.reserve(dists.v);
  for (int x = 0; x < dists.v; ++x) {
    model.B.push_back(U.transpose() * dists.P3x1[x] * pinv);
  }
  return model;
}

SequenceProb hsu_sequence_prob(const HsuModel& model, std::span<const int> seq) {
  check_symbols(seq, model.v());
  Eigen::VectorXd state = model.b1;
  for (int x : seq) state = model.B[x] * state;
  const double raw = model.b_inf.dot(state);
  return SequenceProb{raw, clamp01(raw)};
}

namespace {

Eigen::MatrixXd weighted_map(const Eigen::MatrixXd& U,
                             const Eigen::VectorXd& q,
                             std::vector<std::string>& warnings) {
  if (U.rows() != q.size()) {
    throw std::invalid_argument("weight vector length != vocabulary");
  }
  if ((q.array() <= 0.0).any()) {
    throw std::invalid_argument("weights must be strictly positive");
  }
  const Eigen::MatrixXd u_star = q.asDiagonal() * U;
  const Eigen::MatrixXd w = q.asDiagonal() * u_star;  // diag(q)^2 U
  constexpr double kBoundSlack = 1.0 + 1e-12;
  if (u_star.cwiseAbs().maxCoeff() > kBoundSlack) {
    warnings.push_back("entries of diag(q) U exceed 1; the concentration "
                       "guarantee does not apply");
  }
  if (w.cwiseAbs().maxCoeff() > kBoundSlack) {
    warnings.push_back("projected observations y* exceed 1 in magnitude");
  }
  return w;
}

WeightedModel assemble_weighted(const MomentSet& starred,
                                const Eigen::MatrixXd& w,
                                const Eigen::VectorXd& q,
                                std::vector<std::string> warnings,
                                double tol_scale) {
  WeightedModel model;
  model.q = q;
  model.model = build_model(starred, w, tol_scale);
  model.warnings = std::move(warnings);
  return model;
}

}  // namespace

WeightedModel build_weighted_model(const Hmm& hmm, const Eigen::MatrixXd& U,
                                   const Eigen::VectorXd& q,
                                   double tol_scale) {
  std::vector<std::string> warnings;
  const Eigen::MatrixXd w = weighted_map(U, q, warnings);
  return assemble_weighted(exact_moments(hmm, w), w, q, std::move(warnings),
                           tol_scale);
}

WeightedModel build_weighted_model(const TripleSample& sample,
                                   const Eigen::MatrixXd& U,
                                   const Eigen::VectorXd& q,
                                   double tol_scale) {
  std::vector<std::string> warnings;
  const Eigen::MatrixXd w = weighted_map(U, q, warnings);
  return assemble_weighted(empirical_moments(sample, w), w, q,
                           std::move(warnings), tol_scale);
}

WeightedModel sampled_weighted_model(const Hmm& hmm, const Eigen::MatrixXd& U,
                                     const Eigen::VectorXd& q, std::int64_t n,
                                     std::uint64_t seed, int threads,
                                     double tol_scale) {
  std::vector<std::string> warnings;
  const Eigen::MatrixXd w = weighted_map(U, q, warnings);
  return assemble_weighted(sampled_moments(hmm, w, n, seed, threads), w, q,
                           std::move(warnings), tol_scale);
}

LikelihoodRatio likelihood_ratio(const WeightedModel& model,
                                 std::span<const int> seq) {
  const SequenceProb p = sequence_prob(model.model, seq);
  double qq = 1.0;
  for (int x : seq) qq *= model.q[x] * model.q[x];
  return LikelihoodRatio{p.raw, qq, p.raw / qq};
}

}  // namespace rdhmm
