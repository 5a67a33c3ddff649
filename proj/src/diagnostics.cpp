#include "rdhmm/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rdhmm/errors.hpp"

namespace rdhmm {

namespace {

void check_common(int m, double delta) {
  if (m < 2) throw std::invalid_argument("m must be >= 2");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
}

// (1+eps)^(1/(2t+3)) - 1
double root_gap(double epsilon, int t) {
  return std::pow(1.0 + epsilon, 1.0 / (2 * t + 3)) - 1.0;
}

}  // namespace

double compute_j(int m, double delta, std::int64_t n) {
  check_common(m, delta);
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  return 2.0 * m * std::sqrt(2.0 * std::log(2.0 * m / delta) /
                             static_cast<double>(n));
}

SampleComplexity sample_complexity(int m, double epsilon, double delta, int t,
                                   double lambda, double sigma_m) {
  check_common(m, delta);
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (t < 1) throw std::invalid_argument("t must be >= 1");
  if (lambda < 0.0 || lambda > 1.0 || sigma_m < 0.0 || sigma_m > 1.0) {
    throw std::invalid_argument("lambda and sigma_m must lie in [0, 1]");
  }
  if (lambda == 0.0 || sigma_m == 0.0) {
    return SampleComplexity{true, std::numeric_limits<double>::infinity(),
                            std::numeric_limits<double>::infinity()};
  }
  const double g = root_gap(epsilon, t);
  const double bound = 128.0 * m * m * std::log(2.0 * m / delta) /
                       (g * g * lambda * lambda * sigma_m * sigma_m *
                        sigma_m * sigma_m);
  return SampleComplexity{false, bound, std::ceil(bound)};
}

double epsilon_for(int m, std::int64_t n, double delta, int t, double lambda,
                   double sigma_m) {
  check_common(m, delta);
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (t < 1) throw std::invalid_argument("t must be >= 1");
  if (lambda <= 0.0 || sigma_m <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  const double g = std::sqrt(128.0 * m * m * std::log(2.0 * m / delta) /
                             (static_cast<double>(n) * lambda * lambda *
                              sigma_m * sigma_m * sigma_m * sigma_m));
  return std::pow(1.0 + g, 2 * t + 3) - 1.0;
}

CheckableConditions checkable_conditions(double lambda_hat, double sigma_m_hat,
                                         int m, double delta, std::int64_t n,
                                         double epsilon, int t) {
  check_common(m, delta);
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (t < 1) throw std::invalid_argument("t must be >= 1");
  const double tail = std::sqrt(2.0 * std::log(2.0 * m / delta) /
                                static_cast<double>(n));
  const double g = root_gap(epsilon, t);
  CheckableConditions cond;
  cond.lhs1 = lambda_hat * sigma_m_hat * sigma_m_hat;
  cond.rhs1 = (12.0 * m + 6.0 * m / g) * tail;
  cond.condition1 = cond.lhs1 >= cond.rhs1;
  cond.lhs2 = sigma_m_hat;
  cond.rhs2 = 10.0 * m * tail;
  cond.condition2 = cond.lhs2 >= cond.rhs2;
  return cond;
}

DiagnosticsReport diagnose(const MomentSet& moments, int t, double epsilon,
                           double delta, std::int64_t n_override) {
  DiagnosticsReport report;
  report.m = moments.m;
  report.t = t;
  report.n = n_override >= 0 ? n_override : moments.n;
  report.epsilon = epsilon;
  report.delta = delta;
  if (report.n < 1) {
    throw std::invalid_argument(
        "sample size unknown; exact moments need an explicit n");
  }
  report.sigma_m_hat = sigma_min(moments.sigma);
  report.j = compute_j(moments.m, delta, report.n);
  try {
    const LambdaResult lam = lambda_of(moments);
    report.lambda_hat = lam.value;
    report.lambda_zero_entry = lam.exact_zero;
    if (lam.exact_zero) {
      report.notes.push_back(
          "lambda is exactly zero (structural zero entry); relative-error "
          "guarantees are vacuous");
    }
  } catch (const SingularSigmaError& e) {
    report.lambda_hat = 0.0;
    report.notes.push_back("sigma_hat numerically singular (sigma_min=" +
                           std::to_string(e.sigma_min) +
                           "); lambda_hat undefined, reported as 0");
  }
  const double lam_clamped = std::min(report.lambda_hat, 1.0);
  const double sig_clamped = std::min(report.sigma_m_hat, 1.0);
  if (report.lambda_hat > 1.0 || report.sigma_m_hat > 1.0) {
    report.notes.push_back(
        "lambda_hat or sigma_m_hat exceeds 1; bound evaluated at the "
        "clamped value");
  }
  report.required = sample_complexity(moments.m, epsilon, delta, t,
                                      lam_clamped, sig_clamped);
  report.epsilon_for_n = epsilon_for(moments.m, report.n, delta, t,
                                     lam_clamped, sig_clamped);
  const CheckableConditions cond = checkable_conditions(
      report.lambda_hat, report.sigma_m_hat, moments.m, delta, report.n,
      epsilon, t);
  report.condition1 = cond.condition1;
  report.condition2 = cond.condition2;
  return report;
}

namespace {

// Adapters giving the enumeration one face per model family. joint()
// returns the raw estimate; step() advances the belief machinery and
// reports the estimated conditional for the consumed symbol.
struct SpectralEval {
  const SpectralModel& model;
  static constexpr bool kHasConditionals = true;
  double joint(std::span<const int> seq) const {
    return sequence_prob(model, seq).raw;
  }
  BeliefState init() const { return initial_state(model); }
  std::pair<BeliefState, double> step(const BeliefState& s, int x) const {
    auto up = conditional_update(model, s, x);
    return {std::move(up.state), up.conditional};
  }
};

struct WeightedEval {
  const WeightedModel& model;
  static constexpr bool kHasConditionals = true;
  double joint(std::span<const int> seq) const {
    return likelihood_ratio(model, seq).recovered_prob;
  }
  BeliefState init() const { return initial_state(model.model); }
  std::pair<BeliefState, double> step(const BeliefState& s, int x) const {
    // conditional of the recovered probability: lambda conditional / q_x^2
    auto up = conditional_update(model.model, s, x);
    return {std::move(up.state), up.conditional / (model.q[x] * model.q[x])};
  }
};

struct HsuEval {
  const HsuModel& model;
  static constexpr bool kHasConditionals = false;
  double joint(std::span<const int> seq) const {
    return hsu_sequence_prob(model, seq).raw;
  }
  BeliefState init() const { return BeliefState{}; }
  std::pair<BeliefState, double> step(const BeliefState&, int) const {
    return {BeliefState{}, 0.0};
  }
};

template <typename Eval>
ErrorSummary evaluate_impl(const Hmm& hmm, const Eval& ev, int t,
                           std::int64_t budget) {
  if (t < 1) throw std::invalid_argument("t must be >= 1");
  const double total_seqs = std::pow(static_cast<double>(hmm.v), t);
  if (total_seqs > static_cast<double>(budget)) {
    throw EnumerationBudgetError("enumeration of v^t sequences exceeds the "
                                 "budget of " + std::to_string(budget));
  }

  ErrorSummary summary;
  summary.t = t;
  summary.records.reserve(static_cast<std::size_t>(total_seqs));

  struct Frame {
    Eigen::VectorXd alpha;   // oracle forward state Pr(x_1..x_k, h_k = .)
    BeliefState belief;
    double last_log_ratio;   // ln(oracle cond / est cond) of step k
    bool cond_ok;
    int offense_len;         // prefix length where conditionals first failed
  };
  std::vector<Frame> frames(t + 1);
  frames[0].alpha = hmm.pi;
  frames[0].belief = ev.init();
  frames[0].last_log_ratio = 0.0;
  frames[0].cond_ok = true;
  frames[0].offense_len = 0;

  double kl = 0.0;
  bool kl_ok = true;
  std::vector<int> offending;
  std::vector<int> seq(t, 0);

  // Odometer enumeration; frames are rebuilt from the first changed
  // position only.
  int rebuild_from = 0;
  while (true) {
    for (int k = rebuild_from; k < t; ++k) {
      const int x = seq[k];
      Frame& prev = frames[k];
      Frame& next = frames[k + 1];
      next.alpha = (hmm.O.row(x).transpose().array() *
                    (k == 0 ? prev.alpha : (hmm.T * prev.alpha).eval()).array())
                       .matrix();
      next.cond_ok = prev.cond_ok;
      next.offense_len = prev.offense_len;
      next.last_log_ratio = 0.0;
      if (Eval::kHasConditionals && prev.cond_ok) {
        const double denom = prev.alpha.sum();
        const double oracle_cond = denom > 0.0 ? next.alpha.sum() / denom : 0.0;
        double est_cond = 0.0;
        bool step_ok = true;
        try {
          auto [state, cond] = ev.step(prev.belief, x);
          next.belief = std::move(state);
          est_cond = cond;
        } catch (const UnstableConditionalError&) {
          step_ok = false;
        }
        if (oracle_cond <= 0.0) {
          // zero-probability branch: every leaf below is skipped anyway
          next.cond_ok = false;
          next.offense_len = -1;
        } else if (!step_ok || est_cond <= 0.0) {
          next.cond_ok = false;
          next.offense_len = k + 1;
        } else {
          next.last_log_ratio = std::log(oracle_cond / est_cond);
        }
      }
    }

    const double oracle = frames[t].alpha.sum();
    const double est = ev.joint(seq);
    SequenceRecord rec;
    rec.seq = seq;
    rec.oracle = oracle;
    rec.estimate = est;
    ++summary.enumerated;
    if (oracle < kSkipFloor) {
      rec.skipped = true;
      ++summary.skipped;
    } else {
      rec.rel_err = std::abs(est / oracle - 1.0);
      summary.max_relative_error =
          std::max(summary.max_relative_error, rec.rel_err);
    }
    summary.l1_total += std::abs(est - oracle);
    if (Eval::kHasConditionals && kl_ok && oracle >= kSkipFloor) {
      if (frames[t].cond_ok) {
        kl += oracle * frames[t].last_log_ratio;
      } else {
        kl_ok = false;
        offending.assign(seq.begin(),
                         seq.begin() + std::max(frames[t].offense_len, 0));
      }
    }
    summary.records.push_back(std::move(rec));

    int pos = t - 1;
    while (pos >= 0 && seq[pos] == hmm.v - 1) --pos;
    if (pos < 0) break;
    ++seq[pos];
    for (int i = pos + 1; i < t; ++i) seq[i] = 0;
    rebuild_from = pos;
  }

  if (Eval::kHasConditionals) {
    summary.kl_defined = kl_ok;
    if (kl_ok) {
      summary.kl = kl;
    } else {
      summary.kl_offending_prefix = std::move(offending);
    }
  }
  return summary;
}

}  // namespace

ErrorSummary evaluate_model(const Hmm& hmm, const SpectralModel& model, int t,
                            std::int64_t budget) {
  return evaluate_impl(hmm, SpectralEval{model}, t, budget);
}

ErrorSummary evaluate_model(const Hmm& hmm, const WeightedModel& model, int t,
                            std::int64_t budget) {
  return evaluate_impl(hmm, WeightedEval{model}, t, budget);
}

ErrorSummary evaluate_model(const Hmm& hmm, const HsuModel& model, int t,
                            std::int64_t budget) {
  return evaluate_impl(hmm, HsuEval{model}, t, budget);
}

double eval_relative_error(const Hmm& hmm, const SpectralModel& model, int t,
                           std::int64_t budget) {
  return evaluate_model(hmm, model, t, budget).max_relative_error;
}

double eval_l1(const Hmm& hmm, const SpectralModel& model, int t,
               std::int64_t budget) {
  return evaluate_model(hmm, model, t, budget).l1_total;
}

std::optional<double> eval_kl(const Hmm& hmm, const SpectralModel& model,
                              int t, std::int64_t budget) {
  const ErrorSummary summary = evaluate_model(hmm, model, t, budget);
  if (!summary.kl_defined) return std::nullopt;
  return summary.kl;
}

}  // namespace rdhmm
