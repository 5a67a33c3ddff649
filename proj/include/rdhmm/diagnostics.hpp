#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rdhmm/hmm.hpp"
#include "rdhmm/moments.hpp"
#include "rdhmm/spectral.hpp"

namespace rdhmm {

// Concentration radius J = 2m sqrt(2 log(2m/delta) / N).
double compute_j(int m, double delta, std::int64_t n);

// N >= 128 m^2 log(2m/delta) / (((1+eps)^(1/(2t+3)) - 1)^2 Lambda^2 sigma_m^4).
// bound is the raw right-hand side, required_n its ceiling. Lambda or
// sigma_m equal to zero yields unbounded = true rather than a crash.
struct SampleComplexity {
  bool unbounded = false;
  double bound = 0.0;
  double required_n = 0.0;
};

SampleComplexity sample_complexity(int m, double epsilon, double delta, int t,
                                   double lambda, double sigma_m);

// Inverse of the same bound: the epsilon guaranteed by a given N.
// Unbounded inputs (Lambda or sigma_m zero) yield +inf.
double epsilon_for(int m, std::int64_t n, double delta, int t, double lambda,
                   double sigma_m);

// The two data-checkable inequalities certifying the relative-error
// guarantee. lhs/rhs are kept for reporting.
struct CheckableConditions {
  bool condition1 = false;  // lambda_hat sigma_hat^2 >= (12m + 6m/g) sqrt(2 log(2m/delta)/N)
  bool condition2 = false;  // sigma_hat >= 10m sqrt(2 log(2m/delta)/N)
  double lhs1 = 0.0, rhs1 = 0.0;
  double lhs2 = 0.0, rhs2 = 0.0;
};

CheckableConditions checkable_conditions(double lambda_hat, double sigma_m_hat,
                                         int m, double delta, std::int64_t n,
                                         double epsilon, int t);

struct DiagnosticsReport {
  int m = 0;
  int t = 0;
  std::int64_t n = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double lambda_hat = 0.0;
  bool lambda_zero_entry = false;
  double sigma_m_hat = 0.0;
  double j = 0.0;
  SampleComplexity required;   // plug-in bound at (lambda_hat, sigma_m_hat)
  double epsilon_for_n = 0.0;  // guarantee the actual n buys, same plug-in
  bool condition1 = false;
  bool condition2 = false;
  std::vector<std::string> notes;
};

// Assembles the full report from a moment set. A singular sigma_hat is
// reported (lambda undefined, conditions false) rather than thrown.
DiagnosticsReport diagnose(const MomentSet& moments, int t, double epsilon,
                           double delta, std::int64_t n_override = -1);

struct SequenceRecord {
  std::vector<int> seq;
  double oracle = 0.0;
  double estimate = 0.0;      // raw signed estimate
  double rel_err = 0.0;       // |estimate / oracle - 1|, 0 when skipped
  bool skipped = false;       // oracle below the floor
};

struct ErrorSummary {
  int t = 0;
  std::int64_t enumerated = 0;
  std::int64_t skipped = 0;                 // oracle < skip_floor
  double max_relative_error = 0.0;
  double l1_total = 0.0;
  bool kl_defined = false;
  double kl = 0.0;
  std::vector<int> kl_offending_prefix;     // set when kl undefined
  std::vector<SequenceRecord> records;
};

inline constexpr double kSkipFloor = 1e-300;
inline constexpr std::int64_t kEnumerationBudget = 1'000'000;

// Enumerates all v^t sequences once and fills every metric:
// max |est/oracle - 1| over non-skipped sequences, sum |est - oracle|,
// and the conditional KL sum_{x_1:t} Pr(x_1:t) ln(Pr(x_t|prefix) /
// est(x_t|prefix)) with model conditionals from conditional_update.
// A nonpositive model conditional marks the KL undefined and records the
// offending prefix. Throws EnumerationBudgetError when v^t > budget.
ErrorSummary evaluate_model(const Hmm& hmm, const SpectralModel& model, int t,
                            std::int64_t budget = kEnumerationBudget);
// Same metrics on recovered probabilities lambda/Q^2 of a weighted model.
ErrorSummary evaluate_model(const Hmm& hmm, const WeightedModel& model, int t,
                            std::int64_t budget = kEnumerationBudget);
// Joint-probability metrics for the baseline model (no conditional path,
// so no KL).
ErrorSummary evaluate_model(const Hmm& hmm, const HsuModel& model, int t,
                            std::int64_t budget = kEnumerationBudget);

double eval_relative_error(const Hmm& hmm, const SpectralModel& model, int t,
                           std::int64_t budget = kEnumerationBudget);
double eval_l1(const Hmm& hmm, const SpectralModel& model, int t,
               std::int64_t budget = kEnumerationBudget);
// nullopt when some model conditional is nonpositive.
std::optional<double> eval_kl(const Hmm& hmm, const SpectralModel& model, int t,
                              std::int64_t budget = kEnumerationBudget);

}  // namespace rdhmm
