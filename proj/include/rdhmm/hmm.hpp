#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rdhmm {

// Column-stochastic convention throughout: distributions are column
// vectors and operators act from the left.
//   T(i, j) = Pr(h_{t+1} = i | h_t = j)        (m x m)
//   O(x, j) = Pr(x_t = x   | h_t = j)          (v x m)
//   pi(i)   = Pr(h_1 = i)                      (m)
struct Hmm {
  int m = 0;  // hidden states, >= 2
  int v = 0;  // observation symbols, >= m
  Eigen::MatrixXd T;
  Eigen::MatrixXd O;
  Eigen::VectorXd pi;
};

// Builds an Hmm and checks shapes only; probabilistic invariants are the
// job of validate().
Hmm make_hmm(Eigen::MatrixXd T, Eigen::MatrixXd O, Eigen::VectorXd pi);

// T = I, O = I (top block when v > m), pi = e0. A deterministic chain:
// state 0 forever, emitting symbol 0.
Hmm identity_hmm(int m, int v = -1);

// Same matrices but uniform pi.
Hmm uniform_identity_hmm(int m);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool ok() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

// Checks column stochasticity of T and O, entry ranges, pi, and
// rank(O) = m via the smallest singular value of O (> rank_tol).
ValidationReport validate(const Hmm& hmm, double rank_tol = 1e-10);

// A_x = T diag(O^T delta_x). Summed over all x this recovers T.
Eigen::MatrixXd observation_operator(const Hmm& hmm, int x);

// Pr(x_1..x_t) = 1^T A_{x_t} ... A_{x_1} pi, evaluated as the product of
// observation operators in linear scale. Prefer log_joint_prob for long
// sequences (t beyond ~50) where this underflows.
double joint_prob(const Hmm& hmm, std::span<const int> seq);

// log Pr via the scaled forward recursion; -inf for zero-probability
// sequences. Independent of joint_prob's operator-product route.
double log_joint_prob(const Hmm& hmm, std::span<const int> seq);

// Pr(x | prefix) = joint(prefix + x) / joint(prefix). Throws on a
// zero-probability prefix.
double conditional_prob(const Hmm& hmm, std::span<const int> prefix, int x);

// Population distributions over observation triples (x1, x2, x3) drawn
// from a fresh chain start:
//   P1(i)       = Pr(x1 = i)
//   P21(i, j)   = Pr(x2 = i, x1 = j)
//   P3x1[x](i, j) = Pr(x3 = i, x2 = x, x1 = j)
struct JointDistributions {
  int v = 0;
  Eigen::VectorXd P1;
  Eigen::MatrixXd P21;
  std::vector<Eigen::MatrixXd> P3x1;
};

JointDistributions exact_joint_distributions(const Hmm& hmm);

}  // namespace rdhmm
