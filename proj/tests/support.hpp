#pragma once

#include <cmath>
#include <vector>

#include "rdhmm/hmm.hpp"
#include "rdhmm/rng.hpp"

namespace rdhmm::testing {

// Two-state chain used all over the suite: sticky transitions, informative
// emissions, uniform start.
inline Hmm hmm_a() {
  Eigen::MatrixXd T(2, 2);
  T << 0.7, 0.3,
       0.3, 0.7;
  Eigen::MatrixXd O(2, 2);
  O << 0.9, 0.2,
       0.1, 0.8;
  Eigen::VectorXd pi(2);
  pi << 0.5, 0.5;
  return make_hmm(T, O, pi);
}

// Dense random HMM: columns of T and O and the start vector are drawn
// from a flat Dirichlet (exponential draws, normalized).
inline Hmm random_dense_hmm(int m, int v, RandomStream& rng) {
  auto dirichlet = [&rng](int k) {
    Eigen::VectorXd x(k);
    for (int i = 0; i < k; ++i) {
      x[i] = -std::log(1.0 - rng.uniform());
    }
    return (x / x.sum()).eval();
  };
  Eigen::MatrixXd T(m, m), O(v, m);
  for (int j = 0; j < m; ++j) {
    T.col(j) = dirichlet(m);
    O.col(j) = dirichlet(v);
  }
  return make_hmm(T, O, dirichlet(m));
}

// All length-t sequences over v symbols in lexicographic order.
inline std::vector<std::vector<int>> all_sequences(int v, int t) {
  std::vector<std::vector<int>> out;
  std::vector<int> seq(t, 0);
  while (true) {
    out.push_back(seq);
    int pos = t - 1;
    while (pos >= 0 && seq[pos] == v - 1) --pos;
    if (pos < 0) break;
    ++seq[pos];
    for (int i = pos + 1; i < t; ++i) seq[i] = 0;
  }
  return out;
}

inline bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol;
}

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace rdhmm::testing
