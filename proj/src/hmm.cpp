#include "rdhmm/hmm.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>

namespace rdhmm {

namespace {

void check_symbol(const Hmm& hmm, int x) {
  if (x < 0 || x >= hmm.v) {
    throw std::out_of_range("symbol index " + std::to_string(x) +
                            " outside [0, " + std::to_string(hmm.v) + ")");
  }
}

}  // namespace

Hmm make_hmm(Eigen::MatrixXd T, Eigen::MatrixXd O, Eigen::VectorXd pi) {
  const int m = static_cast<int>(T.rows());
  const int v = static_cast<int>(O.rows());
  if (T.cols() != m) throw std::invalid_argument("T must be square");
  if (O.cols() != m) throw std::invalid_argument("O must have m columns");
  if (pi.size() != m) throw std::invalid_argument("pi must have m entries");
  Hmm hmm;
  hmm.m = m;
  hmm.v = v;
  hmm.T = std::move(T);
  hmm.O = std::move(O);
  hmm.pi = std::move(pi);
  return hmm;
}

Hmm identity_hmm(int m, int v) {
  if (v < 0) v = m;
  Eigen::MatrixXd O = Eigen::MatrixXd::Zero(v, m);
  O.topLeftCorner(m, m).setIdentity();
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(m);
  pi[0] = 1.0;
  return make_hmm(Eigen::MatrixXd::Identity(m, m), std::move(O), std::move(pi));
}

Hmm uniform_identity_hmm(int m) {
  Hmm hmm = identity_hmm(m);
  hmm.pi.setConstant(1.0 / m);
  return hmm;
}

ValidationReport validate(const Hmm& hmm, double rank_tol) {
  ValidationReport report;
  constexpr double kSumTol = 1e-12;
  auto add = [&report](std::string name, bool pass, std::string detail) {
    report.checks.push_back({std::move(name), pass, std::move(detail)});
  };

  add("shape", hmm.m >= 2 && hmm.v >= hmm.m,
      "m=" + std::to_string(hmm.m) + " v=" + std::to_string(hmm.v));

  auto column_stochastic = [&](const Eigen::MatrixXd& mat, const char* label) {
    bool sums_ok = true, range_ok = true;
    std::ostringstream detail;
    for (Eigen::Index j = 0; j < mat.cols(); ++j) {
      const double s = mat.col(j).sum();
      if (std::abs(s - 1.0) > kSumTol) {
        sums_ok = false;
        detail << label << " column " << j << " sums to " << s << "; ";
      }
    }
    if ((mat.array() < 0.0).any() || (mat.array() > 1.0).any()) {
      range_ok = false;
      detail << label << " has entries outside [0,1]; ";
    }
    add(std::string(label) + "_column_sums", sums_ok, detail.str());
    add(std::string(label) + "_entry_range", range_ok, "");
  };
  column_stochastic(hmm.T, "T");
  column_stochastic(hmm.O, "O");

  const double pi_sum = hmm.pi.sum();
  add("pi_sum", std::abs(pi_sum - 1.0) <= kSumTol,
      "sum=" + std::to_string(pi_sum));
  add("pi_entry_range",
      !((hmm.pi.array() < 0.0).any() || (hmm.pi.array() > 1.0).any()), "");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(hmm.O);
  const double smin = svd.singularValues().minCoeff();
  add("emission_rank", smin > rank_tol,
      "sigma_min(O)=" + std::to_string(smin));

  return report;
}

Eigen::MatrixXd observation_operator(const Hmm& hmm, int x) {
  check_symbol(hmm, x);
  return hmm.T * hmm.O.row(x).asDiagonal();
}

double joint_prob(const Hmm& hmm, std::span<const int> seq) {
  if (seq.empty()) throw std::invalid_argument("empty sequence");
  Eigen::VectorXd state = hmm.pi;
  for (int x : seq) {
    check_symbol(hmm, x);
    // A_x state = T (O_row_x .* state), without forming A_x
    state = hmm.T * (hmm.O.row(x).transpose().array() * state.array()).matrix();
  }
  return state.sum();
}

double log_joint_prob(const Hmm& hmm, std::span<const int> seq) {
  if (seq.empty()) throw std::invalid_argument("empty sequence");
  // Scaled forward recursion: alpha_t(h) = Pr(x_1..x_t, h_t = h),
  // renormalized each step with the log of the scale accumulated.
  double log_scale = 0.0;
  check_symbol(hmm, seq[0]);
  Eigen::VectorXd alpha =
      (hmm.O.row(seq[0]).transpose().array() * hmm.pi.array()).matrix();
  double total = alpha.sum();
  if (total <= 0.0) return -std::numeric_limits<double>::infinity();
  log_scale += std::log(total);
  alpha /= total;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    check_symbol(hmm, seq[i]);
    alpha = (hmm.O.row(seq[i]).transpose().array() *
             (hmm.T * alpha).array()).matrix();
    total = alpha.sum();
    if (total <= 0.0) return -std::numeric_limits<double>::infinity();
    log_scale += std::log(total);
    alpha /= total;
  }
  return log_scale;
}

double conditional_prob(const Hmm& hmm, std::span<const int> prefix, int x) {
  const double denom = joint_prob(hmm, prefix);
  if (denom <= 0.0) {
    throw std::domain_error("conditional on a zero-probability prefix");
  }
  std::vector<int> extended(prefix.begin(), prefix.end());
  extended.push_back(x);
  return joint_prob(hmm, extended) / denom;
}

JointDistributions exact_joint_distributions(const Hmm& hmm) {
  JointDistributions dists;
  dists.v = hmm.v;
  dists.P1 = hmm.O * hmm.pi;
  const Eigen::MatrixXd TDpiOt = hmm.T * hmm.pi.asDiagonal() * hmm.O.transpose();
  dists.P21 = hmm.O * TDpiOt;
  dists.P3x1.reserve(hmm.v);
  for (int x = 0; x < hmm.v; ++x) {
    dists.P3x1.push_back(hmm.O * hmm.T * hmm.O.row(x).asDiagonal() * TDpiOt);
  }
  return dists;
}

}  // namespace rdhmm
