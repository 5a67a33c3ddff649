#include "doctest.h"

#include <Eigen/Eigenvalues>

#include "rdhmm/errors.hpp"
#include "rdhmm/moments.hpp"
#include "rdhmm/projection.hpp"
#include "support.hpp"

using namespace rdhmm;
using namespace rdhmm::testing;

TEST_CASE("empirical moments of a single triple") {
  TripleSample sample;
  sample.v = 3;
  sample.triples = {{0, 1, 2}};
  const Eigen::MatrixXd u = Eigen::MatrixXd::Identity(3, 3);
  const auto ms = empirical_moments(sample, u);
  CHECK(ms.mu[0] == 1.0);
  CHECK(ms.mu[1] == 0.0);
  CHECK(ms.sigma(1, 0) == 1.0);
  CHECK(ms.sigma.sum() == 1.0);
  CHECK(ms.kappa[1](2, 0) == 1.0);
  CHECK(ms.kappa[0].sum() == 0.0);
  CHECK(ms.kappa[2].sum() == 0.0);
}

TEST_CASE("identity-chain moments concentrate at the origin cell") {
  const Hmm hmm = identity_hmm(2);
  const auto sample = sample_triples(hmm, 100, 3);
  const auto ms = empirical_moments(sample, Eigen::MatrixXd::Identity(2, 2));
  CHECK(ms.mu[0] == 1.0);
  CHECK(ms.sigma(0, 0) == 1.0);
  CHECK(ms.kappa[0](0, 0) == 1.0);
  CHECK(ms.kappa[1].sum() == 0.0);
}

TEST_CASE("exact moments of the identity chain") {
  const auto ms =
      exact_moments(identity_hmm(2), Eigen::MatrixXd::Identity(2, 2));
  CHECK(ms.mu[0] == 1.0);
  CHECK(ms.mu[1] == 0.0);
  CHECK(ms.sigma(0, 0) == 1.0);
  CHECK(ms.sigma.sum() == 1.0);
}

TEST_CASE("exact moments of hmm_a with the identity map") {
  const auto ms = exact_moments(hmm_a(), Eigen::MatrixXd::Identity(2, 2));
  CHECK(close(ms.mu[0], 0.55, 1e-15));
  CHECK(close(ms.mu[1], 0.45, 1e-15));
}

TEST_CASE("sigma equals the projected bigram matrix") {
  RandomStream rng(5);
  for (int trial = 0; trial < 8; ++trial) {
    const Hmm hmm = random_dense_hmm(2 + trial % 2, 4 + trial % 3, rng);
    const auto dists = exact_joint_distributions(hmm);
    const auto proj = compute_projection(dists.P21, hmm.m);
    const auto ms = exact_moments(hmm, proj.U);
    const Eigen::MatrixXd direct =
        proj.U.transpose() * dists.P21 * proj.U;
    CHECK((ms.sigma - direct).cwiseAbs().maxCoeff() < 1e-12);
    // mu is the projected unigram vector
    CHECK((ms.mu - proj.U.transpose() * dists.P1).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("empirical moments approach exact moments") {
  const Hmm hmm = hmm_a();
  const Eigen::MatrixXd u = Eigen::MatrixXd::Identity(2, 2);
  const auto exact = exact_moments(hmm, u);
  const auto sample = sample_triples(hmm, 1'000'000, 2024);
  const auto emp = empirical_moments(sample, u);
  CHECK((emp.mu - exact.mu).cwiseAbs().maxCoeff() < 0.003);
  CHECK((emp.sigma - exact.sigma).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("kappa contraction is linear") {
  RandomStream rng(17);
  const Hmm hmm = random_dense_hmm(3, 5, rng);
  const auto dists = exact_joint_distributions(hmm);
  const auto proj = compute_projection(dists.P21, 3);
  const auto ms = exact_moments(hmm, proj.U);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd a(3), b(3);
    for (int i = 0; i < 3; ++i) {
      a[i] = rng.uniform() * 2 - 1;
      b[i] = rng.uniform() * 2 - 1;
    }
    const double alpha = rng.uniform() * 4 - 2;
    const double beta = rng.uniform() * 4 - 2;
    const Eigen::MatrixXd lhs = ms.k_of(alpha * a + beta * b);
    const Eigen::MatrixXd rhs = alpha * ms.k_of(a) + beta * ms.k_of(b);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("the two third-moment orderings are transposes") {
  const Hmm hmm = hmm_a();
  const auto sample = sample_triples(hmm, 5000, 8);
  const Eigen::MatrixXd u = Eigen::MatrixXd::Identity(2, 2);
  const auto a = empirical_moments(sample, u, ThirdMomentOrdering::kThirdFirst);
  const auto b = empirical_moments(sample, u, ThirdMomentOrdering::kFirstThird);
  for (int j = 0; j < 2; ++j) {
    CHECK((a.kappa[j] - b.kappa[j].transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("chunked accumulation is independent of thread count") {
  const Hmm hmm = hmm_a();
  const auto sample = sample_triples(hmm, 40'000, 19);
  const Eigen::MatrixXd u = Eigen::MatrixXd::Identity(2, 2);
  const auto one = empirical_moments(sample, u,
                                     ThirdMomentOrdering::kThirdFirst, 1);
  const auto two = empirical_moments(sample, u,
                                     ThirdMomentOrdering::kThirdFirst, 2);
  CHECK((one.mu - two.mu).cwiseAbs().maxCoeff() == 0.0);
  CHECK((one.sigma - two.sigma).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sampled moments match the materialized path") {
  const Hmm hmm = hmm_a();
  const std::int64_t n = 30'000;
  const std::uint64_t seed = 321;
  const auto direct = empirical_moments(sample_triples(hmm, n, seed),
                                        Eigen::MatrixXd::Identity(2, 2));
  const auto streamed =
      sampled_moments(hmm, Eigen::MatrixXd::Identity(2, 2), n, seed, 2);
  CHECK((direct.mu - streamed.mu).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((direct.sigma - streamed.sigma).cwiseAbs().maxCoeff() < 1e-13);
  for (int j = 0; j < 2; ++j) {
    CHECK((direct.kappa[j] - streamed.kappa[j]).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("lambda over explicit entries") {
  SUBCASE("identity sigma gives lambda zero") {
    MomentSet ms;
    ms.m = 2;
    ms.mu = Eigen::Vector2d(1.0, 1.0);
    ms.sigma = Eigen::MatrixXd::Identity(2, 2);
    ms.kappa = {Eigen::MatrixXd::Ones(2, 2), Eigen::MatrixXd::Ones(2, 2)};
    const auto lam = lambda_of(ms);
    CHECK(lam.value == 0.0);
    CHECK(lam.exact_zero);
  }
  SUBCASE("matches a brute-force scan for hmm_a") {
    const auto ms = exact_moments(hmm_a(), Eigen::MatrixXd::Identity(2, 2));
    const auto lam = lambda_of(ms);
    const Eigen::MatrixXd inv = ms.sigma.inverse();
    double expected = ms.mu.cwiseAbs().minCoeff();
    expected = std::min(expected, inv.cwiseAbs().minCoeff());
    for (const auto& s : ms.kappa) {
      expected = std::min(expected, s.cwiseAbs().minCoeff());
    }
    CHECK(lam.value == expected);
    CHECK(lam.value > 0.0);
    CHECK_FALSE(lam.exact_zero);
  }
  SUBCASE("scaling kappa scales lambda when kappa attains the min") {
    auto ms = exact_moments(hmm_a(), Eigen::MatrixXd::Identity(2, 2));
    double kmin = 1e300;
    for (const auto& s : ms.kappa) kmin = std::min(kmin, s.cwiseAbs().minCoeff());
    REQUIRE(lambda_of(ms).value == kmin);  // min attained in kappa here
    for (auto& s : ms.kappa) s *= 0.5;
    CHECK(lambda_of(ms).value == 0.5 * kmin);
  }
  SUBCASE("singular sigma is an explicit error") {
    MomentSet ms;
    ms.m = 2;
    ms.mu = Eigen::Vector2d(1.0, 1.0);
    ms.sigma = Eigen::MatrixXd::Ones(2, 2);
    ms.kappa = {Eigen::MatrixXd::Ones(2, 2), Eigen::MatrixXd::Ones(2, 2)};
    CHECK_THROWS_AS(lambda_of(ms), SingularSigmaError);
    try {
      lambda_of(ms);
    } catch (const SingularSigmaError& e) {
      CHECK(e.sigma_min < 1e-12);
    }
  }
}

TEST_CASE("sigma_min") {
  CHECK(sigma_min(Eigen::MatrixXd::Identity(2, 2)) == 1.0);
  Eigen::MatrixXd d = Eigen::Vector2d(3.0, 0.2).asDiagonal();
  CHECK(close(sigma_min(d), 0.2, 1e-15));

  RandomStream rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd m(3, 3);
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = rng.uniform() * 2 - 1;
    // cross-check against the eigenvalues of M^T M
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.transpose() * m);
    const double expected = std::sqrt(std::max(0.0, es.eigenvalues()[0]));
    CHECK(close(sigma_min(m), expected, 1e-10));
  }
}

TEST_CASE("empirical error decays like the square root of n") {
  const Hmm hmm = hmm_a();
  const Eigen::MatrixXd u = Eigen::MatrixXd::Identity(2, 2);
  const auto exact = exact_moments(hmm, u);
  std::vector<double> log_n, log_err;
  for (const std::int64_t n : {1000, 10'000, 100'000, 1'000'000}) {
    // median over 5 seeds keeps the check stable
    std::vector<double> errs;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto emp = sampled_moments(hmm, u, n, 9000 + seed);
      double e = (emp.mu - exact.mu).cwiseAbs().maxCoeff();
      e = std::max(e, (emp.sigma - exact.sigma).cwiseAbs().maxCoeff());
      for (int j = 0; j < 2; ++j) {
        e = std::max(e, (emp.kappa[j] - exact.kappa[j]).cwiseAbs().maxCoeff());
      }
      errs.push_back(e);
    }
    std::sort(errs.begin(), errs.end());
    log_n.push_back(std::log(static_cast<double>(n)));
    log_err.push_back(std::log(errs[2]));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    sx += log_n[i];
    sy += log_err[i];
    sxx += log_n[i] * log_n[i];
    sxy += log_n[i] * log_err[i];
  }
  const double k = static_cast<double>(log_n.size());
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  CHECK(slope > -0.65);
  CHECK(slope < -0.35);
}
