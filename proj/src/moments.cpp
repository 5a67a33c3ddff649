#include "rdhmm/moments.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "rdhmm/errors.hpp"

namespace rdhmm {

namespace {

// Neumaier-compensated accumulator bank with layout
// [mu(m) | sigma(m*m, row-major) | kappa(m slices, row-major)].
struct AccumBank {
  explicit AccumBank(int m)
      : m(m), size(m + m * m + m * m * m), sum(size, 0.0), comp(size, 0.0) {}

  void add(std::size_t idx, double x) {
    double& s = sum[idx];
    const double t = s + x;
    if (std::abs(s) >= std::abs(x)) {
      comp[idx] += (s - t) + x;
    } else {
      comp[idx] += (x - t) + s;
    }
    s = t;
  }

  // Triple contribution: mu += u1, sigma += u2 u1^T,
  // kappa[j] += u2_j * (a u b^T) with (a, b) = (u3, u1) or swapped.
  void add_triple(const double* u1, const double* u2, const double* u3,
                  bool third_first) {
    std::size_t idx = 0;
    for (int i = 0; i < m; ++i) add(idx++, u1[i]);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) add(idx++, u2[i] * u1[j]);
    const double* a = third_first ? u3 : u1;
    const double* b = third_first ? u1 : u3;
    for (int j = 0; j < m; ++j) {
      const double w = u2[j];
      for (int i = 0; i < m; ++i) {
        const double ai = w * a[i];
        for (int k = 0; k < m; ++k) add(idx++, ai * b[k]);
      }
    }
  }

  void merge(const AccumBank& other) {
    for (std::size_t i = 0; i < size; ++i) {
      add(i, other.sum[i] + other.comp[i]);
    }
  }

  MomentSet finalize(std::int64_t n) const {
    MomentSet ms;
    ms.m = m;
    ms.provenance = Provenance::kEmpirical;
    ms.n = n;
    const double inv_n = 1.0 / static_cast<double>(n);
    std::size_t idx = 0;
    ms.mu.resize(m);
    for (int i = 0; i < m; ++i, ++idx)
      ms.mu[i] = (sum[idx] + comp[idx]) * inv_n;
    ms.sigma.resize(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j, ++idx)
        ms.sigma(i, j) = (sum[idx] + comp[idx]) * inv_n;
    ms.kappa.assign(m, Eigen::MatrixXd(m, m));
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k, ++idx)
          ms.kappa[j](i, k) = (sum[idx] + comp[idx]) * inv_n;
    return ms;
  }

  int m;
  std::size_t size;
  std::vector<double> sum, comp;
};

std::vector<Eigen::VectorXd> map_rows(const Eigen::MatrixXd& W) {
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(W.rows());
  for (Eigen::Index i = 0; i < W.rows(); ++i)
    rows.push_back(W.row(i).transpose());
  return rows;
}

// Runs fn(chunk_index) over [0, n_chunks) on the requested number of
// workers. Chunk indices are claimed atomically; results must be stored
// per index so merge order stays fixed.
void run_chunks(std::int64_t n_chunks, int threads,
                const std::function<void(std::int64_t)>& fn) {
  threads = static_cast<int>(
      std::max<std::int64_t>(1, std::min<std::int64_t>(threads, n_chunks)));
  if (threads == 1) {
    for (std::int64_t k = 0; k < n_chunks; ++k) fn(k);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t k = next.fetch_add(1);
        if (k >= n_chunks) break;
        fn(k);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

Eigen::MatrixXd MomentSet::k_of(const Eigen::VectorXd& a) const {
  if (a.size() != m) throw std::invalid_argument("K argument dimension");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) out += a[j] * kappa[j];
  return out;
}

MomentSet empirical_moments(const TripleSample& sample,
                            const Eigen::MatrixXd& W,
                            ThirdMomentOrdering ordering, int threads) {
  if (sample.triples.empty()) throw std::invalid_argument("empty sample");
  if (W.rows() != sample.v) {
    throw std::invalid_argument("observation map row count != vocabulary");
  }
  const int m = static_cast<int>(W.cols());
  const bool third_first = ordering == ThirdMomentOrdering::kThirdFirst;
  const auto rows = map_rows(W);
  const std::int64_t n = sample.n();
  const std::int64_t n_chunks = (n + kMomentChunk - 1) / kMomentChunk;

  std::vector<AccumBank> partial(n_chunks, AccumBank(m));
  run_chunks(n_chunks, threads, [&](std::int64_t k) {
    const std::int64_t lo = k * kMomentChunk;
    const std::int64_t hi = std::min(n, lo + kMomentChunk);
    AccumBank& acc = partial[k];
    for (std::int64_t i = lo; i < hi; ++i) {
      const auto& [x1, x2, x3] = sample.triples[static_cast<std::size_t>(i)];
      acc.add_triple(rows[x1].data(), rows[x2].data(), rows[x3].data(),
                     third_first);
    }
  });
  AccumBank total = std::move(partial[0]);
  for (std::int64_t k = 1; k < n_chunks; ++k) total.merge(partial[k]);
  return total.finalize(n);
}

MomentSet exact_moments(const Hmm& hmm, const Eigen::MatrixXd& W) {
  if (W.rows() != hmm.v) {
    throw std::invalid_argument("observation map row count != vocabulary");
  }
  const int m = static_cast<int>(W.cols());
  MomentSet ms;
  ms.m = m;
  ms.provenance = Provenance::kExact;
  const Eigen::MatrixXd WtO = W.transpose() * hmm.O;       // m x mh
  const Eigen::MatrixXd OtW = hmm.O.transpose() * W;       // mh x m
  const Eigen::MatrixXd TDpiOtW =
      hmm.T * hmm.pi.asDiagonal() * hmm.O.transpose() * W; // mh x m
  ms.mu = WtO * hmm.pi;
  ms.sigma = WtO * TDpiOtW;
  ms.kappa.reserve(m);
  for (int j = 0; j < m; ++j) {
    ms.kappa.push_back(WtO * hmm.T * OtW.col(j).asDiagonal() * TDpiOtW);
  }
  return ms;
}

MomentSet sampled_moments(const Hmm& hmm, const Eigen::MatrixXd& W,
                          std::int64_t n, std::uint64_t seed, int threads) {
  if (n < 1) throw std::invalid_argument("sample size must be >= 1");
  if (W.rows() != hmm.v) {
    throw std::invalid_argument("observation map row count != vocabulary");
  }
  const int m = static_cast<int>(W.cols());
  const int v = hmm.v;
  const auto rows = map_rows(W);
  const std::int64_t n_chunks = (n + kMomentChunk - 1) / kMomentChunk;

  // Sampling tables shared across chunks; each chunk owns its stream.
  CategoricalTable pi_table(hmm.pi);
  std::vector<CategoricalTable> t_cols, o_cols;
  for (int j = 0; j < hmm.m; ++j) {
    t_cols.emplace_back(hmm.T.col(j));
    o_cols.emplace_back(hmm.O.col(j));
  }
  auto draw_triple = [&](RandomStream& rng) {
    const int h1 = pi_table.sample(rng);
    const int x1 = o_cols[h1].sample(rng);
    const int h2 = t_cols[h1].sample(rng);
    const int x2 = o_cols[h2].sample(rng);
    const int h3 = t_cols[h2].sample(rng);
    const int x3 = o_cols[h3].sample(rng);
    return std::array<int, 3>{x1, x2, x3};
  };

  const bool count_path = static_cast<std::int64_t>(v) * v * v <= 32768;
  if (count_path) {
    // Integer triple counts are order-independent, so chunks can be
    // merged freely and the contraction happens once at the end.
    const std::size_t cube = static_cast<std::size_t>(v) * v * v;
    std::vector<std::vector<std::int64_t>> partial(
        n_chunks, std::vector<std::int64_t>(cube, 0));
    run_chunks(n_chunks, threads, [&](std::int64_t k) {
      RandomStream rng(chunk_seed(seed, static_cast<std::uint64_t>(k)));
      const std::int64_t lo = k * kMomentChunk;
      const std::int64_t count = std::min(n, lo + kMomentChunk) - lo;
      auto& c = partial[k];
      for (std::int64_t i = 0; i < count; ++i) {
        const auto [x1, x2, x3] = draw_triple(rng);
        ++c[(static_cast<std::size_t>(x1) * v + x2) * v + x3];
      }
    });
    std::vector<std::int64_t> counts(cube, 0);
    for (const auto& c : partial)
      for (std::size_t i = 0; i < cube; ++i) counts[i] += c[i];
    AccumBank acc(m);
    for (int x1 = 0; x1 < v; ++x1)
      for (int x2 = 0; x2 < v; ++x2)
        for (int x3 = 0; x3 < v; ++x3) {
          const std::int64_t c =
              counts[(static_cast<std::size_t>(x1) * v + x2) * v + x3];
          if (c == 0) continue;
          const double w = static_cast<double>(c);
          const double* u1 = rows[x1].data();
          const double* u2 = rows[x2].data();
          const double* u3 = rows[x3].data();
          std::size_t idx = 0;
          for (int i = 0; i < m; ++i) acc.add(idx++, w * u1[i]);
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) acc.add(idx++, w * u2[i] * u1[j]);
          for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) {
              const double ai = w * u2[j] * u3[i];
              for (int kk = 0; kk < m; ++kk) acc.add(idx++, ai * u1[kk]);
            }
        }
    return acc.finalize(n);
  }

  std::vector<AccumBank> partial(n_chunks, AccumBank(m));
  run_chunks(n_chunks, threads, [&](std::int64_t k) {
    RandomStream rng(chunk_seed(seed, static_cast<std::uint64_t>(k)));
    const std::int64_t lo = k * kMomentChunk;
    const std::int64_t count = std::min(n, lo + kMomentChunk) - lo;
    AccumBank& acc = partial[k];
    for (std::int64_t i = 0; i < count; ++i) {
      const auto [x1, x2, x3] = draw_triple(rng);
      acc.add_triple(rows[x1].data(), rows[x2].data(), rows[x3].data(), true);
    }
  });
  AccumBank total = std::move(partial[0]);
  for (std::int64_t k = 1; k < n_chunks; ++k) total.merge(partial[k]);
  return total.finalize(n);
}

LambdaResult lambda_of(const MomentSet& moments, double tol_scale) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(moments.sigma);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  const double tol = tol_scale * std::max(1.0, smax);
  if (smin <= tol) throw SingularSigmaError(smin, tol);
  const Eigen::MatrixXd sigma_inv = moments.sigma.inverse();
  double lam = moments.mu.cwiseAbs().minCoeff();
  lam = std::min(lam, sigma_inv.cwiseAbs().minCoeff());
  for (const auto& slice : moments.kappa) {
    lam = std::min(lam, slice.cwiseAbs().minCoeff());
  }
  return LambdaResult{lam, lam == 0.0, smin};
}

double sigma_min(const Eigen::MatrixXd& mat) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
  return svd.singularValues().minCoeff();
}

}  // namespace rdhmm
