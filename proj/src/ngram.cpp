#include "rdhmm/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <Eigen/SVD>

#include "rdhmm/errors.hpp"
#include "rdhmm/projection.hpp"

namespace rdhmm {

namespace {

struct RawCounts {
  std::unordered_map<std::string, std::uint64_t> unigram;
  std::map<std::pair<std::string, std::string>, std::uint64_t> bigram;
  std::map<std::tuple<std::string, std::string, std::string>, std::uint64_t>
      trigram;
};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::uint64_t parse_count(const std::string& field, const std::string& file,
                          long line_no) {
  if (field.empty()) throw ParseError(file, line_no, "empty count field");
  std::uint64_t value = 0;
  for (char c : field) {
    if (c < '0' || c > '9') {
      throw ParseError(file, line_no, "count is not a nonnegative integer: '" +
                                          field + "'");
    }
    value = value * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return value;
}

void parse_file(const std::filesystem::path& path, RawCounts& raw) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() < 2 || fields.size() > 4) {
      throw ParseError(path.string(), line_no,
                       "expected 1-3 tokens plus a count, got " +
                           std::to_string(fields.size()) + " fields");
    }
    for (std::size_t i = 0; i + 1 < fields.size(); ++i) {
      if (fields[i].empty()) {
        throw ParseError(path.string(), line_no, "empty token field");
      }
    }
    const std::uint64_t c =
        parse_count(fields.back(), path.string(), line_no);
    switch (fields.size()) {
      case 2:
        raw.unigram[fields[0]] += c;
        break;
      case 3:
        raw.bigram[{fields[0], fields[1]}] += c;
        break;
      default:
        raw.trigram[{fields[0], fields[1], fields[2]}] += c;
        break;
    }
  }
}

}  // namespace

int NgramCounts::index_of(const std::string& token) const {
  for (int i = 0; i < v; ++i) {
    if (vocab[i] == token) return i;
  }
  return -1;
}

NgramCounts load_counts(const std::vector<std::filesystem::path>& paths,
                        int v) {
  if (v < 2) throw std::invalid_argument("vocabulary size must be >= 2");
  if (paths.empty()) throw std::invalid_argument("no count files given");
  RawCounts raw;
  for (const auto& p : paths) parse_file(p, raw);
  if (raw.unigram.empty() && raw.bigram.empty() && raw.trigram.empty()) {
    throw std::runtime_error("count files contain no data rows");
  }

  // Keep the v-1 most frequent tokens by unigram count; on equal counts
  // the lexicographically smaller token wins. Kept tokens are indexed in
  // that order; the OOV slot is last.
  std::vector<std::pair<std::string, std::uint64_t>> by_count(
      raw.unigram.begin(), raw.unigram.end());
  std::sort(by_count.begin(), by_count.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(by_count.size()) > v - 1) by_count.resize(v - 1);

  NgramCounts counts;
  counts.v = v;
  counts.vocab.reserve(v);
  std::unordered_map<std::string, int> index;
  for (const auto& [token, _] : by_count) {
    index.emplace(token, static_cast<int>(counts.vocab.size()));
    counts.vocab.push_back(token);
  }
  while (static_cast<int>(counts.vocab.size()) < v - 1) {
    // pad unused slots so indices stay dense; these never receive counts
    counts.vocab.push_back("<unused-" + std::to_string(counts.vocab.size()) +
                           ">");
  }
  counts.vocab.push_back(NgramCounts::kOovToken);
  const int oov = v - 1;
  auto fold = [&](const std::string& token) {
    const auto it = index.find(token);
    return it == index.end() ? oov : it->second;
  };

  counts.unigram.assign(v, 0);
  for (const auto& [token, c] : raw.unigram) {
    counts.unigram[fold(token)] += c;
    counts.total1 += c;
  }
  for (const auto& [key, c] : raw.bigram) {
    counts.bigram[{fold(key.first), fold(key.second)}] += c;
    counts.total2 += c;
  }
  for (const auto& [key, c] : raw.trigram) {
    const int x1 = fold(std::get<0>(key));
    const int x2 = fold(std::get<1>(key));
    const int x3 = fold(std::get<2>(key));
    counts.trigram[x2][{x1, x3}] += c;
    counts.total3 += c;
  }
  return counts;
}

JointDistributions distributions_from_counts(const NgramCounts& counts) {
  if (counts.total1 == 0 || counts.total2 == 0 || counts.total3 == 0) {
    throw std::runtime_error("an n-gram order has zero total mass");
  }
  const int v = counts.v;
  JointDistributions dists;
  dists.v = v;
  dists.P1.setZero(v);
  for (int i = 0; i < v; ++i) {
    dists.P1[i] = static_cast<double>(counts.unigram[i]) /
                  static_cast<double>(counts.total1);
  }
  dists.P21.setZero(v, v);
  for (const auto& [key, c] : counts.bigram) {
    dists.P21(key.second, key.first) =
        static_cast<double>(c) / static_cast<double>(counts.total2);
  }
  dists.P3x1.assign(v, Eigen::MatrixXd::Zero(v, v));
  for (const auto& [x2, slice] : counts.trigram) {
    for (const auto& [key, c] : slice) {
      dists.P3x1[x2](key.second, key.first) =
          static_cast<double>(c) / static_cast<double>(counts.total3);
    }
  }
  return dists;
}

Eigen::MatrixXd p21_from_counts(const NgramCounts& counts) {
  if (counts.total2 == 0) {
    throw std::runtime_error("bigram order has zero total mass");
  }
  Eigen::MatrixXd p21 = Eigen::MatrixXd::Zero(counts.v, counts.v);
  for (const auto& [key, c] : counts.bigram) {
    p21(key.second, key.first) =
        static_cast<double>(c) / static_cast<double>(counts.total2);
  }
  return p21;
}

MomentSet moments_from_counts(const NgramCounts& counts,
                              const Eigen::MatrixXd& W) {
  if (W.rows() != counts.v) {
    throw std::invalid_argument("observation map row count != vocabulary");
  }
  if (counts.total1 == 0 || counts.total2 == 0 || counts.total3 == 0) {
    throw std::runtime_error("an n-gram order has zero total mass");
  }
  const int m = static_cast<int>(W.cols());
  MomentSet ms;
  ms.m = m;
  ms.provenance = Provenance::kEmpirical;
  ms.n = static_cast<std::int64_t>(counts.total3);

  ms.mu.setZero(m);
  for (int i = 0; i < counts.v; ++i) {
    if (counts.unigram[i] == 0) continue;
    const double p = static_cast<double>(counts.unigram[i]) /
                     static_cast<double>(counts.total1);
    ms.mu += p * W.row(i).transpose();
  }

  ms.sigma.setZero(m, m);
  for (const auto& [key, c] : counts.bigram) {
    const double p =
        static_cast<double>(c) / static_cast<double>(counts.total2);
    ms.sigma += p * W.row(key.second).transpose() * W.row(key.first);
  }

  // kappa[j] = sum_{x2} W(x2, j) * (W^T slice(x2) W), slice streamed
  ms.kappa.assign(m, Eigen::MatrixXd::Zero(m, m));
  for (const auto& [x2, slice] : counts.trigram) {
    Eigen::MatrixXd contracted = Eigen::MatrixXd::Zero(m, m);
    for (const auto& [key, c] : slice) {
      const double p =
          static_cast<double>(c) / static_cast<double>(counts.total3);
      contracted += p * W.row(key.second).transpose() * W.row(key.first);
    }
    for (int j = 0; j < m; ++j) ms.kappa[j] += W(x2, j) * contracted;
  }
  return ms;
}

namespace {

// Least-squares slope of log(y) vs log(m) over rows with positive y.
bool fit_slope(const std::vector<std::pair<int, double>>& points,
               double& slope) {
  if (points.size() < 2) return false;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [m, y] : points) {
    const double lx = std::log(static_cast<double>(m));
    const double ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(points.size());
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return false;
  slope = (n * sxy - sx * sy) / denom;
  return true;
}

}  // namespace

CurveResult lambda_curve(const NgramCounts& counts,
                         const std::vector<int>& m_values, bool rescale,
                         QMode q_mode, double rank_tol) {
  const Eigen::MatrixXd p21 = p21_from_counts(counts);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(p21, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();

  Eigen::VectorXd q;
  bool q_padded = false;
  if (q_mode == QMode::kInverseSqrtP1) {
    q.resize(counts.v);
    for (int i = 0; i < counts.v; ++i) {
      if (counts.unigram[i] == 0) {
        q[i] = 1.0;  // no unigram mass to normalize by
        q_padded = true;
      } else {
        const double p1 = static_cast<double>(counts.unigram[i]) /
                          static_cast<double>(counts.total1);
        q[i] = 1.0 / std::sqrt(p1);
      }
    }
  }

  CurveResult result;
  std::vector<std::pair<int, double>> lambda_points, sigma_points;
  for (int m : m_values) {
    CurveRow row;
    row.m = m;
    if (m < 1 || m > std::min<int>(counts.v, static_cast<int>(sv.size())) ||
        sv[m - 1] < rank_tol) {
      row.ok = false;
      row.status = "rank-deficient";
      result.rows.push_back(row);
      continue;
    }
    Eigen::MatrixXd U = svd.matrixU().leftCols(m);
    for (int j = 0; j < m; ++j) {
      int arg = 0;
      double best = -1.0;
      for (Eigen::Index i = 0; i < U.rows(); ++i) {
        const double a = std::abs(U(i, j));
        if (a > best) {
          best = a;
          arg = static_cast<int>(i);
        }
      }
      if (U(arg, j) < 0.0) U.col(j) = -U.col(j);
    }
    if (rescale) {
      U = rescale_projection(
              Projection{std::move(U), ProjectionKind::kOrthonormalSvd})
              .U;
    }
    Eigen::MatrixXd W = U;
    if (q_mode == QMode::kInverseSqrtP1) {
      W = (q.array() * q.array()).matrix().asDiagonal() * U;
    }
    try {
      const MomentSet ms = moments_from_counts(counts, W);
      const LambdaResult lam = lambda_of(ms);
      row.lambda_hat = lam.value;
      row.lambda_zero_entry = lam.exact_zero;
      row.sigma_m_hat = sigma_min(ms.sigma);
      row.ok = true;
      row.status = q_padded ? "ok(q-padded)" : "ok";
      if (row.lambda_hat > 0.0) lambda_points.emplace_back(m, row.lambda_hat);
      if (row.sigma_m_hat > 0.0) sigma_points.emplace_back(m, row.sigma_m_hat);
    } catch (const SingularSigmaError&) {
      row.ok = false;
      row.status = "singular-sigma";
    }
    result.rows.push_back(row);
  }
  double ls = 0.0, ss = 0.0;
  const bool l_ok = fit_slope(lambda_points, ls);
  const bool s_ok = fit_slope(sigma_points, ss);
  result.slopes_defined = l_ok && s_ok;
  result.lambda_slope = l_ok ? ls : 0.0;
  result.sigma_slope = s_ok ? ss : 0.0;
  return result;
}

}  // namespace rdhmm
