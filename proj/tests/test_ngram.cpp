#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "rdhmm/errors.hpp"
#include "rdhmm/ngram.hpp"
#include "rdhmm/sampling.hpp"
#include "support.hpp"

using namespace rdhmm;
using namespace rdhmm::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("rdhmm-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

fs::path write_lines(const fs::path& dir, const std::string& name,
                     const std::string& body) {
  const fs::path p = dir / name;
  std::ofstream out(p, std::ios::binary);
  out << body;
  return p;
}

// Dump a triple sample as unigram/bigram/trigram TSV files. Unigrams count
// x1 only, bigrams (x1, x2), trigrams (x1, x2, x3), matching the
// moment-estimator convention.
std::vector<fs::path> corpus_from_triples(const TempDir& dir,
                                          const TripleSample& sample) {
  std::map<std::string, std::uint64_t> uni;
  std::map<std::pair<std::string, std::string>, std::uint64_t> bi;
  std::map<std::tuple<std::string, std::string, std::string>, std::uint64_t>
      tri;
  auto tok = [](int x) { return "w" + std::to_string(x); };
  for (const auto& [x1, x2, x3] : sample.triples) {
    ++uni[tok(x1)];
    ++bi[{tok(x1), tok(x2)}];
    ++tri[{tok(x1), tok(x2), tok(x3)}];
  }
  std::ostringstream u, b, t;
  for (const auto& [k, c] : uni) u << k << '\t' << c << '\n';
  for (const auto& [k, c] : bi)
    b << k.first << '\t' << k.second << '\t' << c << '\n';
  for (const auto& [k, c] : tri)
    t << std::get<0>(k) << '\t' << std::get<1>(k) << '\t' << std::get<2>(k)
      << '\t' << c << '\n';
  return {write_lines(dir.path, "1gram.tsv", u.str()),
          write_lines(dir.path, "2gram.tsv", b.str()),
          write_lines(dir.path, "3gram.tsv", t.str())};
}

}  // namespace

TEST_CASE("top-k vocabulary with OOV folding") {
  TempDir dir;
  const auto p = write_lines(dir.path, "uni.tsv", "a\t10\nb\t5\nc\t1\n");
  const auto counts = load_counts({p}, 3);
  REQUIRE(counts.v == 3);
  CHECK(counts.vocab[0] == "a");
  CHECK(counts.vocab[1] == "b");
  CHECK(counts.vocab[2] == NgramCounts::kOovToken);
  CHECK(counts.unigram[0] == 10);
  CHECK(counts.unigram[1] == 5);
  CHECK(counts.unigram[2] == 1);  // c folded into OOV
  CHECK(counts.total1 == 16);
}

TEST_CASE("ties break lexicographically") {
  TempDir dir;
  const auto p = write_lines(dir.path, "uni.tsv", "zz\t5\naa\t5\nmm\t5\n");
  const auto counts = load_counts({p}, 3);
  CHECK(counts.vocab[0] == "aa");
  CHECK(counts.vocab[1] == "mm");
  CHECK(counts.unigram[2] == 5);  // zz folded
}

TEST_CASE("bigrams with an out-of-vocabulary token fold per position") {
  TempDir dir;
  const auto uni = write_lines(dir.path, "uni.tsv", "a\t10\nb\t5\nc\t1\n");
  const auto bi = write_lines(dir.path, "bi.tsv", "c\ta\t7\n");
  const auto counts = load_counts({uni, bi}, 3);
  const int oov = 2;
  CHECK(counts.bigram.at({oov, 0}) == 7);
  CHECK(counts.total2 == 7);
}

TEST_CASE("malformed rows carry the line number") {
  TempDir dir;
  const auto p =
      write_lines(dir.path, "uni.tsv", "a\t10\nb\tnot_a_number\n");
  try {
    load_counts({p}, 2);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
  const auto p4 = write_lines(dir.path, "bad.tsv", "a\tb\tc\td\te\t1\n");
  CHECK_THROWS_AS(load_counts({p4}, 2), ParseError);
  const auto empty = write_lines(dir.path, "empty.tsv", "");
  CHECK_THROWS_AS(load_counts({empty}, 2), std::runtime_error);
}

TEST_CASE("distributions normalize per order") {
  TempDir dir;
  const auto p = write_lines(dir.path, "uni.tsv", "a\t3\nb\t1\n");
  const auto bi = write_lines(dir.path, "bi.tsv", "a\tb\t4\n");
  const auto tri = write_lines(dir.path, "tri.tsv", "a\tb\ta\t2\n");
  const auto counts = load_counts({p, bi, tri}, 3);
  const auto dists = distributions_from_counts(counts);
  CHECK(dists.P1[0] == 0.75);
  CHECK(dists.P1[1] == 0.25);
  CHECK(dists.P21(1, 0) == 1.0);  // bigram one-hot: Pr(x2=b, x1=a)
  CHECK(dists.P3x1[1](0, 0) == 1.0);
  CHECK(close(dists.P1.sum(), 1.0, 1e-12));
  CHECK(close(dists.P21.sum(), 1.0, 1e-12));
}

TEST_CASE("zero-mass order is an error") {
  TempDir dir;
  const auto p = write_lines(dir.path, "uni.tsv", "a\t3\n");
  const auto counts = load_counts({p}, 2);
  CHECK_THROWS_AS(distributions_from_counts(counts), std::runtime_error);
}

TEST_CASE("oov folding conserves mass per order") {
  const Hmm hmm = hmm_a();
  const auto sample = sample_triples(hmm, 20'000, 64);
  TempDir dir;
  const auto paths = corpus_from_triples(dir, sample);
  // v = 2 keeps one real token and folds the other into OOV
  const auto folded = load_counts(paths, 2);
  CHECK(folded.total1 == 20'000);
  CHECK(folded.total2 == 20'000);
  CHECK(folded.total3 == 20'000);
  std::uint64_t uni_total = 0;
  for (auto c : folded.unigram) uni_total += c;
  CHECK(uni_total == folded.total1);
}

TEST_CASE("count path equals the in-memory empirical path") {
  const Hmm hmm = hmm_a();
  const auto sample = sample_triples(hmm, 30'000, 65);
  TempDir dir;
  const auto paths = corpus_from_triples(dir, sample);
  // v = 3: both chain symbols kept ("w0" < "w1" and symbol 0 is more
  // frequent under hmm_a), OOV slot stays empty
  const auto counts = load_counts(paths, 3);
  REQUIRE(counts.vocab[0] == "w0");
  REQUIRE(counts.vocab[1] == "w1");
  const auto from_counts = distributions_from_counts(counts);
  const auto direct = empirical_joint_distributions(sample, 2);
  // identical integer counts divided by the same totals: exact equality
  CHECK(from_counts.P1.head(2) == direct.P1);
  CHECK(from_counts.P21.topLeftCorner(2, 2) == direct.P21);
  for (int x = 0; x < 2; ++x) {
    CHECK(from_counts.P3x1[x].topLeftCorner(2, 2) == direct.P3x1[x]);
  }
  // moment contraction agrees with the per-triple accumulation
  Eigen::MatrixXd w(3, 2);
  w << 1.0, 0.25,
       -0.5, 1.0,
       0.0, 0.0;
  const auto ms_counts = moments_from_counts(counts, w);
  const auto ms_direct = empirical_moments(sample, w.topRows(2));
  CHECK((ms_counts.mu - ms_direct.mu).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((ms_counts.sigma - ms_direct.sigma).cwiseAbs().maxCoeff() < 1e-12);
  for (int j = 0; j < 2; ++j) {
    CHECK((ms_counts.kappa[j] - ms_direct.kappa[j]).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("lambda curve on a synthetic corpus") {
  RandomStream rng(907);
  const Hmm hmm = random_dense_hmm(3, 8, rng);
  const auto sample = sample_triples(hmm, 60'000, 66);
  TempDir dir;
  const auto paths = corpus_from_triples(dir, sample);
  const auto counts = load_counts(paths, 9);
  const std::vector<int> ms{1, 2, 3};

  const auto curve = lambda_curve(counts, ms, false, QMode::kNone);
  REQUIRE(curve.rows.size() == 3);
  for (const auto& row : curve.rows) {
    CHECK(row.ok);
    CHECK(row.sigma_m_hat > 0.0);
    CHECK(std::isfinite(row.lambda_hat));
  }
  // singular values of a fixed family: sigma_hat(2) <= sigma_hat(1)
  CHECK(curve.rows[1].sigma_m_hat <= curve.rows[0].sigma_m_hat);
  CHECK(curve.slopes_defined);

  SUBCASE("rescaled and weighted variants run too") {
    const auto rescaled = lambda_curve(counts, ms, true, QMode::kNone);
    CHECK(rescaled.rows[1].ok);
    const auto weighted =
        lambda_curve(counts, ms, false, QMode::kInverseSqrtP1);
    CHECK(weighted.rows[1].ok);
  }

  SUBCASE("rank shortfall is a marked row, not a crash") {
    const auto over = lambda_curve(counts, {30}, false, QMode::kNone);
    REQUIRE(over.rows.size() == 1);
    CHECK_FALSE(over.rows[0].ok);
    CHECK(over.rows[0].status == "rank-deficient");
  }
}

TEST_CASE("identity corpus gives an identity-structured curve point") {
  TempDir dir;
  const auto uni = write_lines(dir.path, "uni.tsv", "a\t1\nb\t1\n");
  const auto bi = write_lines(dir.path, "bi.tsv", "a\ta\t1\nb\tb\t1\n");
  const auto tri =
      write_lines(dir.path, "tri.tsv", "a\ta\ta\t1\nb\tb\tb\t1\n");
  const auto counts = load_counts({uni, bi, tri}, 3);
  const auto curve = lambda_curve(counts, {2}, false, QMode::kNone);
  REQUIRE(curve.rows.size() == 1);
  CHECK(curve.rows[0].ok);
  // P21 = I/2 projected to its top-2 singular directions
  CHECK(close(curve.rows[0].sigma_m_hat, 0.5, 1e-12));
}
