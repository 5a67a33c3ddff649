// Command-line front end: generate | sample | estimate | eval | diagnose |
// plot-data. Data goes to files, logs to stderr, exit code 0 iff no error.
// Every subcommand writes its resolved configuration next to its outputs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rdhmm/diagnostics.hpp"
#include "rdhmm/errors.hpp"
#include "rdhmm/io.hpp"
#include "rdhmm/moments.hpp"
#include "rdhmm/ngram.hpp"
#include "rdhmm/projection.hpp"
#include "rdhmm/rng.hpp"
#include "rdhmm/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rdhmm;

namespace {

void write_config(const fs::path& dir, const json& config) {
  if (!dir.empty()) fs::create_directories(dir);
  std::ofstream out(dir / "config.json", std::ios::binary);
  out << config.dump(2) << "\n";
}

Eigen::VectorXd dirichlet_column(int k, RandomStream& rng) {
  Eigen::VectorXd x(k);
  for (int i = 0; i < k; ++i) x[i] = -std::log(1.0 - rng.uniform());
  return x / x.sum();
}

Hmm generate_hmm(int m, int v, std::uint64_t seed, const std::string& family,
                 double zero_fraction, int max_rejections) {
  if (family == "identity") return identity_hmm(m, v);
  RandomStream rng(seed);
  if (family == "random-dense") {
    Eigen::MatrixXd t(m, m), o(v, m);
    for (int j = 0; j < m; ++j) t.col(j) = dirichlet_column(m, rng);
    for (int j = 0; j < m; ++j) o.col(j) = dirichlet_column(v, rng);
    return make_hmm(t, o, dirichlet_column(m, rng));
  }
  if (family == "random-sparse") {
    for (int attempt = 0; attempt < max_rejections; ++attempt) {
      Eigen::MatrixXd t(m, m), o(v, m);
      for (int j = 0; j < m; ++j) t.col(j) = dirichlet_column(m, rng);
      for (int j = 0; j < m; ++j) o.col(j) = dirichlet_column(v, rng);
      // zero a fraction of entries, keeping every column alive
      for (auto* mat : {&t, &o}) {
        for (Eigen::Index j = 0; j < mat->cols(); ++j) {
          for (Eigen::Index i = 0; i < mat->rows(); ++i) {
            if (rng.uniform() < zero_fraction) (*mat)(i, j) = 0.0;
          }
          const double s = mat->col(j).sum();
          if (s <= 0.0) {
            (*mat)(static_cast<Eigen::Index>(rng.uniform() * mat->rows()),
                   j) = 1.0;
          } else {
            mat->col(j) /= s;
          }
        }
      }
      Hmm hmm = make_hmm(t, o, dirichlet_column(m, rng));
      if (validate(hmm).ok()) return hmm;
    }
    throw std::runtime_error("rejection limit exceeded while generating a "
                             "sparse chain with full-rank emissions");
  }
  throw std::runtime_error("unknown family: " + family);
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

struct EstimateArgs {
  std::string hmm_path;
  int m = 2;
  std::int64_t n = 100000;
  std::uint64_t seed = 0;
  std::string variant = "reduced";
  bool rescale = false;
  std::string q_mode = "none";
  double epsilon = 0.5;
  double delta = 0.05;
  int t = 2;
  int threads = 1;
  std::string out_dir;
};

Eigen::VectorXd q_from_p1(const Eigen::VectorXd& p1,
                          std::vector<std::string>& notes) {
  Eigen::VectorXd q = Eigen::VectorXd::Ones(p1.size());
  bool padded = false;
  for (Eigen::Index i = 0; i < p1.size(); ++i) {
    if (p1[i] > 0.0) {
      q[i] = 1.0 / std::sqrt(p1[i]);
    } else {
      padded = true;  // no unigram mass: leave the weight neutral
    }
  }
  if (padded) {
    notes.push_back("q padded with 1 for zero-mass unigram entries");
  }
  return q;
}

int cmd_estimate(const EstimateArgs& args) {
  const fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir);
  std::vector<std::string> notes;

  const Hmm hmm = load_hmm(args.hmm_path);
  const int v = hmm.v;
  const TripleSample sample = sample_triples(hmm, args.n, args.seed);
  save_triples(sample, out_dir / "triples.tsv");
  const auto dists = empirical_joint_distributions(sample, v);

  const auto proj_raw = compute_projection(dists.P21, args.m);
  const Projection proj =
      args.rescale ? rescale_projection(proj_raw) : proj_raw;

  if (args.variant == "reduced") {
    const auto ms = empirical_moments(sample, proj.U,
                                      ThirdMomentOrdering::kThirdFirst,
                                      args.threads);
    save_moments(ms, out_dir / "moments.json");
    const auto model = build_model(ms, proj.U);
    save_model(model, out_dir / "model.json");
    auto report = diagnose(ms, args.t, args.epsilon, args.delta);
    report.notes.insert(report.notes.end(), notes.begin(), notes.end());
    save_report(report, out_dir / "report.json");
  } else if (args.variant == "hsu") {
    const auto model = build_hsu_model(dists, proj.U);
    save_hsu_model(model, out_dir / "model.json", &std::cerr);
    // diagnostics still come from the reduced-space moments
    const auto ms = empirical_moments(sample, proj.U,
                                      ThirdMomentOrdering::kThirdFirst,
                                      args.threads);
    save_moments(ms, out_dir / "moments.json");
    auto report = diagnose(ms, args.t, args.epsilon, args.delta);
    report.notes.insert(report.notes.end(), notes.begin(), notes.end());
    save_report(report, out_dir / "report.json");
  } else if (args.variant == "weighted") {
    Eigen::VectorXd q = Eigen::VectorXd::Ones(v);
    if (args.q_mode == "inverse-sqrt-p1") {
      q = q_from_p1(dists.P1, notes);
    } else if (args.q_mode != "none") {
      throw std::runtime_error("unknown q-mode: " + args.q_mode);
    }
    // the projection paired with q, so the likelihood-ratio identity holds
    const Eigen::MatrixXd u_weighted =
        weighted_projection(dists.P21, q, args.m);
    const auto weighted = build_weighted_model(sample, u_weighted, q);
    save_weighted_model(weighted, out_dir / "model.json");
    const auto starred_ms = empirical_moments(
        sample, weighted.model.W, ThirdMomentOrdering::kThirdFirst,
        args.threads);
    save_moments(starred_ms, out_dir / "moments.json");
    auto report = diagnose(starred_ms, args.t, args.epsilon, args.delta);
    for (const auto& w : weighted.warnings) report.notes.push_back(w);
    report.notes.insert(report.notes.end(), notes.begin(), notes.end());
    // the unweighted lambda for comparison against the starred one
    try {
      const auto plain_ms = empirical_moments(sample, proj.U);
      report.notes.push_back("unweighted lambda_hat=" +
                             format_double(lambda_of(plain_ms).value));
    } catch (const SingularSigmaError&) {
      report.notes.push_back("unweighted lambda_hat undefined");
    }
    save_report(report, out_dir / "report.json");
  } else {
    throw std::runtime_error("unknown variant: " + args.variant);
  }

  write_config(out_dir, json{{"subcommand", "estimate"},
                             {"hmm", args.hmm_path},
                             {"m", args.m},
                             {"n", args.n},
                             {"seed", args.seed},
                             {"variant", args.variant},
                             {"rescale", args.rescale},
                             {"q_mode", args.q_mode},
                             {"epsilon", args.epsilon},
                             {"delta", args.delta},
                             {"t", args.t},
                             {"threads", args.threads},
                             {"out_dir", args.out_dir}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-dimension spectral estimation for hidden Markov "
               "models"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write a ground-truth chain");
  int gen_m = 2, gen_v = 2;
  std::uint64_t gen_seed = 0;
  std::string gen_family = "random-dense", gen_out;
  double gen_zero_fraction = 0.5;
  int gen_rejections = 1000;
  gen->add_option("--m", gen_m, "hidden states (>= 2)");
  gen->add_option("--v", gen_v, "observation symbols (>= m)");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--family", gen_family,
                  "identity | random-dense | random-sparse");
  gen->add_option("--zero-fraction", gen_zero_fraction,
                  "fraction of entries zeroed for random-sparse");
  gen->add_option("--rejection-limit", gen_rejections,
                  "max redraws for random-sparse");
  gen->add_option("--out", gen_out, "output .hmm.json path")->required();

  auto* smp = app.add_subcommand("sample", "Draw independent triples");
  std::string smp_hmm, smp_out;
  std::int64_t smp_n = 1000;
  std::uint64_t smp_seed = 0;
  smp->add_option("--hmm", smp_hmm, "chain file")->required();
  smp->add_option("--n", smp_n, "number of triples");
  smp->add_option("--seed", smp_seed, "sampling seed");
  smp->add_option("--out", smp_out, "output TSV path")->required();

  auto* est = app.add_subcommand("estimate",
                                 "Sample, project, and fit a model");
  EstimateArgs ea;
  est->add_option("--hmm", ea.hmm_path, "ground-truth chain file")
      ->required();
  est->add_option("--m", ea.m, "model dimension");
  est->add_option("--n", ea.n, "triples to draw");
  est->add_option("--seed", ea.seed, "sampling seed");
  est->add_option("--variant", ea.variant, "reduced | hsu | weighted");
  est->add_flag("--rescale", ea.rescale, "row-rescale the projection");
  est->add_option("--q-mode", ea.q_mode, "none | inverse-sqrt-p1");
  est->add_option("--epsilon", ea.epsilon, "target relative error");
  est->add_option("--delta", ea.delta, "failure probability");
  est->add_option("--t", ea.t, "sequence length for the guarantees");
  est->add_option("--threads", ea.threads, "worker threads");
  est->add_option("--out-dir", ea.out_dir, "output directory")->required();

  auto* ev = app.add_subcommand("eval", "Compare a model to the oracle");
  std::string ev_hmm, ev_model, ev_out;
  int ev_t = 2;
  ev->add_option("--hmm", ev_hmm, "ground-truth chain file")->required();
  ev->add_option("--model", ev_model, "model file")->required();
  ev->add_option("--t", ev_t, "sequence length");
  ev->add_option("--out-dir", ev_out, "output directory")->required();

  auto* dg = app.add_subcommand(
      "diagnose", "Re-run the checkable conditions on saved artifacts");
  std::string dg_model, dg_sample, dg_out;
  double dg_eps = 0.5, dg_delta = 0.05;
  int dg_t = 2;
  std::int64_t dg_n = -1;
  dg->add_option("--model", dg_model, "model file")->required();
  dg->add_option("--sample", dg_sample, "triples TSV")->required();
  dg->add_option("--epsilon", dg_eps, "target relative error");
  dg->add_option("--delta", dg_delta, "failure probability");
  dg->add_option("--t", dg_t, "sequence length");
  dg->add_option("--n", dg_n, "override sample size");
  dg->add_option("--out-dir", dg_out, "output directory")->required();

  auto* pd = app.add_subcommand("plot-data",
                                "Diagnostic curves from count files");
  std::vector<std::string> pd_counts;
  int pd_v = 0;
  std::string pd_mlist, pd_qmode = "none", pd_out;
  bool pd_rescale = false;
  pd->add_option("--counts", pd_counts, "count files")->required();
  pd->add_option("--v", pd_v, "vocabulary size (incl. OOV)")->required();
  pd->add_option("--m-list", pd_mlist, "comma-separated dimensions");
  pd->add_flag("--rescale", pd_rescale, "row-rescale the projection");
  pd->add_option("--q-mode", pd_qmode, "none | inverse-sqrt-p1");
  pd->add_option("--out", pd_out, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const Hmm hmm = generate_hmm(gen_m, gen_v, gen_seed, gen_family,
                                   gen_zero_fraction, gen_rejections);
      if (!validate(hmm).ok()) {
        throw std::runtime_error("generated chain failed validation");
      }
      save_hmm(hmm, gen_out);
      write_config(fs::path(gen_out).parent_path(),
                   json{{"subcommand", "generate"},
                        {"m", gen_m},
                        {"v", gen_v},
                        {"seed", gen_seed},
                        {"family", gen_family},
                        {"zero_fraction", gen_zero_fraction},
                        {"out", gen_out}});
      std::cerr << "wrote " << gen_out << "\n";
    } else if (*smp) {
      const Hmm hmm = load_hmm(smp_hmm);
      save_triples(sample_triples(hmm, smp_n, smp_seed), smp_out);
      write_config(fs::path(smp_out).parent_path(),
                   json{{"subcommand", "sample"},
                        {"hmm", smp_hmm},
                        {"n", smp_n},
                        {"seed", smp_seed},
                        {"out", smp_out}});
      std::cerr << "wrote " << smp_out << "\n";
    } else if (*est) {
      return cmd_estimate(ea);
    } else if (*ev) {
      const Hmm hmm = load_hmm(ev_hmm);
      const std::string kind = model_kind(ev_model);
      ErrorSummary summary;
      if (kind == "reduced") {
        summary = evaluate_model(hmm, load_model(ev_model), ev_t);
      } else if (kind == "weighted") {
        summary = evaluate_model(hmm, load_weighted_model(ev_model), ev_t);
      } else if (kind == "hsu") {
        summary = evaluate_model(hmm, load_hsu_model(ev_model), ev_t);
      } else {
        throw std::runtime_error("unknown model kind: " + kind);
      }
      fs::create_directories(ev_out);
      write_error_summary_csv(summary, fs::path(ev_out) / "sequences.csv");
      json sj{{"t", summary.t},
              {"enumerated", summary.enumerated},
              {"skipped", summary.skipped},
              {"max_relative_error", summary.max_relative_error},
              {"l1_total", summary.l1_total}};
      if (summary.kl_defined) {
        sj["kl"] = summary.kl;
      } else {
        sj["kl"] = "undefined";
        sj["kl_offending_prefix"] = summary.kl_offending_prefix;
      }
      std::ofstream(fs::path(ev_out) / "summary.json") << sj.dump(2) << "\n";
      write_config(ev_out, json{{"subcommand", "eval"},
                                {"hmm", ev_hmm},
                                {"model", ev_model},
                                {"t", ev_t},
                                {"out_dir", ev_out}});
    } else if (*dg) {
      const std::string kind = model_kind(dg_model);
      Eigen::MatrixXd w;
      if (kind == "reduced") {
        w = load_model(dg_model).W;
      } else if (kind == "weighted") {
        w = load_weighted_model(dg_model).model.W;
      } else {
        throw std::runtime_error(
            "diagnose expects a reduced or weighted model");
      }
      const auto sample =
          load_triples(dg_sample, static_cast<int>(w.rows()));
      const auto ms = empirical_moments(sample, w);
      const auto report = diagnose(ms, dg_t, dg_eps, dg_delta, dg_n);
      fs::create_directories(dg_out);
      save_report(report, fs::path(dg_out) / "report.json");
      write_config(dg_out, json{{"subcommand", "diagnose"},
                                {"model", dg_model},
                                {"sample", dg_sample},
                                {"epsilon", dg_eps},
                                {"delta", dg_delta},
                                {"t", dg_t},
                                {"n", dg_n},
                                {"out_dir", dg_out}});
    } else if (*pd) {
      std::vector<fs::path> paths(pd_counts.begin(), pd_counts.end());
      const auto counts = load_counts(paths, pd_v);
      QMode qm = QMode::kNone;
      if (pd_qmode == "inverse-sqrt-p1") {
        qm = QMode::kInverseSqrtP1;
      } else if (pd_qmode != "none") {
        throw std::runtime_error("unknown q-mode: " + pd_qmode);
      }
      const auto curve =
          lambda_curve(counts, parse_int_list(pd_mlist), pd_rescale, qm);
      std::ofstream out(pd_out, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + pd_out);
      out << curve_csv(curve);
      write_config(fs::path(pd_out).parent_path(),
                   json{{"subcommand", "plot-data"},
                        {"counts", pd_counts},
                        {"v", pd_v},
                        {"m_list", pd_mlist},
                        {"rescale", pd_rescale},
                        {"q_mode", pd_qmode},
                        {"out", pd_out}});
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
