#include "rdhmm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rdhmm/errors.hpp"

namespace rdhmm {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& mat) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < mat.cols(); ++j) row.push_back(mat(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows,
                                 Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw std::runtime_error("matrix row count mismatch");
  }
  Eigen::MatrixXd mat(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::runtime_error("matrix column count mismatch");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      mat(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return mat;
}

json vector_to_json(const Eigen::VectorXd& vec) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < vec.size(); ++i) arr.push_back(vec[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd vec(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) vec[i] = j[i].get<double>();
  return vec;
}

json slices_to_json(const std::vector<Eigen::MatrixXd>& slices) {
  json arr = json::array();
  for (const auto& s : slices) arr.push_back(matrix_to_json(s));
  return arr;
}

std::vector<Eigen::MatrixXd> slices_from_json(const json& j,
                                              Eigen::Index rows,
                                              Eigen::Index cols) {
  std::vector<Eigen::MatrixXd> slices;
  slices.reserve(j.size());
  for (const auto& s : j) slices.push_back(matrix_from_json(s, rows, cols));
  return slices;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  in >> j;
  return j;
}

const char* provenance_name(Provenance p) {
  return p == Provenance::kExact ? "exact" : "empirical";
}

Provenance provenance_from(const std::string& s) {
  if (s == "exact") return Provenance::kExact;
  if (s == "empirical") return Provenance::kEmpirical;
  throw std::runtime_error("unknown provenance: " + s);
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void save_hmm(const Hmm& hmm, const std::filesystem::path& path) {
  json j;
  j["m"] = hmm.m;
  j["v"] = hmm.v;
  j["T"] = matrix_to_json(hmm.T);
  j["O"] = matrix_to_json(hmm.O);
  j["pi"] = vector_to_json(hmm.pi);
  write_file(path, j.dump(2) + "\n");
}

Hmm load_hmm(const std::filesystem::path& path) {
  const json j = read_json(path);
  const int m = j.at("m").get<int>();
  const int v = j.at("v").get<int>();
  return make_hmm(matrix_from_json(j.at("T"), m, m),
                  matrix_from_json(j.at("O"), v, m),
                  vector_from_json(j.at("pi")));
}

void save_triples(const TripleSample& sample,
                  const std::filesystem::path& path) {
  std::ostringstream out;
  for (const auto& [x1, x2, x3] : sample.triples) {
    out << x1 << '\t' << x2 << '\t' << x3 << '\n';
  }
  write_file(path, out.str());
}

TripleSample load_triples(const std::filesystem::path& path, int v) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  TripleSample sample;
  sample.v = v;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::array<int, 3> t{};
    if (!(ls >> t[0] >> t[1] >> t[2])) {
      throw ParseError(path.string(), line_no, "expected three integers");
    }
    for (int x : t) {
      if (x < 0 || x >= v) {
        throw ParseError(path.string(), line_no, "symbol outside vocabulary");
      }
    }
    sample.triples.push_back(t);
  }
  if (sample.triples.empty()) {
    throw std::runtime_error("triple file is empty: " + path.string());
  }
  return sample;
}

void save_moments(const MomentSet& moments, const std::filesystem::path& path) {
  json j;
  j["m"] = moments.m;
  j["provenance"] = provenance_name(moments.provenance);
  j["n"] = moments.n;
  j["mu"] = vector_to_json(moments.mu);
  j["sigma"] = matrix_to_json(moments.sigma);
  j["kappa"] = slices_to_json(moments.kappa);
  write_file(path, j.dump(2) + "\n");
}

MomentSet load_moments(const std::filesystem::path& path) {
  const json j = read_json(path);
  MomentSet ms;
  ms.m = j.at("m").get<int>();
  ms.provenance = provenance_from(j.at("provenance").get<std::string>());
  ms.n = j.at("n").get<std::int64_t>();
  ms.mu = vector_from_json(j.at("mu"));
  ms.sigma = matrix_from_json(j.at("sigma"), ms.m, ms.m);
  ms.kappa = slices_from_json(j.at("kappa"), ms.m, ms.m);
  return ms;
}

namespace {

json spectral_to_json(const SpectralModel& model) {
  json j;
  j["m"] = model.m();
  j["v"] = model.v();
  j["W"] = matrix_to_json(model.W);
  j["c1"] = vector_to_json(model.c1);
  j["c_inf"] = vector_to_json(model.c_inf);
  j["C"] = slices_to_json(model.C);
  j["provenance"] = provenance_name(model.provenance);
  j["n"] = model.n;
  return j;
}

SpectralModel spectral_from_json(const json& j) {
  SpectralModel model;
  const int m = j.at("m").get<int>();
  const int v = j.at("v").get<int>();
  model.W = matrix_from_json(j.at("W"), v, m);
  model.c1 = vector_from_json(j.at("c1"));
  model.c_inf = vector_from_json(j.at("c_inf"));
  model.C = slices_from_json(j.at("C"), m, m);
  model.provenance = provenance_from(j.at("provenance").get<std::string>());
  model.n = j.at("n").get<std::int64_t>();
  return model;
}

}  // namespace

void save_model(const SpectralModel& model, const std::filesystem::path& path) {
  json j = spectral_to_json(model);
  j["kind"] = "reduced";
  write_file(path, j.dump(2) + "\n");
}

SpectralModel load_model(const std::filesystem::path& path) {
  const json j = read_json(path);
  if (j.at("kind").get<std::string>() != "reduced") {
    throw std::runtime_error("not a reduced model file: " + path.string());
  }
  return spectral_from_json(j);
}

void save_hsu_model(const HsuModel& model, const std::filesystem::path& path,
                    std::ostream* warn_stream) {
  const double entries = static_cast<double>(model.v()) * model.m() * model.m();
  if (warn_stream && entries > 1e7) {
    *warn_stream << "warning: serializing " << format_double(entries)
                 << " tensor entries (v*m^2 > 1e7)\n";
  }
  json j;
  j["kind"] = "hsu";
  j["m"] = model.m();
  j["v"] = model.v();
  j["U"] = matrix_to_json(model.U);
  j["b1"] = vector_to_json(model.b1);
  j["b_inf"] = vector_to_json(model.b_inf);
  j["B"] = slices_to_json(model.B);
  write_file(path, j.dump(2) + "\n");
}

HsuModel load_hsu_model(const std::filesystem::path& path) {
  const json j = read_json(path);
  if (j.at("kind").get<std::string>() != "hsu") {
    throw std::runtime_error("not a baseline model file: " + path.string());
  }
  HsuModel model;
  const int m = j.at("m").get<int>();
  const int v = j.at("v").get<int>();
  model.U = matrix_from_json(j.at("U"), v, m);
  model.b1 = vector_from_json(j.at("b1"));
  model.b_inf = vector_from_json(j.at("b_inf"));
  model.B = slices_from_json(j.at("B"), m, m);
  return model;
}

void save_weighted_model(const WeightedModel& model,
                         const std::filesystem::path& path) {
  json j = spectral_to_json(model.model);
  j["kind"] = "weighted";
  j["q"] = vector_to_json(model.q);
  j["warnings"] = model.warnings;
  write_file(path, j.dump(2) + "\n");
}

WeightedModel load_weighted_model(const std::filesystem::path& path) {
  const json j = read_json(path);
  if (j.at("kind").get<std::string>() != "weighted") {
    throw std::runtime_error("not a weighted model file: " + path.string());
  }
  WeightedModel model;
  model.model = spectral_from_json(j);
  model.q = vector_from_json(j.at("q"));
  model.warnings = j.value("warnings", std::vector<std::string>{});
  return model;
}

std::string model_kind(const std::filesystem::path& path) {
  return read_json(path).at("kind").get<std::string>();
}

void save_report(const DiagnosticsReport& report,
                 const std::filesystem::path& path) {
  json j;
  j["m"] = report.m;
  j["t"] = report.t;
  j["n"] = report.n;
  j["epsilon"] = report.epsilon;
  j["delta"] = report.delta;
  j["lambda_hat"] = report.lambda_hat;
  j["lambda_zero_entry"] = report.lambda_zero_entry;
  j["sigma_m_hat"] = report.sigma_m_hat;
  j["j"] = report.j;
  j["required_n_unbounded"] = report.required.unbounded;
  j["required_n"] = report.required.unbounded
                        ? json("unbounded")
                        : json(report.required.required_n);
  j["required_n_bound"] = report.required.unbounded
                              ? json("unbounded")
                              : json(report.required.bound);
  j["epsilon_for_n"] = std::isfinite(report.epsilon_for_n)
                           ? json(report.epsilon_for_n)
                           : json("unbounded");
  j["condition1"] = report.condition1;
  j["condition2"] = report.condition2;
  j["notes"] = report.notes;
  write_file(path, j.dump(2) + "\n");
}

void write_error_summary_csv(const ErrorSummary& summary,
                             const std::filesystem::path& path) {
  std::ostringstream out;
  out << "seq,oracle,estimate,rel_err,skipped\n";
  for (const auto& rec : summary.records) {
    out << '"';
    for (std::size_t i = 0; i < rec.seq.size(); ++i) {
      if (i) out << ' ';
      out << rec.seq[i];
    }
    out << "\"," << format_double(rec.oracle) << ','
        << format_double(rec.estimate) << ',' << format_double(rec.rel_err)
        << ',' << (rec.skipped ? 1 : 0) << '\n';
  }
  out << "summary,t=" << summary.t << ",enumerated=" << summary.enumerated
      << ",skipped=" << summary.skipped << '\n';
  out << "max_relative_error," << format_double(summary.max_relative_error)
      << '\n';
  out << "l1_total," << format_double(summary.l1_total) << '\n';
  if (summary.kl_defined) {
    out << "kl," << format_double(summary.kl) << '\n';
  } else {
    out << "kl,undefined";
    if (!summary.kl_offending_prefix.empty()) {
      out << ",prefix=\"";
      for (std::size_t i = 0; i < summary.kl_offending_prefix.size(); ++i) {
        if (i) out << ' ';
        out << summary.kl_offending_prefix[i];
      }
      out << '"';
    }
    out << '\n';
  }
  write_file(path, out.str());
}

std::string curve_csv(const CurveResult& curve) {
  std::ostringstream out;
  out << "m,lambda_hat,sigma_m_hat,status\n";
  for (const auto& row : curve.rows) {
    out << row.m << ',';
    if (row.ok) {
      out << format_double(row.lambda_hat) << ','
          << format_double(row.sigma_m_hat) << ',' << row.status;
    } else {
      out << ",," << row.status;
    }
    out << '\n';
  }
  out << "slope,";
  if (curve.slopes_defined) {
    out << format_double(curve.lambda_slope) << ','
        << format_double(curve.sigma_slope) << ",ok\n";
  } else {
    out << ",,undefined\n";
  }
  return out.str();
}

}  // namespace rdhmm
