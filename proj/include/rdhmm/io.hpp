#pragma once

#include <filesystem>
#include <string>

#include "rdhmm/diagnostics.hpp"
#include "rdhmm/hmm.hpp"
#include "rdhmm/moments.hpp"
#include "rdhmm/ngram.hpp"
#include "rdhmm/sampling.hpp"
#include "rdhmm/spectral.hpp"

namespace rdhmm {

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double x);

// HMM files (.hmm.json): {"m", "v", "T", "O", "pi"} with T and O
// row-major. Matrices round-trip exactly at the decimal level.
void save_hmm(const Hmm& hmm, const std::filesystem::path& path);
Hmm load_hmm(const std::filesystem::path& path);

// Triples as three-column integer TSV (x1, x2, x3 per row).
void save_triples(const TripleSample& sample, const std::filesystem::path& path);
TripleSample load_triples(const std::filesystem::path& path, int v);

// Moment sets: {"m", "provenance", "n", "mu", "sigma", "kappa"} with
// sigma row-major and kappa a list of row-major slices.
void save_moments(const MomentSet& moments, const std::filesystem::path& path);
MomentSet load_moments(const std::filesystem::path& path);

// Model files share {"kind": "reduced"|"hsu"|"weighted"}.
void save_model(const SpectralModel& model, const std::filesystem::path& path);
SpectralModel load_model(const std::filesystem::path& path);

// Emits a size note to warn_stream (when given) once v * m^2 exceeds
// 10^7 tensor entries.
void save_hsu_model(const HsuModel& model, const std::filesystem::path& path,
                    std::ostream* warn_stream = nullptr);
HsuModel load_hsu_model(const std::filesystem::path& path);

void save_weighted_model(const WeightedModel& model,
                         const std::filesystem::path& path);
WeightedModel load_weighted_model(const std::filesystem::path& path);

std::string model_kind(const std::filesystem::path& path);  // peeks "kind"

void save_report(const DiagnosticsReport& report,
                 const std::filesystem::path& path);

// Per-sequence CSV: seq,oracle,estimate,rel_err,skipped plus a summary
// block as trailing comment-free rows; see README for the exact layout.
void write_error_summary_csv(const ErrorSummary& summary,
                             const std::filesystem::path& path);

// plot-data CSV: header, one `m,lambda_hat,sigma_m_hat,status` row per m,
// then a `slope,...` summary row.
std::string curve_csv(const CurveResult& curve);

}  // namespace rdhmm
