#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vocbench/bench.hpp"
#include "vocbench/mos.hpp"

namespace vocbench::report {

struct UtteranceMetrics {
  std::string id;
  double ssim = 0.0;
  double ls_mse = 0.0;
  double psnr = 0.0;
};

/// One system evaluated on one corpus split. Aggregate SSIM and LS-MSE are
/// means over utterances; aggregate PSNR is derived from the mean LS-MSE so
/// the PSNR identity holds for the row.
struct EvalResult {
  std::string corpus;
  std::string system;
  std::string split;
  std::vector<UtteranceMetrics> per_utterance;
  double ssim = 0.0;
  double ls_mse = 0.0;
  double psnr = 0.0;
  std::optional<double> fad;
  std::string provider;
  std::string fad_background;

  std::size_t n_utterances() const { return per_utterance.size(); }
};

std::string eval_to_json(const EvalResult& e);
/// Throws SchemaMismatch on malformed input.
EvalResult eval_from_json(std::string_view text);

struct MosCell {
  double mean = 0.0;
  std::optional<double> ci95;
};

struct ReportRow {
  std::string system;
  double ssim = 0.0;
  double ls_mse = 0.0;
  double psnr = 0.0;
  std::optional<double> fad;
  std::optional<MosCell> mos;
  std::size_t n_utterances = 0;
};

struct ComplexityRow {
  std::string system;
  bench::ModelMetadata metadata;
  std::map<std::string, double> median_rtf;  // device label -> median RTF
};

struct MetricReport {
  std::string corpus;
  std::vector<ReportRow> rows;
  std::vector<ComplexityRow> complexity;

  /// Throws SchemaMismatch when a row's PSNR disagrees with its LS-MSE by
  /// more than 0.01 dB or rows cover different utterance counts.
  void check_consistency() const;
};

inline constexpr double kPsnrTolerance = 0.01;

/// "4.10±0.059"; the half-width is omitted when absent.
std::string format_mos(double mean, std::optional<double> ci95);
/// Two decimals, or "inf".
std::string format_psnr(double psnr);

/// Rows from the eval results, joined with MOS summaries, bench results
/// (system -> device -> median RTF) and metadata by system name.
MetricReport build_report(const std::vector<EvalResult>& evals,
                          const std::vector<mos::MosSummary>& mos,
                          const std::map<std::string, bench::ModelMetadata>& metadata,
                          const std::map<std::string, std::map<std::string, double>>& rtf);

std::string render_markdown(const MetricReport& r);
std::string render_csv(const MetricReport& r);

/// Parses the admin summary JSON ([{"system", "n", "mos", "ci95"}]).
std::vector<mos::MosSummary> mos_summary_from_json(std::string_view text);
std::string mos_summary_to_json(const std::vector<mos::MosSummary>& s);

/// {"system": {"params_m": number|null, "gflops": number|null}}
std::map<std::string, bench::ModelMetadata> metadata_from_json(std::string_view text);

}  // namespace vocbench::report
