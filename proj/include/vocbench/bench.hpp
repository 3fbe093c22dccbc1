#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vocbench/corpus.hpp"
#include "vocbench/error.hpp"
#include "vocbench/spectral.hpp"

namespace vocbench::bench {

/// Complexity figures supplied by the user; never measured here.
struct ModelMetadata {
  std::optional<double> params_m;
  std::optional<double> gflops;
};

/// How to invoke an external vocoder. `command` is a shell template with
/// {in} (mel feature file) and {out} (wav to write) placeholders.
///
/// In persistent mode the command is started once; each item is sent as
/// "<in>\t<out>" on its stdin and the adapter answers "DONE <out>". Model
/// loading is then excluded from timing.
struct VocoderAdapter {
  std::string name;
  std::string command;
  double timeout_s = 600.0;
  std::string device = "cpu";
  bool persistent = false;
  ModelMetadata metadata;

  void validate() const;
  std::string expand(const std::filesystem::path& in, const std::filesystem::path& out) const;
};

VocoderAdapter load_adapter(const std::filesystem::path& path);
VocoderAdapter adapter_from_json(std::string_view text);

struct RtfItem {
  std::string utterance_id;
  double synth_seconds = 0.0;
  double audio_seconds = 0.0;
  double rtf = 0.0;
};

struct RtfFailure {
  std::string utterance_id;
  ErrorCode code;
  std::string message;
};

struct RtfResult {
  std::string system_name;
  std::string device_label;
  std::vector<RtfItem> per_item;
  std::vector<RtfFailure> failures;  // excluded from the aggregates
  std::vector<std::string> warnings;
  double median_rtf = 0.0;
  double mean_rtf = 0.0;
  int warmup_count = 0;
  int repetitions = 0;
  bool persistent = false;

  std::size_t excluded_count() const { return failures.size(); }
};

struct RunOptions {
  int warmup = 1;
  int repetitions = 3;
  std::filesystem::path output_dir;  // synthesized wavs are kept here
};

/// Times the adapter on every item: `warmup` untimed runs, then `repetitions`
/// timed runs whose median is the synthesis time. Runs are strictly serial.
/// Per-item failures are recorded and the run continues.
RtfResult run_rtf(const VocoderAdapter& adapter, const std::vector<corpus::ManifestItem>& items,
                  const std::filesystem::path& features_dir, const spectral::SpectralConfig& cfg,
                  const RunOptions& options);

double median(std::vector<double> values);

struct RankRow {
  std::string system_name;
  std::string device_label;
  double median_rtf = 0.0;
  double mean_rtf = 0.0;
  std::size_t n_items = 0;
  std::size_t excluded = 0;
};

/// Grouped by device label; ascending median RTF within a device, ties by name.
std::vector<RankRow> compare_rtf(const std::vector<RtfResult>& results);

/// "system,device,utterance,synth_s,audio_s,rtf"
std::string rtf_csv(const RtfResult& result);
std::vector<RtfItem> parse_rtf_csv(std::string_view text, std::string* system = nullptr,
                                   std::string* device = nullptr);

}  // namespace vocbench::bench
