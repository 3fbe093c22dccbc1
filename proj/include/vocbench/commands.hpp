#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vocbench/bench.hpp"
#include "vocbench/corpus.hpp"
#include "vocbench/report.hpp"
#include "vocbench/spectral.hpp"

namespace vocbench::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitItemFailures = 1;
inline constexpr int kExitUsage = 2;

/// Everything a --config file may set.
struct AppConfig {
  spectral::SpectralConfig spectral;
  std::string provider{"melstat-v1"};
  std::uint64_t seed = corpus::kDefaultSeed;
};

AppConfig load_config(const std::filesystem::path& path);
AppConfig config_from_json(std::string_view text);
std::string config_to_json(const AppConfig& cfg);

/// Runs fn(0..n-1) on up to `jobs` threads. The first exception thrown by
/// any call is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Failures collected by per-item commands; the rest of the items still run.
struct ItemFailures {
  std::vector<std::string> messages;
  bool empty() const { return messages.empty(); }
};

/// kind is "lj", "vctk" or "libritts".
corpus::Manifest cmd_split(const std::string& kind, const std::filesystem::path& root,
                           const std::filesystem::path& out, std::optional<std::uint64_t> seed);

/// Writes <id>.mel (VBMEL) for every item of `split`, resampling first.
ItemFailures cmd_extract(const corpus::Manifest& manifest, corpus::Split split,
                         const std::filesystem::path& root, const AppConfig& cfg,
                         const std::filesystem::path& out_dir, int jobs);

/// Griffin-Lim baseline: extract, invert and write <id>.wav for every item.
ItemFailures cmd_glim(const corpus::Manifest& manifest, corpus::Split split,
                      const std::filesystem::path& root, const AppConfig& cfg,
                      const std::filesystem::path& out_dir, int jobs);

struct EvalOptions {
  corpus::Split split = corpus::Split::Test;
  std::filesystem::path ref_root;
  std::filesystem::path synth_dir;
  std::string system;
  std::optional<std::filesystem::path> background_dir;
  std::optional<std::filesystem::path> out_json;
  std::optional<std::filesystem::path> out_markdown;
  int jobs = 1;
};

/// Per-utterance SSIM/LS-MSE/PSNR averaged over the split, plus one FAD of
/// the pooled synthesized embeddings against the background set (the
/// reference split audio when no background directory is given).
/// Throws MissingSynth naming every absent <id>.wav.
report::EvalResult cmd_eval(const corpus::Manifest& manifest, const EvalOptions& options,
                            const AppConfig& cfg);

struct BenchOptions {
  corpus::Split split = corpus::Split::Test;
  std::filesystem::path features_dir;
  std::filesystem::path output_dir;
  int warmup = 1;
  int repetitions = 3;
  std::optional<std::filesystem::path> out_csv;
};

bench::RtfResult cmd_bench(const bench::VocoderAdapter& adapter, const corpus::Manifest& manifest,
                           const BenchOptions& options, const AppConfig& cfg);

struct ReportInputs {
  std::vector<std::filesystem::path> eval_jsons;
  std::optional<std::filesystem::path> mos_summary;
  std::optional<std::filesystem::path> metadata;
  std::vector<std::filesystem::path> bench_csvs;
  std::optional<std::filesystem::path> out_markdown;
  std::optional<std::filesystem::path> out_csv;
};

report::MetricReport cmd_report(const ReportInputs& inputs);

struct ServeOptions {
  std::filesystem::path definition;
  std::filesystem::path data_dir;
  std::string host{"127.0.0.1"};
  int port = 8080;
  std::string admin_token;
  std::filesystem::path ui_dir;
};

/// Blocks until the process is interrupted.
int cmd_mos_serve(const ServeOptions& options);

}  // namespace vocbench::cli
