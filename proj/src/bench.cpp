#include "vocbench/bench.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <tuple>

#include "subprocess.hpp"
#include "vocbench/audio_io.hpp"

namespace fs = std::filesystem;

namespace vocbench::bench {

namespace {

std::size_t occurrences(const std::string& s, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

void replace_all(std::string& s, std::string_view needle, const std::string& value) {
  for (auto pos = s.find(needle); pos != std::string::npos;
       pos = s.find(needle, pos + value.size())) {
    s.replace(pos, needle.size(), value);
  }
}

}  // namespace

void VocoderAdapter::validate() const {
  if (name.empty()) throw Error(ErrorCode::Usage, "adapter needs a name");
  if (!(timeout_s > 0.0)) throw Error(ErrorCode::Usage, "adapter timeout_s must be positive");
  if (!persistent && (occurrences(command, "{in}") != 1 || occurrences(command, "{out}") != 1)) {
    throw Error(ErrorCode::Usage,
                "adapter command must contain {in} and {out} exactly once: " + command);
  }
  if (persistent && (occurrences(command, "{in}") > 1 || occurrences(command, "{out}") > 1)) {
    throw Error(ErrorCode::Usage, "persistent adapter repeats a placeholder: " + command);
  }
}

std::string VocoderAdapter::expand(const fs::path& in, const fs::path& out) const {
  std::string cmd = command;
  replace_all(cmd, "{in}", detail::shell_quote(in.string()));
  replace_all(cmd, "{out}", detail::shell_quote(out.string()));
  return cmd;
}

VocoderAdapter adapter_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    VocoderAdapter a;
    a.name = j.at("name").get<std::string>();
    a.command = j.at("command").get<std::string>();
    a.timeout_s = j.value("timeout_s", a.timeout_s);
    a.device = j.value("device", a.device);
    a.persistent = j.value("persistent", false);
    if (j.contains("metadata") && j["metadata"].is_object()) {
      const auto& md = j["metadata"];
      if (md.contains("params_m") && !md["params_m"].is_null()) {
        a.metadata.params_m = md["params_m"].get<double>();
      }
      if (md.contains("gflops") && !md["gflops"].is_null()) {
        a.metadata.gflops = md["gflops"].get<double>();
      }
    }
    a.validate();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("adapter config: ") + e.what());
  }
}

VocoderAdapter load_adapter(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return adapter_from_json(ss.str());
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

namespace {

using Clock = std::chrono::steady_clock;

// One synthesis call; returns elapsed seconds or throws an Error describing
// the failure.
class Invoker {
 public:
  explicit Invoker(const VocoderAdapter& adapter) : adapter_(adapter) {
    if (adapter.persistent) {
      process_ = std::make_unique<detail::PersistentProcess>(adapter.expand("-", "-"));
    }
  }

  double operator()(const fs::path& in, const fs::path& out) {
    std::error_code ec;
    fs::remove(out, ec);
    double elapsed = 0.0;
    if (process_) {
      const auto start = Clock::now();
      const auto reply = process_->request(in.string() + "\t" + out.string(), adapter_.timeout_s);
      elapsed = std::chrono::duration<double>(Clock::now() - start).count();
      if (!reply) {
        throw Error(ErrorCode::Timeout, "no reply from persistent adapter within " +
                                            std::to_string(adapter_.timeout_s) + " s");
      }
      if (*reply != "DONE " + out.string()) {
        throw Error(ErrorCode::CommandFailed, "unexpected adapter reply: " + *reply);
      }
    } else {
      const auto outcome = detail::run_shell(adapter_.expand(in, out), adapter_.timeout_s);
      if (outcome.timed_out) {
        throw Error(ErrorCode::Timeout,
                    "killed after " + std::to_string(adapter_.timeout_s) + " s");
      }
      if (outcome.exit_code != 0) {
        throw Error(ErrorCode::CommandFailed, "exit code " + std::to_string(outcome.exit_code));
      }
      elapsed = outcome.elapsed_s;
    }
    if (!fs::is_regular_file(out) || fs::file_size(out) == 0) {
      throw Error(ErrorCode::NoOutput, out.string() + " missing or empty");
    }
    return elapsed;
  }

 private:
  const VocoderAdapter& adapter_;
  std::unique_ptr<detail::PersistentProcess> process_;
};

}  // namespace

RtfResult run_rtf(const VocoderAdapter& adapter, const std::vector<corpus::ManifestItem>& items,
                  const fs::path& features_dir, const spectral::SpectralConfig& cfg,
                  const RunOptions& options) {
  adapter.validate();
  if (options.warmup < 0 || options.repetitions < 1) {
    throw Error(ErrorCode::Usage, "need warmup >= 0 and repetitions >= 1");
  }
  const fs::path out_dir =
      options.output_dir.empty() ? fs::path("synth") / adapter.name : options.output_dir;
  fs::create_directories(out_dir);

  RtfResult result;
  result.system_name = adapter.name;
  result.device_label = adapter.device;
  result.warmup_count = options.warmup;
  result.repetitions = options.repetitions;
  result.persistent = adapter.persistent;

  Invoker invoke(adapter);
  for (const auto& item : items) {
    const fs::path in = features_dir / (item.id + ".mel");
    const fs::path out = out_dir / (item.id + ".wav");
    try {
      if (!fs::is_regular_file(in)) {
        throw Error(ErrorCode::MissingFiles, "feature file " + in.string() + " not found");
      }
      for (int i = 0; i < options.warmup; ++i) invoke(in, out);
      std::vector<double> times;
      for (int r = 0; r < options.repetitions; ++r) times.push_back(invoke(in, out));

      auto wav = audio::load_wav(out);
      if (wav.sample_rate() != cfg.sample_rate) {
        result.warnings.push_back(std::string(to_string(ErrorCode::BadOutputRate)) + ": " +
                                  item.id + " produced at " + std::to_string(wav.sample_rate()) +
                                  " Hz, resampled to " + std::to_string(cfg.sample_rate));
        wav = audio::resample(wav, cfg.sample_rate);
        audio::save_wav(wav, out);
      }
      RtfItem row;
      row.utterance_id = item.id;
      row.synth_seconds = median(times);
      row.audio_seconds = wav.duration_seconds();
      row.rtf = row.synth_seconds / row.audio_seconds;
      result.per_item.push_back(row);
    } catch (const Error& e) {
      result.failures.push_back({item.id, e.code(), e.what()});
    }
  }

  std::vector<double> rtfs;
  for (const auto& r : result.per_item) rtfs.push_back(r.rtf);
  result.median_rtf = median(rtfs);
  result.mean_rtf =
      rtfs.empty() ? 0.0 : std::accumulate(rtfs.begin(), rtfs.end(), 0.0) / rtfs.size();
  return result;
}

std::vector<RankRow> compare_rtf(const std::vector<RtfResult>& results) {
  std::vector<RankRow> rows;
  for (const auto& r : results) {
    rows.push_back({r.system_name, r.device_label, r.median_rtf, r.mean_rtf, r.per_item.size(),
                    r.excluded_count()});
  }
  std::sort(rows.begin(), rows.end(), [](const RankRow& a, const RankRow& b) {
    return std::tie(a.device_label, a.median_rtf, a.system_name) <
           std::tie(b.device_label, b.median_rtf, b.system_name);
  });
  return rows;
}

std::string rtf_csv(const RtfResult& result) {
  std::ostringstream out;
  out << "system,device,utterance,synth_s,audio_s,rtf\n";
  out << std::setprecision(9);
  for (const auto& r : result.per_item) {
    out << result.system_name << ',' << result.device_label << ',' << r.utterance_id << ','
        << r.synth_seconds << ',' << r.audio_seconds << ',' << r.rtf << '\n';
  }
  return out.str();
}

std::vector<RtfItem> parse_rtf_csv(std::string_view text, std::string* system,
                                   std::string* device) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "system,device,utterance,synth_s,audio_s,rtf") {
    throw Error(ErrorCode::SchemaMismatch, "RTF CSV header mismatch: " + line);
  }
  std::vector<RtfItem> items;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw Error(ErrorCode::SchemaMismatch, "RTF CSV row: " + line);
    if (system) *system = cells[0];
    if (device) *device = cells[1];
    items.push_back({cells[2], std::stod(cells[3]), std::stod(cells[4]), std::stod(cells[5])});
  }
  return items;
}

}  // namespace vocbench::bench
