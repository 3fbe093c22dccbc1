#include "vocbench/commands.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <exception>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "vocbench/audio_io.hpp"
#include "vocbench/error.hpp"
#include "vocbench/metrics.hpp"
#include "vocbench/mos_server.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace vocbench::cli {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  out << content;
}

audio::Waveform load_at_rate(const fs::path& path, int rate) {
  return audio::resample(audio::load_wav(path), rate);
}

}  // namespace

AppConfig config_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    AppConfig cfg;
    auto& s = cfg.spectral;
    const json spec = j.contains("spectral") ? j["spectral"] : json::object();
    s.sample_rate = spec.value("sample_rate", s.sample_rate);
    s.win_length_ms = spec.value("win_length_ms", s.win_length_ms);
    s.hop_length_ms = spec.value("hop_length_ms", s.hop_length_ms);
    s.fft_size = spec.value("fft_size", s.fft_size);
    s.n_mels = spec.value("n_mels", s.n_mels);
    s.fmin = spec.value("fmin", s.fmin);
    s.fmax = spec.value("fmax", s.fmax);
    s.log_floor = spec.value("log_floor", s.log_floor);
    s.griffin_lim_iters = spec.value("griffin_lim_iters", s.griffin_lim_iters);
    cfg.provider = j.value("provider", cfg.provider);
    cfg.seed = j.value("seed", cfg.seed);
    s.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Usage, std::string("config: ") + e.what());
  }
}

AppConfig load_config(const fs::path& path) { return config_from_json(read_file(path)); }

std::string config_to_json(const AppConfig& cfg) {
  const auto& s = cfg.spectral;
  ordered_json j;
  j["spectral"] = {{"sample_rate", s.sample_rate},   {"win_length_ms", s.win_length_ms},
                   {"hop_length_ms", s.hop_length_ms}, {"fft_size", s.fft_size},
                   {"n_mels", s.n_mels},             {"fmin", s.fmin},
                   {"fmax", s.fmax},                 {"log_floor", s.log_floor},
                   {"griffin_lim_iters", s.griffin_lim_iters}};
  j["provider"] = cfg.provider;
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

corpus::Manifest cmd_split(const std::string& kind, const fs::path& root, const fs::path& out,
                           std::optional<std::uint64_t> seed) {
  corpus::Manifest m;
  if (kind == "lj") {
    m = corpus::build_lj_manifest(root);
  } else if (kind == "vctk") {
    m = corpus::build_vctk_manifest(root, seed.value_or(corpus::kDefaultSeed));
  } else if (kind == "libritts") {
    m = corpus::build_libritts_manifest(root);
  } else {
    throw Error(ErrorCode::Usage, "unknown corpus kind '" + kind + "' (lj, vctk, libritts)");
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  corpus::save_manifest(m, out);
  return m;
}

namespace {

// Runs `work` for every selected item, collecting failures instead of stopping.
ItemFailures for_each_item(const std::vector<corpus::ManifestItem>& items, int jobs,
                           const std::function<void(const corpus::ManifestItem&)>& work) {
  ItemFailures failures;
  std::mutex m;
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    try {
      work(items[i]);
    } catch (const std::exception& e) {
      std::lock_guard lock(m);
      failures.messages.push_back(items[i].id + ": " + e.what());
    }
  });
  std::sort(failures.messages.begin(), failures.messages.end());
  for (const auto& msg : failures.messages) std::cerr << "error: " << msg << "\n";
  return failures;
}

}  // namespace

ItemFailures cmd_extract(const corpus::Manifest& manifest, corpus::Split split, const fs::path& root,
                         const AppConfig& cfg, const fs::path& out_dir, int jobs) {
  cfg.spectral.validate();
  fs::create_directories(out_dir);
  return for_each_item(manifest.select(split), jobs, [&](const corpus::ManifestItem& item) {
    const auto w = load_at_rate(root / item.path, cfg.spectral.sample_rate);
    spectral::write_mel(spectral::mel_spectrogram(w, cfg.spectral), out_dir / (item.id + ".mel"));
  });
}

ItemFailures cmd_glim(const corpus::Manifest& manifest, corpus::Split split, const fs::path& root,
                      const AppConfig& cfg, const fs::path& out_dir, int jobs) {
  cfg.spectral.validate();
  fs::create_directories(out_dir);
  return for_each_item(manifest.select(split), jobs, [&](const corpus::ManifestItem& item) {
    const auto w = load_at_rate(root / item.path, cfg.spectral.sample_rate);
    const auto mel = spectral::mel_spectrogram(w, cfg.spectral);
    audio::save_wav(spectral::griffin_lim(mel, cfg.spectral), out_dir / (item.id + ".wav"));
  });
}

report::EvalResult cmd_eval(const corpus::Manifest& manifest, const EvalOptions& options,
                            const AppConfig& cfg) {
  const auto& spec = cfg.spectral;
  spec.validate();
  const auto items = manifest.select(options.split);
  if (items.empty()) {
    throw Error(ErrorCode::Usage, "split " + std::string(corpus::to_string(options.split)) +
                                      " of " + manifest.corpus + " is empty");
  }

  std::vector<std::string> missing;
  for (const auto& item : items) {
    if (!fs::is_regular_file(options.synth_dir / (item.id + ".wav"))) missing.push_back(item.id);
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " synthesized utterances absent from " +
                      options.synth_dir.string() + ":";
    for (const auto& id : missing) msg += " " + id;
    throw Error(ErrorCode::MissingSynth, msg);
  }

  report::EvalResult result;
  result.corpus = manifest.corpus;
  result.system = options.system.empty() ? options.synth_dir.filename().string() : options.system;
  result.split = std::string(corpus::to_string(options.split));
  result.provider = cfg.provider;
  result.per_utterance.resize(items.size());

  std::vector<Eigen::MatrixXd> eval_rows(items.size());
  std::vector<Eigen::MatrixXd> ref_rows(items.size());
  const bool ref_background = !options.background_dir.has_value();
  auto failures = for_each_item(items, options.jobs, [&](const corpus::ManifestItem& item) {
    const std::size_t i = static_cast<std::size_t>(&item - items.data());
    const auto ref = load_at_rate(options.ref_root / item.path, spec.sample_rate);
    const auto syn = load_at_rate(options.synth_dir / (item.id + ".wav"), spec.sample_rate);
    const auto pair = metrics::align(spectral::mel_spectrogram(ref, spec),
                                     spectral::mel_spectrogram(syn, spec));
    const auto v = metrics::spectrogram_metrics(pair);
    result.per_utterance[i] = {item.id, v.ssim, v.ls_mse, v.psnr};
    eval_rows[i] = metrics::embed(syn, cfg.provider, spec);
    if (ref_background) ref_rows[i] = metrics::embed(ref, cfg.provider, spec);
  });
  if (!failures.empty()) {
    throw Error(ErrorCode::CommandFailed,
                std::to_string(failures.messages.size()) + " utterances failed to evaluate; first: " +
                    failures.messages.front());
  }

  double ssim_sum = 0.0, mse_sum = 0.0;
  for (const auto& u : result.per_utterance) {
    ssim_sum += u.ssim;
    mse_sum += u.ls_mse;
  }
  const double n = static_cast<double>(items.size());
  result.ssim = ssim_sum / n;
  result.ls_mse = mse_sum / n;
  result.psnr = metrics::psnr_from_mse(result.ls_mse);

  if (!ref_background) {
    std::vector<fs::path> wavs;
    for (const auto& e : fs::recursive_directory_iterator(*options.background_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".wav") wavs.push_back(e.path());
    }
    std::sort(wavs.begin(), wavs.end());
    ref_rows.assign(wavs.size(), {});
    parallel_for(wavs.size(), options.jobs, [&](std::size_t i) {
      ref_rows[i] = metrics::embed(load_at_rate(wavs[i], spec.sample_rate), cfg.provider, spec);
    });
    result.fad_background = "dir:" + options.background_dir->string();
  } else {
    result.fad_background = "reference:" + result.split;
  }

  auto stack = [](const std::vector<Eigen::MatrixXd>& parts) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& p : parts) {
      rows += p.rows();
      cols = std::max(cols, p.cols());
    }
    Eigen::MatrixXd out(rows, cols);
    Eigen::Index r = 0;
    for (const auto& p : parts) {
      out.middleRows(r, p.rows()) = p;
      r += p.rows();
    }
    return out;
  };
  try {
    const auto background = metrics::EmbeddingSet::fit(stack(ref_rows), cfg.provider);
    const auto evaluation = metrics::EmbeddingSet::fit(stack(eval_rows), cfg.provider);
    result.fad = metrics::fad(background, evaluation);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooFewEmbeddings) throw;
    std::cerr << "warning: FAD skipped: " << e.what() << "\n";
  }

  if (options.out_json) write_file(*options.out_json, report::eval_to_json(result));
  if (options.out_markdown) {
    write_file(*options.out_markdown,
               report::render_markdown(report::build_report({result}, {}, {}, {})));
  }
  return result;
}

bench::RtfResult cmd_bench(const bench::VocoderAdapter& adapter, const corpus::Manifest& manifest,
                           const BenchOptions& options, const AppConfig& cfg) {
  bench::RunOptions run;
  run.warmup = options.warmup;
  run.repetitions = options.repetitions;
  run.output_dir = options.output_dir;
  auto result =
      bench::run_rtf(adapter, manifest.select(options.split), options.features_dir, cfg.spectral, run);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& f : result.failures) std::cerr << "error: " << f.message << "\n";
  if (options.out_csv) write_file(*options.out_csv, bench::rtf_csv(result));
  return result;
}

report::MetricReport cmd_report(const ReportInputs& inputs) {
  std::vector<report::EvalResult> evals;
  for (const auto& p : inputs.eval_jsons) evals.push_back(report::eval_from_json(read_file(p)));
  std::vector<mos::MosSummary> mos;
  if (inputs.mos_summary) mos = report::mos_summary_from_json(read_file(*inputs.mos_summary));
  std::map<std::string, bench::ModelMetadata> metadata;
  if (inputs.metadata) metadata = report::metadata_from_json(read_file(*inputs.metadata));
  std::map<std::string, std::map<std::string, double>> rtf;
  for (const auto& p : inputs.bench_csvs) {
    std::string system, device;
    const auto rows = bench::parse_rtf_csv(read_file(p), &system, &device);
    if (rows.empty()) continue;
    std::vector<double> values;
    for (const auto& r : rows) values.push_back(r.rtf);
    rtf[system][device] = bench::median(values);
  }
  auto r = report::build_report(evals, mos, metadata, rtf);
  if (inputs.out_markdown) write_file(*inputs.out_markdown, report::render_markdown(r));
  if (inputs.out_csv) write_file(*inputs.out_csv, report::render_csv(r));
  return r;
}

namespace {
mos::MosServer* g_server = nullptr;
extern "C" void handle_stop(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int cmd_mos_serve(const ServeOptions& options) {
  mos::MosStore store(mos::load_test_definition(options.definition), options.data_dir);
  mos::MosServer server(store, {options.admin_token, options.ui_dir});
  const int port = server.bind(options.host, options.port);
  if (port < 0) {
    throw Error(ErrorCode::IoFailure, "cannot bind " + options.host + ":" + std::to_string(options.port));
  }
  g_server = &server;
  std::signal(SIGINT, handle_stop);
  std::signal(SIGTERM, handle_stop);
  std::cerr << "serving " << store.stimuli().size() << " stimuli on http://" << options.host << ":"
            << port << "\n";
  server.listen_after_bind();
  g_server = nullptr;
  return kExitOk;
}

}  // namespace vocbench::cli
