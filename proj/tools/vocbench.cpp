// vocbench: command-line front end for vocoder evaluation.

#include <CLI11.hpp>
#include <iostream>

#include "vocbench/commands.hpp"
#include "vocbench/error.hpp"

namespace fs = std::filesystem;
using namespace vocbench;

int main(int argc, char** argv) {
  CLI::App app{"Vocoder evaluation toolkit: splits, features, Griffin-Lim, metrics, RTF, MOS"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON config (spectral parameters, provider, seed)");
  app.add_option("--jobs", jobs, "Parallel workers for per-utterance commands")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Seed for randomized splits");

  // split
  auto* split_cmd = app.add_subcommand("split", "Build a corpus manifest");
  std::string corpus_kind;
  fs::path root, out;
  split_cmd->add_option("corpus", corpus_kind, "lj | vctk | libritts")->required();
  split_cmd->add_option("--root", root, "Corpus root directory")->required();
  split_cmd->add_option("--out", out, "Manifest JSON to write")->required();

  // extract / glim share their options
  fs::path manifest_path, out_dir;
  std::string split_name = "test";
  auto add_item_options = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", manifest_path)->required();
    cmd->add_option("--split", split_name, "train | validation | test");
    cmd->add_option("--root", root, "Corpus root the manifest paths are relative to")->required();
    cmd->add_option("--out", out_dir, "Output directory")->required();
  };
  auto* extract_cmd = app.add_subcommand("extract", "Write VBMEL log-mel features");
  add_item_options(extract_cmd);
  auto* glim_cmd = app.add_subcommand("glim", "Griffin-Lim baseline synthesis");
  add_item_options(glim_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Objective metrics for one system");
  cli::EvalOptions eval_opts;
  std::optional<fs::path> background_dir, out_json, out_md;
  eval_cmd->add_option("--manifest", manifest_path)->required();
  eval_cmd->add_option("--split", split_name);
  eval_cmd->add_option("--ref-root", eval_opts.ref_root)->required();
  eval_cmd->add_option("--synth", eval_opts.synth_dir, "Directory of <id>.wav")->required();
  eval_cmd->add_option("--system", eval_opts.system, "System name (default: synth dir name)");
  eval_cmd->add_option("--background", background_dir, "FAD background audio directory");
  eval_cmd->add_option("--out", out_json, "Eval JSON to write");
  eval_cmd->add_option("--markdown", out_md, "Markdown table to write");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Real-time factor of an external vocoder");
  fs::path adapter_path;
  cli::BenchOptions bench_opts;
  std::optional<fs::path> bench_csv;
  bench_cmd->add_option("--adapter", adapter_path, "Adapter config JSON")->required();
  bench_cmd->add_option("--manifest", manifest_path)->required();
  bench_cmd->add_option("--split", split_name);
  bench_cmd->add_option("--features", bench_opts.features_dir, "Directory of <id>.mel")->required();
  bench_cmd->add_option("--out", bench_opts.output_dir, "Where synthesized wavs are kept");
  bench_cmd->add_option("--warmup", bench_opts.warmup)->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--repetitions", bench_opts.repetitions)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--csv", bench_csv, "RTF CSV to write");

  // report
  auto* report_cmd = app.add_subcommand("report", "Combine eval results into tables");
  cli::ReportInputs report_in;
  std::optional<fs::path> mos_path, metadata_path, report_md, report_csv;
  report_cmd->add_option("evals", report_in.eval_jsons, "Eval JSON files")->required();
  report_cmd->add_option("--mos", mos_path, "MOS summary JSON");
  report_cmd->add_option("--metadata", metadata_path, "Params/GFLOPS metadata JSON");
  report_cmd->add_option("--bench", report_in.bench_csvs, "RTF CSV files");
  report_cmd->add_option("--markdown", report_md);
  report_cmd->add_option("--csv", report_csv);

  // mos-serve
  auto* serve_cmd = app.add_subcommand("mos-serve", "Host the listening test");
  cli::ServeOptions serve;
  serve_cmd->add_option("--definition", serve.definition, "Test definition JSON")->required();
  serve_cmd->add_option("--data", serve.data_dir, "Directory for logs")->required();
  serve_cmd->add_option("--host", serve.host);
  serve_cmd->add_option("--port", serve.port);
  serve_cmd->add_option("--admin-token", serve.admin_token)->envname("VOCBENCH_ADMIN_TOKEN");
  serve_cmd->add_option("--ui", serve.ui_dir, "Static listening UI directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    cli::AppConfig cfg = config_path.empty() ? cli::AppConfig{} : cli::load_config(config_path);
    if (seed) cfg.seed = *seed;

    if (*split_cmd) {
      const auto m = cli::cmd_split(corpus_kind, root, out, cfg.seed);
      std::cout << m.corpus << ": " << m.count(corpus::Split::Train) << " train, "
                << m.count(corpus::Split::Validation) << " validation, "
                << m.count(corpus::Split::Test) << " test\n";
      return cli::kExitOk;
    }
    const auto split = corpus::parse_split(split_name);
    if (*extract_cmd || *glim_cmd) {
      const auto manifest = corpus::load_manifest(manifest_path);
      const auto failures = *extract_cmd
                                ? cli::cmd_extract(manifest, split, root, cfg, out_dir, jobs)
                                : cli::cmd_glim(manifest, split, root, cfg, out_dir, jobs);
      return failures.empty() ? cli::kExitOk : cli::kExitItemFailures;
    }
    if (*eval_cmd) {
      eval_opts.split = split;
      eval_opts.background_dir = background_dir;
      eval_opts.out_json = out_json;
      eval_opts.out_markdown = out_md;
      eval_opts.jobs = jobs;
      const auto r = cli::cmd_eval(corpus::load_manifest(manifest_path), eval_opts, cfg);
      std::cout << report::render_markdown(report::build_report({r}, {}, {}, {}));
      return cli::kExitOk;
    }
    if (*bench_cmd) {
      bench_opts.split = split;
      bench_opts.out_csv = bench_csv;
      const auto adapter = bench::load_adapter(adapter_path);
      const auto r = cli::cmd_bench(adapter, corpus::load_manifest(manifest_path), bench_opts, cfg);
      for (const auto& row : bench::compare_rtf({r})) {
        std::cout << row.system_name << " [" << row.device_label << "] median RTF "
                  << row.median_rtf << " over " << row.n_items << " items, " << row.excluded
                  << " excluded (" << (r.persistent ? "persistent" : "per-call") << " mode)\n";
      }
      return r.failures.empty() ? cli::kExitOk : cli::kExitItemFailures;
    }
    if (*report_cmd) {
      report_in.mos_summary = mos_path;
      report_in.metadata = metadata_path;
      report_in.out_markdown = report_md;
      report_in.out_csv = report_csv;
      std::cout << report::render_markdown(cli::cmd_report(report_in));
      return cli::kExitOk;
    }
    if (*serve_cmd) return cli::cmd_mos_serve(serve);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool usage = e.code() == ErrorCode::Usage || e.code() == ErrorCode::InvalidConfig ||
                       e.code() == ErrorCode::SchemaMismatch;
    return usage ? cli::kExitUsage : cli::kExitItemFailures;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitItemFailures;
  }
  return cli::kExitUsage;
}
