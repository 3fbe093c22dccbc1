#include "vocbench/report.hpp"

#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <set>
#include <sstream>

#include "vocbench/error.hpp"
#include "vocbench/metrics.hpp"

using nlohmann::json;
using nlohmann::ordered_json;

namespace vocbench::report {

namespace {

// JSON has no infinity; PSNR for zero error is written as "inf".
ordered_json psnr_json(double v) { return std::isinf(v) ? ordered_json("inf") : ordered_json(v); }

double psnr_value(const json& j) {
  if (j.is_string() && j.get<std::string>() == "inf") return metrics::kPsnrInfinity;
  return j.get<double>();
}

std::string fixed(double v, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

std::string full(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

}  // namespace

std::string eval_to_json(const EvalResult& e) {
  ordered_json j;
  j["corpus"] = e.corpus;
  j["system"] = e.system;
  j["split"] = e.split;
  auto& per = j["per_utterance"] = ordered_json::array();
  for (const auto& u : e.per_utterance) {
    per.push_back({{"id", u.id}, {"ssim", u.ssim}, {"ls_mse", u.ls_mse}, {"psnr", psnr_json(u.psnr)}});
  }
  j["aggregate"] = {{"ssim", e.ssim},
                    {"ls_mse", e.ls_mse},
                    {"psnr", psnr_json(e.psnr)},
                    {"fad", e.fad ? ordered_json(*e.fad) : ordered_json(nullptr)},
                    {"n_utterances", e.n_utterances()},
                    {"provider", e.provider},
                    {"fad_background", e.fad_background}};
  return j.dump(2) + "\n";
}

EvalResult eval_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    EvalResult e;
    e.corpus = j.at("corpus").get<std::string>();
    e.system = j.at("system").get<std::string>();
    e.split = j.value("split", "");
    for (const auto& u : j.at("per_utterance")) {
      e.per_utterance.push_back({u.at("id").get<std::string>(), u.at("ssim").get<double>(),
                                 u.at("ls_mse").get<double>(), psnr_value(u.at("psnr"))});
    }
    const auto& agg = j.at("aggregate");
    e.ssim = agg.at("ssim").get<double>();
    e.ls_mse = agg.at("ls_mse").get<double>();
    e.psnr = psnr_value(agg.at("psnr"));
    if (!agg.at("fad").is_null()) e.fad = agg.at("fad").get<double>();
    e.provider = agg.value("provider", "");
    e.fad_background = agg.value("fad_background", "");
    if (agg.at("n_utterances").get<std::size_t>() != e.per_utterance.size()) {
      throw Error(ErrorCode::SchemaMismatch, "n_utterances disagrees with per_utterance length");
    }
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaMismatch, std::string("eval JSON: ") + ex.what());
  }
}

void MetricReport::check_consistency() const {
  std::set<std::size_t> counts;
  for (const auto& row : rows) {
    counts.insert(row.n_utterances);
    const double expected = metrics::psnr_from_mse(row.ls_mse);
    const bool ok = std::isinf(expected) ? std::isinf(row.psnr)
                                         : std::abs(row.psnr - expected) <= kPsnrTolerance;
    if (!ok) {
      throw Error(ErrorCode::SchemaMismatch,
                  row.system + ": PSNR " + full(row.psnr) + " dB inconsistent with LS-MSE " +
                      full(row.ls_mse) + " (expected " + full(expected) + " dB)");
    }
  }
  if (counts.size() > 1) {
    throw Error(ErrorCode::SchemaMismatch, "rows were evaluated on different utterance counts");
  }
}

std::string format_mos(double mean, std::optional<double> ci95) {
  std::string out = fixed(mean, 2);
  if (ci95) out += "±" + fixed(*ci95, 3);
  return out;
}

std::string format_psnr(double psnr) { return std::isinf(psnr) ? "inf" : fixed(psnr, 2); }

MetricReport build_report(const std::vector<EvalResult>& evals,
                          const std::vector<mos::MosSummary>& mos,
                          const std::map<std::string, bench::ModelMetadata>& metadata,
                          const std::map<std::string, std::map<std::string, double>>& rtf) {
  if (evals.empty()) throw Error(ErrorCode::Usage, "report needs at least one eval result");
  MetricReport r;
  r.corpus = evals.front().corpus;
  std::map<std::string, MosCell> mos_by_system;
  for (const auto& m : mos) mos_by_system[m.system] = {m.mean, m.ci95_half_width};

  std::set<std::string> systems;
  for (const auto& e : evals) {
    if (e.corpus != r.corpus) {
      throw Error(ErrorCode::SchemaMismatch,
                  "eval results mix corpora " + r.corpus + " and " + e.corpus);
    }
    ReportRow row{e.system, e.ssim, e.ls_mse, e.psnr, e.fad, std::nullopt, e.n_utterances()};
    if (auto it = mos_by_system.find(e.system); it != mos_by_system.end()) row.mos = it->second;
    r.rows.push_back(row);
    systems.insert(e.system);
  }
  for (const auto& [name, md] : metadata) systems.insert(name);
  for (const auto& [name, by_device] : rtf) systems.insert(name);
  for (const auto& name : systems) {
    ComplexityRow c{name, {}, {}};
    if (auto it = metadata.find(name); it != metadata.end()) c.metadata = it->second;
    if (auto it = rtf.find(name); it != rtf.end()) c.median_rtf = it->second;
    if (c.metadata.params_m || c.metadata.gflops || !c.median_rtf.empty()) {
      r.complexity.push_back(std::move(c));
    }
  }
  r.check_consistency();
  return r;
}

std::string render_markdown(const MetricReport& r) {
  r.check_consistency();
  auto opt = [](const std::optional<double>& v, int digits) {
    return v ? fixed(*v, digits) : std::string("-");
  };
  std::ostringstream out;
  out << "## " << r.corpus << "\n\n";
  out << "| System | SSIM | LS-MSE | PSNR | FAD | MOS |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const auto& row : r.rows) {
    out << "| " << row.system << " | " << fixed(row.ssim, 2) << " | " << fixed(row.ls_mse, 3)
        << " | " << format_psnr(row.psnr) << " | " << opt(row.fad, 2) << " | "
        << (row.mos ? format_mos(row.mos->mean, row.mos->ci95) : std::string("-")) << " |\n";
  }
  if (!r.rows.empty()) {
    out << "\nMetrics averaged over " << r.rows.front().n_utterances << " utterances.\n";
  }

  if (!r.complexity.empty()) {
    std::set<std::string> devices;
    for (const auto& c : r.complexity) {
      for (const auto& [device, v] : c.median_rtf) devices.insert(device);
    }
    out << "\n| Model | #Param (M) | GFLOPS |";
    for (const auto& d : devices) out << " RTF " << d << " |";
    out << "\n|---|---|---|";
    for (std::size_t i = 0; i < devices.size(); ++i) out << "---|";
    out << "\n";
    for (const auto& c : r.complexity) {
      out << "| " << c.system << " | " << opt(c.metadata.params_m, 2) << " | "
          << opt(c.metadata.gflops, 2) << " |";
      for (const auto& d : devices) {
        const auto it = c.median_rtf.find(d);
        out << ' ' << (it == c.median_rtf.end() ? std::string("-") : fixed(it->second, 3)) << " |";
      }
      out << "\n";
    }
  }
  return out.str();
}

std::string render_csv(const MetricReport& r) {
  r.check_consistency();
  std::ostringstream out;
  out << "corpus,system,n_utterances,ssim,ls_mse,psnr,fad,mos,mos_ci95\n";
  for (const auto& row : r.rows) {
    out << r.corpus << ',' << row.system << ',' << row.n_utterances << ',' << full(row.ssim) << ','
        << full(row.ls_mse) << ',' << full(row.psnr) << ',' << (row.fad ? full(*row.fad) : "") << ','
        << (row.mos ? full(row.mos->mean) : "") << ','
        << (row.mos && row.mos->ci95 ? full(*row.mos->ci95) : "") << '\n';
  }
  return out.str();
}

std::vector<mos::MosSummary> mos_summary_from_json(std::string_view text) {
  try {
    std::vector<mos::MosSummary> out;
    for (const auto& s : json::parse(text)) {
      mos::MosSummary m;
      m.system = s.at("system").get<std::string>();
      m.n = s.at("n").get<std::size_t>();
      m.mean = s.at("mos").get<double>();
      if (!s.at("ci95").is_null()) m.ci95_half_width = s.at("ci95").get<double>();
      out.push_back(std::move(m));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("MOS summary: ") + e.what());
  }
}

std::string mos_summary_to_json(const std::vector<mos::MosSummary>& summary) {
  json out = json::array();
  for (const auto& s : summary) {
    out.push_back({{"system", s.system},
                   {"n", s.n},
                   {"mos", s.mean},
                   {"ci95", s.ci95_half_width ? json(*s.ci95_half_width) : json(nullptr)}});
  }
  return out.dump(2) + "\n";
}

std::map<std::string, bench::ModelMetadata> metadata_from_json(std::string_view text) {
  try {
    std::map<std::string, bench::ModelMetadata> out;
    const json parsed = json::parse(text);
    for (const auto& [name, v] : parsed.items()) {
      bench::ModelMetadata md;
      if (v.contains("params_m") && !v["params_m"].is_null()) md.params_m = v["params_m"].get<double>();
      if (v.contains("gflops") && !v["gflops"].is_null()) md.gflops = v["gflops"].get<double>();
      out[name] = md;
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("metadata: ") + e.what());
  }
}

}  // namespace vocbench::report
