#include <doctest.h>

#include <cmath>

#include "vocbench/error.hpp"
#include "vocbench/metrics.hpp"
#include "vocbench/report.hpp"

using namespace vocbench;
using namespace vocbench::report;

namespace {

EvalResult eval(const std::string& system, double ls_mse, std::optional<double> fad, int n = 2) {
  EvalResult e;
  e.corpus = "ljspeech";
  e.system = system;
  e.split = "test";
  for (int i = 0; i < n; ++i) {
    e.per_utterance.push_back({"LJ001-000" + std::to_string(i + 1), 0.9, ls_mse,
                               metrics::psnr_from_mse(ls_mse)});
  }
  e.ssim = 0.9;
  e.ls_mse = ls_mse;
  e.psnr = metrics::psnr_from_mse(ls_mse);
  e.fad = fad;
  e.provider = "melstat-v1";
  e.fad_background = "reference:test";
  return e;
}

}  // namespace

TEST_CASE("MOS cell formatting") {
  CHECK(format_mos(4.10, 0.059) == "4.10±0.059");
  CHECK(format_mos(3.68, 0.082) == "3.68±0.082");
  CHECK(format_mos(4.0, 0.0) == "4.00±0.000");
  CHECK(format_mos(5.0, std::nullopt) == "5.00");
}

TEST_CASE("PSNR formatting") {
  CHECK(format_psnr(28.771) == "28.77");
  CHECK(format_psnr(metrics::kPsnrInfinity) == "inf");
}

TEST_CASE("eval JSON round trip with the infinity sentinel") {
  const auto e = eval("identity", 0.0, 0.0);
  const std::string text = eval_to_json(e);
  CHECK(text.find("\"inf\"") != std::string::npos);
  const auto back = eval_from_json(text);
  CHECK(std::isinf(back.psnr));
  CHECK(std::isinf(back.per_utterance[0].psnr));
  CHECK(back.fad == 0.0);
  CHECK(back.n_utterances() == 2);
  CHECK(back.fad_background == "reference:test");

  try {
    eval_from_json(R"({"corpus": "x"})");
    FAIL("expected SchemaMismatch");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::SchemaMismatch);
  }
}

TEST_CASE("two evals give a two-row table") {
  const auto r = build_report({eval("glim", 0.001, 2.69), eval("melgan", 0.002, std::nullopt)},
                              {{"glim", 20, 3.68, 0.082}}, {}, {});
  REQUIRE(r.rows.size() == 2);
  const auto md = render_markdown(r);
  CHECK(md.find("| glim | 0.90 | 0.001 | 30.00 | 2.69 | 3.68±0.082 |") != std::string::npos);
  CHECK(md.find("| melgan | 0.90 | 0.002 | 26.99 | - | - |") != std::string::npos);
  CHECK(md.find("averaged over 2 utterances") != std::string::npos);

  const auto csv = render_csv(r);
  CHECK(csv.starts_with("corpus,system,n_utterances,ssim,ls_mse,psnr,fad,mos,mos_ci95\n"));
  CHECK(csv.find("ljspeech,melgan,2,0.9,0.002,") != std::string::npos);
}

TEST_CASE("ground-truth MOS cell renders as in the table") {
  const auto r = build_report({eval("ground_truth", 0.0, 0.31)}, {{"ground_truth", 200, 4.10, 0.059}}, {}, {});
  CHECK(render_markdown(r).find("4.10±0.059") != std::string::npos);
}

TEST_CASE("consistency check") {
  MetricReport r;
  r.corpus = "x";
  r.rows.push_back({"ok", 0.9, 0.001, 30.005, std::nullopt, std::nullopt, 20});
  CHECK_NOTHROW(r.check_consistency());
  r.rows.push_back({"bad", 0.9, 0.001, 28.77, std::nullopt, std::nullopt, 20});
  CHECK_THROWS_AS(r.check_consistency(), Error);
  CHECK_THROWS_AS(render_markdown(r), Error);

  r.rows.pop_back();
  r.rows.push_back({"short", 0.9, 0.01, 20.0, std::nullopt, std::nullopt, 19});
  CHECK_THROWS_AS(r.check_consistency(), Error);

  CHECK_THROWS_AS(build_report({eval("a", 0.001, {}), eval("b", 0.001, {}, 3)}, {}, {}, {}), Error);
}

TEST_CASE("complexity table from metadata and RTF") {
  const auto md = metadata_from_json(R"({"melgan": {"params_m": 4.26, "gflops": null}})");
  REQUIRE(md.count("melgan"));
  CHECK(md.at("melgan").params_m == 4.26);
  CHECK_FALSE(md.at("melgan").gflops.has_value());

  const auto r = build_report({eval("melgan", 0.001, {})}, {}, md,
                              {{"melgan", {{"cpu", 0.029}, {"gpu", 0.001}}}});
  REQUIRE(r.complexity.size() == 1);
  const auto text = render_markdown(r);
  CHECK(text.find("| Model | #Param (M) | GFLOPS | RTF cpu | RTF gpu |") != std::string::npos);
  CHECK(text.find("| melgan | 4.26 | - | 0.029 | 0.001 |") != std::string::npos);
}

TEST_CASE("MOS summary JSON") {
  const std::vector<mos::MosSummary> s{{"gt", 4, 4.0, 0.0}, {"one", 1, 3.0, std::nullopt}};
  const auto back = mos_summary_from_json(mos_summary_to_json(s));
  REQUIRE(back.size() == 2);
  CHECK(back[0].system == "gt");
  CHECK(back[0].ci95_half_width == 0.0);
  CHECK_FALSE(back[1].ci95_half_width.has_value());
  CHECK_THROWS_AS(mos_summary_from_json("[{\"system\": 1}]"), Error);
}
