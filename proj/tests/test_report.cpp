#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <regex>

#include "cogfx/error.hpp"
#include "cogfx/report.hpp"

using namespace cogfx;

namespace {

EffectReport sample_report() {
  EffectReport r;
  r.metadata.model = "mock-0123";
  r.metadata.config_digest = "abc";
  r.metadata.generated_at = "2026-01-01T00:00:00Z";
  r.metadata.assumptions = default_assumptions(false);

  ExperimentResult p;
  p.experiment_id = "priming-sentence";
  p.analysis = AnalysisKind::kConditionContrast;
  p.item_label = "words";
  p.baseline_condition = "unrelated";
  p.favored_condition = "related";
  EffectRow row;
  row.label = "4-sentence";
  row.mean_a = 0.7149;
  row.mean_b = 0.735;
  row.p = 0.000123;
  row.t = -4.5;
  row.df = 946;
  row.n_items = 79;
  row.n_a = row.n_b = 474;
  row.expected_df = 946;
  p.rows.push_back(row);
  EffectRow empty;
  empty.label = "6-sentence";
  empty.skipped = true;
  empty.p = std::nan("");
  empty.t = std::nan("");
  p.rows.push_back(empty);
  p.catch_mean = 0.996;
  p.catch_valid = true;
  p.scored = 1000;
  p.not_relevant = 3;
  r.experiments.push_back(p);

  ExperimentResult d;
  d.experiment_id = "distance-paivio";
  d.analysis = AnalysisKind::kDistanceAnova;
  AnovaRow a;
  a.label = "distance-paivio";
  a.F = 39.45;
  a.df_between = 5;
  a.df_within = 5034;
  a.mse = 0.16;
  a.p = 1e-30;
  a.buckets = {{1, 0.6, 0.01, 1440}, {2, 0.7, 0.01, 1200}, {3, 0.8, 0.02, 960}};
  d.anova = a;
  r.experiments.push_back(d);
  update_run_validity(r);
  return r;
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_mean(0.7149) == "0.71");
  CHECK(format_mean(0.125) == "0.12");
  CHECK(format_mean(0.375) == "0.38");
  CHECK(format_mean(0.625) == "0.62");
  CHECK(format_p(0.0004) == "<0.001");
  CHECK(format_p(0.28786) == "0.2879");
  CHECK(format_p(0.5) == "0.5000");
  CHECK(format_p(std::nan("")) == "n/a");
}

TEST_CASE("rendered means match stored means to display precision") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const double v = u(gen);
    const double shown = std::strtod(format_mean(v).c_str(), nullptr);
    CHECK(std::fabs(shown - v) <= 0.005 + 1e-12);
  }
}

TEST_CASE("text table layout") {
  const auto r = sample_report();
  const auto text = render_table(r);
  CHECK(text.find("analyzed words") != std::string::npos);
  CHECK(std::regex_search(text, std::regex(R"(4-sentence\s+0\.71\s+0\.73\s+<0\.001\s+-4\.50\s+946\s+79)")));
  CHECK(std::regex_search(text, std::regex(R"(6-sentence .*skipped .* 0\n)")));
  CHECK(text.find("F(5, 5034)=39.45, p<0.001, MSE=0.16") != std::string::npos);
  CHECK(text.find("Run validity (catch trials): valid") != std::string::npos);
  CHECK(text.find("df audit: all rows consistent") != std::string::npos);
  CHECK(text.find("2026") == std::string::npos);
}

TEST_CASE("df audit flags rows inconsistent with the design") {
  auto r = sample_report();
  r.experiments[0].rows[0].df = 940;
  const auto f = audit_df(r);
  REQUIRE(f.size() == 1);
  CHECK(f[0].expected_df == 946);
  CHECK(render_table(r).find("MISMATCH") != std::string::npos);
}

TEST_CASE("CSV round trip") {
  auto r = sample_report();
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    EffectRow row;
    row.label = "row, \"" + std::to_string(i) + "\"";
    row.mean_a = u(gen);
    row.mean_b = u(gen) * 1e-7;
    row.p = std::fabs(u(gen)) * 1e-200;
    row.t = u(gen) * 1e5;
    row.df = 100 + i;
    row.n_items = static_cast<std::size_t>(i);
    r.experiments[0].rows.push_back(row);
  }
  const auto csv = render_csv(r);
  CHECK(csv.rfind("experiment,mean_a,mean_b,p,t,df,n_items\n", 0) == 0);
  const auto parsed = parse_effect_csv(csv);
  const auto& rows = r.experiments[0].rows;
  REQUIRE(parsed.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(parsed[i].experiment == rows[i].label);
    auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    CHECK(same(parsed[i].mean_a, rows[i].mean_a));
    CHECK(same(parsed[i].mean_b, rows[i].mean_b));
    CHECK(same(parsed[i].p, rows[i].p));
    CHECK(same(parsed[i].t, rows[i].t));
    CHECK(same(parsed[i].df, rows[i].df));
    CHECK(parsed[i].n_items == rows[i].n_items);
  }
  CHECK_THROWS_AS(parse_effect_csv("wrong,header\n"), ParseError);
}

TEST_CASE("JSON export round trip reproduces tables") {
  const auto r = sample_report();
  const auto doc = export_run(r);
  const auto j = nlohmann::json::parse(doc);
  CHECK(j.at("schema_version") == kReportSchemaVersion);
  CHECK(j.at("metadata").at("not_relevant").at("priming-sentence") == 3);
  const auto back = import_run(doc);
  CHECK(render_table(back) == render_table(r));
  CHECK(render_csv(back) == render_csv(r));
  CHECK(export_run(back) == doc);

  auto wrong = j;
  wrong["schema_version"] = kReportSchemaVersion + 1;
  CHECK_THROWS_AS(import_run(wrong.dump()), ParseError);
  CHECK_THROWS_AS(import_run("{"), ParseError);
}

TEST_CASE("distance curve SVG") {
  const std::vector<BucketStat> b{{1, 0.6, 0.02, 10}, {2, 0.7, 0.02, 10}, {3, 0.8, 0.02, 10}};
  const auto svg = render_distance_curve(b, "distance <paivio>");
  CHECK(svg == render_distance_curve(b, "distance <paivio>"));
  CHECK(svg.find("&lt;paivio&gt;") != std::string::npos);
  std::smatch m;
  REQUIRE(std::regex_search(svg, m, std::regex(R"re(<polyline[^>]*points="([^"]*)")re")));
  std::vector<double> ys;
  const std::string pts = m[1];
  std::regex pair(R"(([\d.]+),([\d.]+))");
  for (auto it = std::sregex_iterator(pts.begin(), pts.end(), pair); it != std::sregex_iterator();
       ++it) {
    ys.push_back(std::stod((*it)[2]));
  }
  REQUIRE(ys.size() == 3);
  // Larger means sit higher on the page: smaller pixel y.
  CHECK(ys[0] > ys[1]);
  CHECK(ys[1] > ys[2]);
  const std::vector<BucketStat> one{{1, 0.6, 0.0, 1}};
  CHECK_THROWS_AS(render_distance_curve(one, "x"), ConfigError);
}

TEST_CASE("run validity aggregates catch results") {
  auto r = sample_report();
  CHECK(r.metadata.run_valid == true);
  r.experiments[0].catch_valid = false;
  update_run_validity(r);
  CHECK(r.metadata.run_valid == false);
  r.experiments[0].catch_valid.reset();
  update_run_validity(r);
  CHECK_FALSE(r.metadata.run_valid.has_value());
}
