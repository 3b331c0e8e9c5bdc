// Offline acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "cogfx/analysis.hpp"
#include "cogfx/batteries.hpp"
#include "cogfx/cache.hpp"
#include "cogfx/mock.hpp"
#include "cogfx/pipeline.hpp"
#include "cogfx/promptgen.hpp"
#include "cogfx/stats.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace cogfx;
using nlohmann::json;
using testsupport::TempDir;

namespace {

// Collects failed checks for one criterion.
struct Checker {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  template <class A, class B>
  void equal(const A& actual, const B& expected, const std::string& what) {
    if (!(actual == expected)) {
      std::ostringstream s;
      s << what << ": got " << actual << ", want " << expected;
      failures.push_back(s.str());
    }
  }
};

using Clock = std::chrono::steady_clock;

bool run_criterion(const std::string& id, const std::string& title, double budget_s,
                   const std::function<void(Checker&)>& body) {
  Checker c;
  const auto start = Clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.failures.push_back(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (secs >= budget_s) c.failures.push_back(fmt::format("runtime {:.2f}s over {:.0f}s", secs, budget_s));
  const bool ok = c.failures.empty();
  std::cout << fmt::format("[{}] {} {} ({:.2f}s)\n", ok ? "PASS" : "FAIL", id, title, secs);
  for (const auto& f : c.failures) std::cout << "       " << f << "\n";
  return ok;
}

// ---- AC1 ----

void battery_combinatorics(Checker& c) {
  AnchoringSpec spec;
  spec.seed = 1;
  c.equal(build_anchoring(spec).instances.size(), std::size_t{840}, "anchoring instances");
  c.equal(expansion_size(comparison_template(ComparisonKind::kAnimals, false),
                         VariationAxes::comparison({"smaller", "bigger"})),
          std::size_t{240}, "animal pair variations");
  c.equal(expansion_size(comparison_template(ComparisonKind::kNumbers, false),
                         VariationAxes::comparison({"less", "greater"})),
          std::size_t{120}, "number pair variations");
  const auto tmpl = priming_template(PrimingVariation::kQuestion);
  const auto per_condition = expansion_size(tmpl, VariationAxes::priming());
  c.equal(per_condition, std::size_t{6}, "priming variations per condition");
  c.equal(per_condition * 2, std::size_t{12}, "priming per (word, spacing)");
}

// ---- AC2 / AC8 ----

json priming_config(const std::filesystem::path& out, double catch_confidence) {
  // Pinned ceiling items leave 79, 89 and 95 analyzed targets for lengths
  // 4, 5 and 6; four pinned paivio pairs leave 17.
  json pinned = json::object();
  const auto triples = synthetic_priming_triples(100, 5);
  std::size_t want_drop[7] = {0, 0, 0, 0, 21, 11, 5};
  std::size_t dropped[7] = {};
  for (const auto& t : triples) {
    const auto len = t.target.size();
    if (dropped[len] < want_drop[len]) {
      pinned[t.target] = 0.995;
      ++dropped[len];
    }
  }
  for (const auto* pair : {"ant|rat", "goose|wolf", "donkey|bear", "bear|whale"}) pinned[pair] = 0.995;
  return json{{"seed", 5},
              {"output_dir", out.string()},
              {"mock",
               {{"mu", 0.8},
                {"delta", 0.05},
                {"sigma", 0.05},
                {"seed", 17},
                {"catch_confidence", catch_confidence},
                {"item_confidence", pinned}}},
              {"experiments",
               json::array({json{{"type", "priming"},
                                 {"variation", "sentence"},
                                 {"corpus", "corpus.tsv"},
                                 {"per_length", 100}},
                            json{{"type", "size_congruity"}, {"set", "paivio"}},
                            json{{"type", "size_congruity"}, {"set", "numbers"}},
                            json{{"type", "anchoring"}}})}};
}

EffectReport run_priming_suite(const std::filesystem::path& dir, double catch_confidence) {
  const auto triples = synthetic_priming_triples(100, 5);
  testsupport::write_corpus(dir / "corpus.tsv", triples);
  const auto cfg_path = dir / "config.json";
  {
    std::ofstream(cfg_path) << priming_config(dir / "out", catch_confidence).dump(2);
  }
  const auto config = load_run_config(cfg_path);
  const auto summary = run_experiments(config);
  if (summary.aborted || summary.cancelled) throw std::runtime_error("mock run did not complete");
  return analyze_run(summary.run_dir);
}

const EffectRow* find_row(const EffectReport& r, const std::string& label) {
  for (const auto& e : r.experiments) {
    for (const auto& row : e.rows) {
      if (row.label == label) return &row;
    }
  }
  return nullptr;
}

void check_df(Checker& c, const EffectReport& r, const std::string& label, std::size_t items,
              double df) {
  const auto* row = find_row(r, label);
  if (!row) {
    c.failures.push_back("missing row " + label);
    return;
  }
  c.equal(row->n_items, items, label + " analyzed items");
  c.equal(row->df, df, label + " df");
  c.equal(row->expected_df, static_cast<long>(df), label + " design df");
}

void df_reconstruction(Checker& c, const EffectReport& r) {
  check_df(c, r, "4-sentence", 79, 946);
  check_df(c, r, "5-sentence", 89, 1066);
  check_df(c, r, "6-sentence", 95, 1138);
  check_df(c, r, "congruity-paivio", 17, 8158);
  check_df(c, r, "congruity-numbers-1", 36, 8638);
  check_df(c, r, "anchoring-1", 21, 838);
  // Independent formulas.
  for (const auto& [label, per_item] :
       {std::pair{"4-sentence", 6}, {"congruity-paivio", 240}, {"congruity-numbers-1", 120}}) {
    if (const auto* row = find_row(r, label)) {
      c.equal(row->df, 2.0 * per_item * static_cast<double>(row->n_items) - 2.0,
              std::string(label) + " df formula");
    }
  }
}

// ---- AC3 ----

void anova_arithmetic(Checker& c) {
  PlantSpec plant;
  plant.sigma = 0.05;
  plant.seed = 3;
  for (const auto& [set, k, n] : {std::tuple{"paivio", 5L, 5034L}, {"digits", 7L, 4312L}}) {
    const auto b = build_distance(set, false, Relation::kSize);
    std::vector<std::optional<std::vector<TokenDistribution>>> results;
    for (const auto& i : b.instances) results.emplace_back(mock_complete(i, plant, 1));
    const auto obs = score_all(b.instances, results);
    const auto r = analyze_battery(b.experiment_id, b.design, obs);
    if (!r.anova) {
      c.failures.push_back(std::string(set) + ": no ANOVA");
      continue;
    }
    c.equal(r.anova->df_between, k, std::string(set) + " df between");
    c.equal(r.anova->df_within, n, std::string(set) + " df within");
    c.equal(r.anova->buckets.size(), static_cast<std::size_t>(k + 1), std::string(set) + " buckets");
  }
}

// ---- AC4 ----

void stats_oracle(Checker& c) {
  double worst_t = 0.0;
  for (double df : {1.0, 2.0, 5.0, 10.0, 100.0, 1000.0}) {
    for (int i = 0; i <= 100; ++i) {
      const double t = -5.0 + 0.1 * i;
      worst_t = std::max(worst_t, std::fabs(t_cdf(t, df) - oracle::t_cdf(t, df)));
    }
  }
  c.expect(worst_t <= 1e-6, fmt::format("t_cdf max error {:.3g}", worst_t));
  double worst_f = 0.0;
  const double dfs[] = {1.0, 5.0, 50.0, 946.0};
  for (double d1 : dfs) {
    for (double d2 : dfs) {
      for (int i = 0; i <= 50; ++i) {
        const double f = 0.2 * i;
        worst_f = std::max(worst_f, std::fabs(f_cdf(f, d1, d2) - oracle::f_cdf(f, d1, d2)));
      }
    }
  }
  c.expect(worst_f <= 1e-6, fmt::format("f_cdf max error {:.3g}", worst_f));

  std::mt19937_64 gen(2024);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<int> size(2, 40);
  double worst_rel = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> a(size(gen)), b(size(gen));
    for (auto& x : a) x = n(gen);
    for (auto& x : b) x = n(gen) + 0.3;
    const auto t = t_test_pooled(a, b);
    const std::vector<std::vector<double>> groups{a, b};
    const auto f = one_way_anova(groups);
    worst_rel = std::max(worst_rel, std::fabs(f.F - t.t * t.t) / std::max(1e-300, f.F));
  }
  c.expect(worst_rel <= 1e-9, fmt::format("F vs t^2 max relative error {:.3g}", worst_rel));
}

// ---- AC5 ----

void planted_detection(Checker& c) {
  MockValidationOptions strong;
  strong.deltas = {0.1};
  strong.sigma = 0.05;
  strong.seeds = 10;
  const auto s = mock_validate(strong).front();
  c.equal(s.detected_001, s.seeds, "delta 0.1 runs with p<0.001");
  c.equal(s.right_direction, s.seeds, "delta 0.1 runs with related > unrelated");

  MockValidationOptions null;
  null.deltas = {0.0};
  null.sigma = 0.05;
  null.seeds = 100;
  const auto z = mock_validate(null).front();
  const double rate = static_cast<double>(z.detected_05) / static_cast<double>(z.seeds);
  c.expect(rate >= 0.01 && rate <= 0.12, fmt::format("false-positive rate {:.3f}", rate));

  PlantSpec plant;
  plant.mu = 0.7;
  plant.sigma = 0.05;
  plant.distance_slope = 0.02;
  plant.seed = 9;
  const auto b = build_distance("paivio", false, Relation::kSize);
  std::vector<std::optional<std::vector<TokenDistribution>>> results;
  for (const auto& i : b.instances) results.emplace_back(mock_complete(i, plant, 1));
  const auto r = analyze_battery(b.experiment_id, b.design, score_all(b.instances, results));
  if (!r.anova) {
    c.failures.push_back("distance: no ANOVA");
    return;
  }
  for (std::size_t i = 1; i < r.anova->buckets.size(); ++i) {
    c.expect(r.anova->buckets[i].mean > r.anova->buckets[i - 1].mean,
             fmt::format("bucket {} mean not above bucket {}", i + 1, i));
  }
  c.expect(r.anova->p < 0.001, fmt::format("distance ANOVA p {:.3g}", r.anova->p));
}

// ---- AC6 ----

void filtering_rules(Checker& c) {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const FilterPolicy policy;
  std::size_t omit_violations = 0;
  std::size_t include_violations = 0;
  auto draw = [&] {
    const double r = u(gen);
    if (r < 0.3) return 0.99 + (u(gen) - 0.5) * 0.02;
    if (r < 0.6) return 0.6 + (u(gen) - 0.5) * 0.02;
    return u(gen);
  };
  for (int i = 0; i < 10000; ++i) {
    const double a = draw();
    const double b = draw();
    const std::vector<ItemMeans> item{{"x", a, b}};
    const bool omitted = !filter_items(item, policy).front().retained;
    omit_violations += omitted != ((a > 0.99 && b > 0.99) || (a < 0.6 && b < 0.6));
    include_violations += include_spacing_level(a, b, policy) != ((a < 0.99 || b < 0.99) &&
                                                                  (a > 0.6 || b > 0.6));
  }
  c.equal(omit_violations, std::size_t{0}, "omission rule violations");
  c.equal(include_violations, std::size_t{0}, "inclusion rule violations");
}

// ---- AC7 ----

json resume_config(const std::filesystem::path& out) {
  return json{{"seed", 21},
              {"output_dir", out.string()},
              {"mock", {{"mu", 0.75}, {"delta", 0.04}, {"sigma", 0.05}}},
              {"experiments",
               json::array({json{{"type", "distance"}, {"set", "paivio"}},
                            json{{"type", "size_congruity"}, {"set", "numbers"}},
                            json{{"type", "anchoring"}}})}};
}

void resumability(Checker& c) {
  TempDir tmp("resume");
  const auto config = parse_run_config(resume_config(tmp.path() / "interrupted"));
  const auto batteries = build_batteries(config);
  std::set<std::string> unique;
  std::size_t total = 0;
  for (const auto& b : batteries) {
    for (const auto& i : b.instances) unique.insert(i.rendered_text);
    total += b.instances.size();
  }

  RunOptions kill;
  std::size_t polled = 0;
  kill.should_stop = [&] { return ++polled > total / 2; };
  const auto first = run_experiments(config, kill);
  c.expect(first.cancelled, "first run was not cancelled");
  c.expect(!std::filesystem::exists(first.run_dir / "observations.jsonl"),
           "cancelled run wrote observations");
  const auto cached = ResultCache(tmp.path() / "interrupted" / "cache.jsonl").size();
  // Workers also poll at battery boundaries, so the kill lands a few
  // requests short of the halfway mark.
  const double done = static_cast<double>(cached) / static_cast<double>(total);
  c.expect(std::fabs(done - 0.5) < 0.01,
           fmt::format("kill point: {} of {} cached", cached, total));

  const auto second = run_experiments(config);
  c.expect(!second.cancelled && !second.aborted, "resumed run did not complete");
  c.equal(first.network_calls + second.network_calls, unique.size(),
          "total completions vs unique prompts");
  c.equal(second.network_calls, unique.size() - cached, "completions issued on resume");
  c.equal(second.cache_hits, total - second.network_calls, "cache hits on resume");

  const auto clean_config = parse_run_config(resume_config(tmp.path() / "clean"));
  const auto clean = run_experiments(clean_config);
  c.equal(clean.network_calls, unique.size(), "clean run completions");

  const auto resumed_report = analyze_run(second.run_dir);
  const auto clean_report = analyze_run(clean.run_dir);
  write_report_files(resumed_report, second.run_dir);
  write_report_files(clean_report, clean.run_dir);
  for (const auto* name : {"report.txt", "report.csv", "observations.jsonl",
                           "distance-paivio.svg"}) {
    c.expect(testsupport::slurp(second.run_dir / name) == testsupport::slurp(clean.run_dir / name),
             std::string(name) + " differs between resumed and clean runs");
  }
}

// ---- AC8 ----

void catch_gate(Checker& c, const EffectReport& valid) {
  c.expect(valid.metadata.run_valid == true, "catch confidence 0.995 did not validate the run");
  TempDir tmp("catch");
  const auto low = run_priming_suite(tmp.path(), 0.6);
  c.expect(low.metadata.run_valid == false, "catch confidence 0.6 did not invalidate the run");
  for (const auto& e : low.experiments) {
    if (e.catch_mean) {
      c.expect(std::fabs(*e.catch_mean - 0.6) < 1e-9,
               fmt::format("catch mean {:.6f}", *e.catch_mean));
    }
  }
}

}  // namespace

int main() {
  bool ok = true;
  ok &= run_criterion("AC1", "battery combinatorics", 1.0, battery_combinatorics);

  TempDir suite("ac2");
  std::optional<EffectReport> priming;
  ok &= run_criterion("AC2", "degrees-of-freedom reconstruction", 30.0, [&](Checker& c) {
    priming = run_priming_suite(suite.path(), 0.995);
    df_reconstruction(c, *priming);
  });
  ok &= run_criterion("AC3", "ANOVA design arithmetic", 30.0, anova_arithmetic);
  ok &= run_criterion("AC4", "statistics kernel oracle", 10.0, stats_oracle);
  ok &= run_criterion("AC5", "planted-effect detection", 300.0, planted_detection);
  ok &= run_criterion("AC6", "filtering rules", 30.0, filtering_rules);
  ok &= run_criterion("AC7", "resumability", 120.0, resumability);
  ok &= run_criterion("AC8", "catch-trial gate", 60.0, [&](Checker& c) {
    if (!priming) {
      c.failures.push_back("no priming report from AC2");
      return;
    }
    catch_gate(c, *priming);
  });
  std::cout << (ok ? "acceptance: all criteria passed\n" : "acceptance: FAILED\n");
  return ok ? 0 : 1;
}
