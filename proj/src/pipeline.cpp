#include "cogfx/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cogfx/analysis.hpp"
#include "cogfx/cache.hpp"
#include "cogfx/dispatch.hpp"
#include "cogfx/error.hpp"
#include "cogfx/mock.hpp"
#include "cogfx/random.hpp"
#include "cogfx/stimuli.hpp"

namespace cogfx {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw EmptyDataError("missing " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

Battery build_one(const PrimingEntry& e, const RunConfig& config) {
  fs::path corpus = e.corpus;
  if (corpus.is_relative() && !config.base_dir.empty()) corpus = config.base_dir / corpus;
  const auto loaded = load_priming_triples(corpus);
  const auto selection = select_priming_targets(loaded.triples, e.per_length);
  CatchTrialSpec catch_trials;
  catch_trials.count = e.catch_trials;
  catch_trials.seed = config.seed.value_or(0);
  auto battery = build_priming(e.variation, e.lengths, e.spacings, selection.triples, catch_trials);
  if (loaded.excluded() > 0) {
    battery.design.notes.push_back(
        "corpus records excluded: " + std::to_string(loaded.excluded_association) +
        " without a weak unrelated word, " + std::to_string(loaded.excluded_length) +
        " outside 4-6 letters");
  }
  if (selection.short_supply) {
    battery.design.notes.push_back("fewer targets than requested for some length");
  }
  return battery;
}

Battery build_one(const DistanceEntry& e, const RunConfig&) {
  const auto kind = builtin_set(e.set).kind;
  const auto relation =
      (kind == SetKind::kMonth || kind == SetKind::kLetter) ? Relation::kOrder : Relation::kSize;
  return build_distance(e.set, e.spaced, relation);
}

Battery build_one(const SnarcEntry& e, const RunConfig&) {
  SpacingSchedule schedule;
  schedule.levels = e.levels;
  schedule.stop_threshold = e.stop_threshold;
  return build_snarc(e.experiment, e.axis, schedule);
}

Battery build_one(const CongruityEntry& e, const RunConfig&) {
  return build_size_congruity(e.set, e.spaced, e.number_variation);
}

Battery build_one(const AnchoringEntry& e, const RunConfig& config) {
  AnchoringSpec spec;
  spec.experiment = e.experiment;
  spec.min_length = e.min_length;
  spec.max_length = e.max_length;
  spec.per_cell = e.per_cell;
  spec.seed = config.seed.value_or(0);
  return build_anchoring(spec);
}

std::shared_ptr<CompletionBackend> make_backend(const RunConfig& config,
                                                const RunOptions& options) {
  if (options.backend) return options.backend;
  if (config.backend.kind == "mock") return std::make_shared<MockBackend>(config.plant());
  return std::make_shared<CompletionsEndpoint>(config.backend.live,
                                               std::make_shared<HttplibTransport>());
}

}  // namespace

std::vector<Battery> build_batteries(const RunConfig& config) {
  std::vector<Battery> out;
  std::set<std::string> ids;
  for (const auto& entry : config.experiments) {
    auto battery = std::visit([&](const auto& e) { return build_one(e, config); }, entry);
    if (!ids.insert(battery.experiment_id).second) {
      throw ConfigError("duplicate experiment '" + battery.experiment_id + "'");
    }
    out.push_back(std::move(battery));
  }
  return out;
}

Plan make_plan(const RunConfig& config) {
  Plan plan;
  for (const auto& b : build_batteries(config)) {
    PlannedBattery p;
    p.experiment_id = b.experiment_id;
    p.instances = b.instances.size();
    p.upper_bound = b.design.analysis == AnalysisKind::kSnarc;
    for (const auto& inst : b.instances) {
      p.estimated_tokens +=
          estimate_tokens(inst, positions_for(inst, config.backend.estimate_positions));
    }
    plan.total_instances += p.instances;
    plan.total_tokens += p.estimated_tokens;
    plan.batteries.push_back(std::move(p));
  }
  return plan;
}

json plan_json(const Plan& plan) {
  json rows = json::array();
  for (const auto& b : plan.batteries) {
    rows.push_back({{"experiment", b.experiment_id},
                    {"instances", b.instances},
                    {"estimated_tokens", b.estimated_tokens},
                    {"upper_bound", b.upper_bound}});
  }
  return {{"batteries", rows},
          {"total_instances", plan.total_instances},
          {"total_tokens", plan.total_tokens}};
}

fs::path run_directory(const RunConfig& config) {
  return fs::path(config.output_dir) / config.digest().substr(0, 16);
}

RunSummary run_experiments(const RunConfig& config, const RunOptions& options) {
  config.validate();
  auto backend = make_backend(config, options);
  const auto batteries = build_batteries(config);
  if (auto* mock = dynamic_cast<MockBackend*>(backend.get())) {
    for (const auto& b : batteries) mock->register_instances(b.instances);
  }

  RunSummary summary;
  summary.run_dir = run_directory(config);
  summary.model = backend->model_id();
  fs::create_directories(summary.run_dir);

  write_text(summary.run_dir / "config.json", to_json(config).dump(2) + "\n");
  json designs = json::object();
  std::string instances_jsonl;
  for (const auto& b : batteries) {
    designs[b.experiment_id] = b.design;
    for (const auto& inst : b.instances) {
      json line = inst;
      line["battery"] = b.experiment_id;
      instances_jsonl += line.dump() + "\n";
    }
  }
  write_text(summary.run_dir / "designs.json", designs.dump(2) + "\n");
  write_text(summary.run_dir / "batteries.jsonl", instances_jsonl);

  const fs::path cache_path = options.cache_path.empty()
                                  ? fs::path(config.output_dir) / "cache.jsonl"
                                  : options.cache_path;
  if (cache_path.has_parent_path()) fs::create_directories(cache_path.parent_path());
  auto cache = std::make_shared<ResultCache>(cache_path);
  CompletionClient client(backend, cache);

  DispatchOptions dopt;
  dopt.max_in_flight = config.backend.live.max_in_flight;
  dopt.failure_ceiling = config.backend.failure_ceiling;
  dopt.estimate_positions = config.backend.estimate_positions;
  dopt.should_stop = options.should_stop;

  std::vector<std::pair<std::string, Observation>> observations;
  bool halted = false;
  auto run_batch = [&](const std::string& id, const std::vector<PromptInstance>& batch,
                       std::size_t offset) -> std::vector<Observation> {
    auto result = dispatch(batch, client, dopt);
    summary.dispatched += batch.size();
    summary.failures += result.failures.size();
    if (result.aborted) summary.aborted = true;
    if (result.cancelled) summary.cancelled = true;
    if (result.aborted || result.cancelled) {
      halted = true;
      return {};
    }
    auto scored = score_all(batch, result.results);
    for (auto& o : scored) {
      o.instance_index += offset;
      observations.emplace_back(id, o);
    }
    return scored;
  };

  for (const auto& b : batteries) {
    if (b.design.analysis != AnalysisKind::kSnarc) {
      run_batch(b.experiment_id, b.instances, 0);
    } else {
      auto batch = snarc_first_level(b);
      int level = b.design.spacing_levels.empty() ? 0 : b.design.spacing_levels.front();
      std::size_t offset = 0;
      while (!batch.empty()) {
        const auto scored = run_batch(b.experiment_id, batch, offset);
        if (halted) break;
        offset += batch.size();
        auto step = apply_stop_rule(b, scored, level);
        if (step.done) break;
        batch = std::move(step.instances);
        level = step.next_level;
      }
    }
    if (halted) break;
  }
  summary.network_calls = client.network_calls();
  summary.cache_hits = client.cache_hits();
  if (halted) return summary;

  std::string obs_jsonl;
  std::vector<Observation> flat;
  flat.reserve(observations.size());
  for (const auto& [id, o] : observations) {
    json line = o;
    line["battery"] = id;
    obs_jsonl += line.dump() + "\n";
    flat.push_back(o);
  }
  write_text(summary.run_dir / "observations.jsonl", obs_jsonl);
  {
    std::ostringstream csv;
    write_observations_csv(csv, flat);
    write_text(summary.run_dir / "observations.csv", csv.str());
  }
  json ids = json::array();
  for (const auto& b : batteries) ids.push_back(b.experiment_id);
  const json run = {{"config_digest", config.digest()},
                    {"model", summary.model},
                    {"batteries", ids},
                    {"dispatched", summary.dispatched},
                    {"network_calls", summary.network_calls},
                    {"cache_hits", summary.cache_hits},
                    {"failures", summary.failures},
                    {"completed_at", utc_now()}};
  write_text(summary.run_dir / "run.json", run.dump(2) + "\n");
  return summary;
}

EffectReport analyze_run(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw EmptyDataError("no run directory at " + run_dir.string());
  const auto run = read_json(run_dir / "run.json");
  const auto config = parse_run_config(read_json(run_dir / "config.json"));
  const auto designs = read_json(run_dir / "designs.json");

  std::map<std::string, std::vector<Observation>> by_battery;
  std::size_t total = 0;
  {
    std::ifstream in(run_dir / "observations.jsonl");
    if (!in) throw EmptyDataError("missing observations in " + run_dir.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        const auto j = json::parse(line);
        by_battery[j.at("battery").get<std::string>()].push_back(j.get<Observation>());
      } catch (const json::exception& e) {
        throw ParseError(std::string("observations: ") + e.what(), lineno);
      }
      ++total;
    }
  }
  if (total == 0) throw EmptyDataError("no observations in " + run_dir.string());

  AnalysisOptions opt;
  opt.filter = config.filter;
  opt.welch = config.welch;

  EffectReport report;
  report.metadata.model = run.at("model").get<std::string>();
  report.metadata.config_digest = run.at("config_digest").get<std::string>();
  report.metadata.generated_at = utc_now();
  report.metadata.assumptions = default_assumptions(config.welch);
  for (const auto& id : run.at("batteries")) {
    const auto name = id.get<std::string>();
    const auto design = designs.at(name).get<BatteryDesign>();
    report.experiments.push_back(analyze_battery(name, design, by_battery[name], opt));
  }
  update_run_validity(report);
  return report;
}

std::vector<PrimingTriple> synthetic_priming_triples(std::size_t per_length, std::uint64_t seed) {
  static constexpr std::string_view kConsonants = "bcdfghjklmnprstvwz";
  static constexpr std::string_view kVowels = "aeiou";
  SeededRng rng(seed);
  std::set<std::string> used;
  auto word = [&](int len) {
    for (;;) {
      std::string w;
      for (int i = 0; i < len; ++i) {
        const auto& pool = (i % 2 == 0) ? kConsonants : kVowels;
        w += pool[rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1)];
      }
      if (used.insert(w).second) return w;
    }
  };
  std::vector<PrimingTriple> out;
  for (int len : {4, 5, 6}) {
    for (std::size_t i = 0; i < per_length; ++i) {
      PrimingTriple t;
      t.target = word(len);
      t.related_prime = word(5);
      t.unrelated_prime = word(5);
      t.related_association = 0.9 - 0.5 * static_cast<double>(i) / static_cast<double>(per_length);
      t.unrelated_association = 0.01;
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<MockValidationCell> mock_validate(const MockValidationOptions& options) {
  const auto triples = synthetic_priming_triples(options.items, options.base_seed);
  CatchTrialSpec no_catch;
  no_catch.count = 0;
  const auto battery =
      build_priming(PrimingVariation::kQuestion, {5}, options.spacings, triples, no_catch);

  std::vector<MockValidationCell> cells;
  for (double delta : options.deltas) {
    MockValidationCell cell;
    cell.delta = delta;
    for (std::size_t s = 0; s < options.seeds; ++s) {
      PlantSpec plant;
      plant.mu = options.mu;
      plant.delta = delta;
      plant.sigma = options.sigma;
      plant.seed = options.base_seed + s;
      std::vector<Observation> obs;
      obs.reserve(battery.instances.size());
      for (std::size_t i = 0; i < battery.instances.size(); ++i) {
        const auto& inst = battery.instances[i];
        obs.push_back(score(inst, i, mock_complete(inst, plant, 1)));
      }
      const auto result = analyze_battery(battery.experiment_id, battery.design, obs);
      ++cell.seeds;
      if (result.rows.empty() || result.rows.front().skipped) continue;
      const auto& row = result.rows.front();
      cell.detected_05 += row.p < 0.05;
      cell.detected_001 += row.p < 0.001;
      cell.right_direction += row.mean_b > row.mean_a;
    }
    cells.push_back(cell);
  }
  return cells;
}

}  // namespace cogfx
