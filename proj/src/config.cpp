#include "cogfx/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "cogfx/digest.hpp"
#include "cogfx/error.hpp"
#include "cogfx/stimuli.hpp"

namespace cogfx {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

PrimingEntry parse_priming(const json& j) {
  check_keys(j, {"type", "variation", "lengths", "spacings", "per_length", "corpus",
                 "catch_trials"},
             "priming");
  PrimingEntry e;
  if (j.contains("variation")) e.variation = parse_priming_variation(j["variation"].get<std::string>());
  read(j, "lengths", e.lengths);
  read(j, "spacings", e.spacings);
  read(j, "per_length", e.per_length);
  read(j, "corpus", e.corpus);
  read(j, "catch_trials", e.catch_trials);
  return e;
}

DistanceEntry parse_distance(const json& j) {
  check_keys(j, {"type", "set", "spaced"}, "distance");
  DistanceEntry e;
  read(j, "set", e.set);
  read(j, "spaced", e.spaced);
  return e;
}

SnarcEntry parse_snarc(const json& j) {
  check_keys(j, {"type", "experiment", "axis", "levels", "stop_threshold"}, "snarc");
  SnarcEntry e;
  read(j, "experiment", e.experiment);
  if (j.contains("axis")) e.axis = parse_snarc_axis(j["axis"].get<std::string>());
  read(j, "levels", e.levels);
  read(j, "stop_threshold", e.stop_threshold);
  return e;
}

CongruityEntry parse_congruity(const json& j) {
  check_keys(j, {"type", "set", "spaced", "number_variation"}, "size_congruity");
  CongruityEntry e;
  read(j, "set", e.set);
  read(j, "spaced", e.spaced);
  read(j, "number_variation", e.number_variation);
  return e;
}

AnchoringEntry parse_anchoring(const json& j) {
  check_keys(j, {"type", "experiment", "min_length", "max_length", "per_cell"}, "anchoring");
  AnchoringEntry e;
  read(j, "experiment", e.experiment);
  read(j, "min_length", e.min_length);
  read(j, "max_length", e.max_length);
  read(j, "per_cell", e.per_cell);
  return e;
}

ExperimentEntry parse_entry(const json& j) {
  if (!j.is_object() || !j.contains("type")) {
    throw ConfigError("experiment entry needs a 'type'");
  }
  const auto type = j["type"].get<std::string>();
  if (type == "priming") return parse_priming(j);
  if (type == "distance") return parse_distance(j);
  if (type == "snarc") return parse_snarc(j);
  if (type == "size_congruity") return parse_congruity(j);
  if (type == "anchoring") return parse_anchoring(j);
  throw ConfigError("unknown experiment type '" + type + "'");
}

void parse_backend(const json& j, BackendSection& b) {
  check_keys(j, {"kind", "endpoint_url", "model", "api_key_env", "max_in_flight", "retry",
                 "request_timeout_ms", "failure_ceiling", "estimate_positions"},
             "backend");
  read(j, "kind", b.kind);
  read(j, "endpoint_url", b.live.endpoint_url);
  read(j, "model", b.live.model_name);
  read(j, "api_key_env", b.live.api_key_env_name);
  read(j, "max_in_flight", b.live.max_in_flight);
  read(j, "request_timeout_ms", b.live.request_timeout_ms);
  read(j, "failure_ceiling", b.failure_ceiling);
  read(j, "estimate_positions", b.estimate_positions);
  if (j.contains("retry")) {
    const auto& r = j["retry"];
    check_keys(r, {"max_attempts", "base_backoff_ms", "max_backoff_ms", "jitter"},
               "backend.retry");
    read(r, "max_attempts", b.live.retry.max_attempts);
    read(r, "base_backoff_ms", b.live.retry.base_backoff_ms);
    read(r, "max_backoff_ms", b.live.retry.max_backoff_ms);
    read(r, "jitter", b.live.retry.jitter);
  }
}

json entry_json(const ExperimentEntry& entry) {
  return std::visit(
      [](const auto& e) -> json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, PrimingEntry>) {
          return {{"type", "priming"},       {"variation", to_string(e.variation)},
                  {"lengths", e.lengths},    {"spacings", e.spacings},
                  {"per_length", e.per_length}, {"corpus", e.corpus},
                  {"catch_trials", e.catch_trials}};
        } else if constexpr (std::is_same_v<T, DistanceEntry>) {
          return {{"type", "distance"}, {"set", e.set}, {"spaced", e.spaced}};
        } else if constexpr (std::is_same_v<T, SnarcEntry>) {
          return {{"type", "snarc"},
                  {"experiment", e.experiment},
                  {"axis", to_string(e.axis)},
                  {"levels", e.levels},
                  {"stop_threshold", e.stop_threshold}};
        } else if constexpr (std::is_same_v<T, CongruityEntry>) {
          return {{"type", "size_congruity"},
                  {"set", e.set},
                  {"spaced", e.spaced},
                  {"number_variation", e.number_variation}};
        } else {
          return {{"type", "anchoring"},
                  {"experiment", e.experiment},
                  {"min_length", e.min_length},
                  {"max_length", e.max_length},
                  {"per_cell", e.per_cell}};
        }
      },
      entry);
}

}  // namespace

void RunConfig::validate() const {
  if (backend.kind != "mock" && backend.kind != "live") {
    throw ConfigError("backend.kind must be 'mock' or 'live'");
  }
  backend.live.validate();
  filter.validate();
  if (!(backend.failure_ceiling >= 0.0 && backend.failure_ceiling <= 1.0)) {
    throw ConfigError("backend.failure_ceiling must lie in [0, 1]");
  }
  if (backend.estimate_positions < 1 || backend.estimate_positions > 4) {
    throw ConfigError("backend.estimate_positions must lie in [1, 4]");
  }
  filter.validate();
  bool needs_seed = false;
  for (const auto& entry : experiments) {
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, PrimingEntry>) {
            if (e.corpus.empty()) throw ConfigError("priming: 'corpus' is required");
            if (e.per_length == 0) throw ConfigError("priming: per_length must be >= 1");
            if (e.catch_trials > 0) needs_seed = true;
          } else if constexpr (std::is_same_v<T, DistanceEntry>) {
            builtin_set(e.set);
            if (e.spaced && !spacing_allowed(e.set)) {
              throw ConfigError("distance: set '" + e.set + "' cannot be presented spaced");
            }
          } else if constexpr (std::is_same_v<T, SnarcEntry>) {
            if (e.experiment < 1 || e.experiment > 5) {
              throw ConfigError("snarc: experiment must be 1..5");
            }
          } else if constexpr (std::is_same_v<T, CongruityEntry>) {
            if (e.set != "numbers") builtin_set(e.set);
            if (e.spaced && !spacing_allowed(e.set == "numbers" ? "digits" : e.set)) {
              throw ConfigError("size_congruity: set '" + e.set + "' cannot be presented spaced");
            }
            if (e.number_variation != 1 && e.number_variation != 2) {
              throw ConfigError("size_congruity: number_variation must be 1 or 2");
            }
          } else {
            if (e.experiment < 1 || e.experiment > 4) {
              throw ConfigError("anchoring: experiment must be 1..4");
            }
            if (e.min_length < 1 || e.min_length > e.max_length) {
              throw ConfigError("anchoring: need 1 <= min_length <= max_length");
            }
            if (e.per_cell == 0) throw ConfigError("anchoring: per_cell must be >= 1");
            needs_seed = true;
          }
        },
        entry);
  }
  if (needs_seed && !seed) {
    throw ConfigError("'seed' is required for experiments with random generation");
  }
}

PlantSpec RunConfig::plant() const {
  PlantSpec p = mock;
  if (!mock_seed_set) p.seed = seed.value_or(0);
  return p;
}

std::string RunConfig::digest() const {
  auto j = to_json(*this);
  j.erase("output_dir");
  return sha256_hex(j.dump());
}

RunConfig parse_run_config(const json& j) {
  try {
    check_keys(j, {"seed", "output_dir", "backend", "mock", "filter", "welch", "experiments"},
               "config");
    RunConfig c;
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    read(j, "output_dir", c.output_dir);
    read(j, "welch", c.welch);
    if (j.contains("backend")) parse_backend(j["backend"], c.backend);
    if (j.contains("mock")) {
      const auto& m = j["mock"];
      if (!m.is_object()) throw ConfigError("mock: expected an object");
      const json defaults = PlantSpec{};
      for (const auto& [key, value] : m.items()) {
        if (!defaults.contains(key)) throw ConfigError("mock: unknown key '" + key + "'");
      }
      c.mock = m.get<PlantSpec>();
      c.mock_seed_set = m.contains("seed");
    }
    if (j.contains("filter")) {
      const auto& f = j["filter"];
      check_keys(f, {"high_cut", "low_cut"}, "filter");
      read(f, "high_cut", c.filter.high_cut);
      read(f, "low_cut", c.filter.low_cut);
    }
    if (j.contains("experiments")) {
      if (!j["experiments"].is_array()) throw ConfigError("experiments: expected an array");
      for (const auto& e : j["experiments"]) c.experiments.push_back(parse_entry(e));
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  auto c = parse_run_config(j);
  c.base_dir = path.parent_path();
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  if (c.seed) j["seed"] = *c.seed;
  j["output_dir"] = c.output_dir;
  j["welch"] = c.welch;
  const auto& b = c.backend;
  j["backend"] = {{"kind", b.kind},
                  {"endpoint_url", b.live.endpoint_url},
                  {"model", b.live.model_name},
                  {"api_key_env", b.live.api_key_env_name},
                  {"max_in_flight", b.live.max_in_flight},
                  {"retry",
                   {{"max_attempts", b.live.retry.max_attempts},
                    {"base_backoff_ms", b.live.retry.base_backoff_ms},
                    {"max_backoff_ms", b.live.retry.max_backoff_ms},
                    {"jitter", b.live.retry.jitter}}},
                  {"request_timeout_ms", b.live.request_timeout_ms},
                  {"failure_ceiling", b.failure_ceiling},
                  {"estimate_positions", b.estimate_positions}};
  json mock = c.mock;
  if (!c.mock_seed_set) mock.erase("seed");
  j["mock"] = std::move(mock);
  j["filter"] = {{"high_cut", c.filter.high_cut}, {"low_cut", c.filter.low_cut}};
  j["experiments"] = json::array();
  for (const auto& e : c.experiments) j["experiments"].push_back(entry_json(e));
  return j;
}

}  // namespace cogfx
