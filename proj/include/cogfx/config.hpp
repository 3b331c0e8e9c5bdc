#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cogfx/analysis.hpp"
#include "cogfx/backend.hpp"
#include "cogfx/mock.hpp"
#include "cogfx/promptgen.hpp"

namespace cogfx {

struct PrimingEntry {
  PrimingVariation variation = PrimingVariation::kQuestion;
  std::vector<int> lengths{4, 5, 6};
  std::vector<int> spacings{5, 10, 15};
  std::size_t per_length = 100;
  // Tab-separated association corpus; relative paths resolve against the
  // config file's directory.
  std::string corpus;
  std::size_t catch_trials = 100;
};

struct DistanceEntry {
  std::string set;
  bool spaced = false;
};

struct SnarcEntry {
  int experiment = 1;
  SnarcAxis axis = SnarcAxis::kHorizontal;
  std::vector<int> levels{2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  double stop_threshold = 0.6;
};

struct CongruityEntry {
  std::string set;
  bool spaced = false;
  int number_variation = 1;
};

struct AnchoringEntry {
  int experiment = 1;
  int min_length = 40;
  int max_length = 60;
  std::size_t per_cell = 20;
};

using ExperimentEntry =
    std::variant<PrimingEntry, DistanceEntry, SnarcEntry, CongruityEntry, AnchoringEntry>;

struct BackendSection {
  std::string kind = "mock";  // mock | live
  BackendConfig live;
  double failure_ceiling = 0.05;
  int estimate_positions = 3;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::string output_dir = "out";
  BackendSection backend;
  PlantSpec mock;
  bool mock_seed_set = false;  // otherwise the plant follows the run seed
  FilterPolicy filter;
  bool welch = false;
  std::vector<ExperimentEntry> experiments;
  // Directory against which relative corpus paths resolve. Not serialized.
  std::filesystem::path base_dir;

  // Seed required by priming catch trials and anchoring; range checks.
  void validate() const;
  // Effective plant: the mock section with its seed defaulted to the run seed.
  PlantSpec plant() const;
  // SHA-256 over the canonical serialization (output_dir excluded).
  std::string digest() const;
};

// Strict: unknown keys anywhere raise ConfigError.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);

}  // namespace cogfx
