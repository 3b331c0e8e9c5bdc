#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogfx/observation.hpp"
#include "cogfx/promptgen.hpp"
#include "cogfx/stimuli.hpp"

namespace cogfx {

enum class AnalysisKind {
  kConditionContrast,  // two conditions, items filtered, pooled t-test
  kDistanceAnova,      // one-way ANOVA over distance buckets
  kSnarc,              // contrast with per-level inclusion and spacing average
  kAnchoring,          // estimates by anchor category
};

std::string_view to_string(AnalysisKind k);
AnalysisKind parse_analysis_kind(std::string_view s);

struct BatteryDesign {
  AnalysisKind analysis = AnalysisKind::kConditionContrast;
  std::string grouping;  // paired-by-item | distance-bucket | anchor-category
  std::vector<std::string> conditions;
  // Reported as mean_a / mean_b. The favored condition is where the effect
  // predicts higher confidence (related, congruent) or, for anchoring, the
  // large anchor.
  std::string baseline_condition;
  std::string favored_condition;
  // Per analyzed item, values entering each side of the t-test.
  std::size_t values_per_item_condition = 0;
  std::string item_label;  // words | pairs | digits | lengths
  std::vector<int> spacing_levels;
  double stop_threshold = 0.6;
  std::vector<std::string> notes;
};

void to_json(nlohmann::json& j, const BatteryDesign& d);
void from_json(const nlohmann::json& j, BatteryDesign& d);

struct Battery {
  std::string experiment_id;
  std::vector<PromptInstance> instances;
  BatteryDesign design;
};

struct SpacingSchedule {
  std::vector<int> levels{2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  double stop_threshold = 0.6;

  void validate() const;
};

struct CatchTrialSpec {
  std::size_t count = 100;
  std::size_t length = 5;
  int spacing = 15;
  std::uint64_t seed = 0;
};

Battery build_priming(PrimingVariation variation, const std::vector<int>& lengths,
                      const std::vector<int>& spacings, std::span<const PrimingTriple> triples,
                      const CatchTrialSpec& catch_trials);

// Sets whose words may be presented letter-spaced.
bool spacing_allowed(std::string_view set_name);

enum class Relation { kSize, kOrder };
Relation parse_relation(std::string_view s);

Battery build_distance(const std::string& set_name, bool spaced, Relation relation);

Battery build_snarc(int experiment, SnarcAxis orientation, const SpacingSchedule& schedule);

// Instances of the first scheduled level; always dispatched.
std::vector<PromptInstance> snarc_first_level(const Battery& battery);

struct StopRuleStep {
  bool done = true;
  int next_level = 0;
  std::vector<PromptInstance> instances;
  std::vector<std::string> continuing;
  std::vector<std::string> stopped;
};

// Given observations scored at current_level, emits next-level instances for
// every number word where either condition's mean reached the threshold.
StopRuleStep apply_stop_rule(const Battery& battery, std::span<const Observation> scored,
                             int current_level);

Battery build_size_congruity(const std::string& set_name, bool spaced, int number_variation);

struct AnchoringSpec {
  int experiment = 1;
  int min_length = 40;
  int max_length = 60;
  std::size_t per_cell = 20;
  std::uint64_t seed = 0;
};

Battery build_anchoring(const AnchoringSpec& spec);

// Rough token count: four characters per token plus decoded positions.
std::size_t estimate_tokens(const PromptInstance& instance, int positions);

}  // namespace cogfx
