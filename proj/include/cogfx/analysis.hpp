#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cogfx/backend.hpp"
#include "cogfx/batteries.hpp"
#include "cogfx/observation.hpp"
#include "cogfx/promptgen.hpp"

namespace cogfx {

struct FilterPolicy {
  double high_cut = 0.99;
  double low_cut = 0.6;

  void validate() const;
};

// Catch trials validate a run when their mean confidence exceeds this.
inline constexpr double kCatchValidityThreshold = 0.99;

const std::set<std::string>& answer_vocabulary();

// Trim, lowercase, and drop trailing punctuation; returns the word only if
// it is in answer_vocabulary().
std::optional<std::string> normalize_token(std::string_view token);

// Mass on correct answers over mass on relevant answers, summing every
// top-k token that normalizes to the same answer. nullopt when no token
// maps into `relevant`.
std::optional<double> confidence(const TokenDistribution& dist,
                                 std::span<const std::string> correct,
                                 std::span<const std::string> relevant);

// Argmax token per position, concatenated and trimmed; the leading digit
// run parsed as base 10.
std::optional<long> numeric_estimate(std::span<const TokenDistribution> dists);

std::string combo_key(const Coords& coords);

Observation score(const PromptInstance& instance, std::size_t index,
                  std::span<const TokenDistribution> dists);

// Scores every instance that has a result; instances without one are skipped.
std::vector<Observation> score_all(
    std::span<const PromptInstance> instances,
    std::span<const std::optional<std::vector<TokenDistribution>>> results);

void to_json(nlohmann::json& j, const Observation& o);
void from_json(const nlohmann::json& j, Observation& o);

// experiment,item,condition,variation,spacing,value,relevant
void write_observations_csv(std::ostream& out, std::span<const Observation> observations);

struct CellMean {
  std::string item;
  std::string condition;
  std::string combo;
  double mean = 0.0;
  std::size_t n_levels = 0;
};

// Mean over spacing levels within each (item, condition, combo), relevant
// observations only. Output is sorted by key.
std::vector<CellMean> average_over_spacing(std::span<const Observation> observations);

struct ItemMeans {
  std::string item;
  double mean_a = 0.0;  // baseline condition
  double mean_b = 0.0;  // favored condition
};

struct ItemDecision {
  std::string item;
  double mean_a = 0.0;
  double mean_b = 0.0;
  bool retained = true;
  std::string reason;  // "ceiling", "floor", "no-included-level", "missing-condition"
};

void to_json(nlohmann::json& j, const ItemDecision& d);
void from_json(const nlohmann::json& j, ItemDecision& d);

// Drops items with both means above high_cut or both below low_cut.
std::vector<ItemDecision> filter_items(std::span<const ItemMeans> items, const FilterPolicy& policy);

// A spacing level counts when some condition mean is under high_cut and
// some condition mean is over low_cut.
bool include_spacing_level(double congruent_mean, double incongruent_mean,
                           const FilterPolicy& policy = {});

struct EffectRow {
  std::string label;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double p = 1.0;
  double t = 0.0;
  double df = 0.0;
  std::size_t n_items = 0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  bool skipped = false;  // fewer than two values on a side
  bool degenerate = false;
  long expected_df = 0;  // from the design formula 2*k*n_items - 2
};

struct BucketStat {
  int bucket = 0;
  double mean = 0.0;
  double ci_half = 0.0;  // 95% t interval half-width
  std::size_t n = 0;
};

struct AnovaRow {
  std::string label;
  double F = 0.0;
  long df_between = 0;
  long df_within = 0;
  double mse = 0.0;
  double p = 1.0;
  bool degenerate = false;
  std::vector<BucketStat> buckets;
};

void to_json(nlohmann::json& j, const EffectRow& r);
void from_json(const nlohmann::json& j, EffectRow& r);
void to_json(nlohmann::json& j, const AnovaRow& r);
void from_json(const nlohmann::json& j, AnovaRow& r);

struct ExperimentResult {
  std::string experiment_id;
  AnalysisKind analysis = AnalysisKind::kConditionContrast;
  std::string item_label;
  std::string baseline_condition;
  std::string favored_condition;
  std::vector<EffectRow> rows;
  std::optional<AnovaRow> anova;
  std::vector<ItemDecision> items;
  std::size_t scored = 0;
  std::size_t not_relevant = 0;
  std::optional<double> catch_mean;
  std::optional<bool> catch_valid;
  std::vector<std::string> notes;
};

void to_json(nlohmann::json& j, const ExperimentResult& r);
void from_json(const nlohmann::json& j, ExperimentResult& r);

struct AnalysisOptions {
  FilterPolicy filter;
  bool welch = false;
};

ExperimentResult analyze_battery(const std::string& experiment_id, const BatteryDesign& design,
                                 std::span<const Observation> observations,
                                 const AnalysisOptions& options = {});

}  // namespace cogfx
