#include "cogfx/batteries.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "cogfx/error.hpp"

namespace cogfx {

namespace {

std::string format_value(double v) {
  if (v == std::floor(v)) return std::to_string(static_cast<long long>(v));
  return std::to_string(v);
}

double item_value(const StimulusItem& item) {
  return item.magnitude ? *item.magnitude : static_cast<double>(item.ordinal_rank);
}

ComparisonKind comparison_kind(SetKind kind) {
  switch (kind) {
    case SetKind::kAnimal: return ComparisonKind::kAnimals;
    case SetKind::kNumberWord: return ComparisonKind::kNumbers;
    case SetKind::kMonth: return ComparisonKind::kMonths;
    case SetKind::kLetter: return ComparisonKind::kLetters;
    default: throw ConfigError("set kind has no comparison template");
  }
}

ComparisonPair comparison_words(ComparisonKind kind) {
  switch (kind) {
    case ComparisonKind::kAnimals: return {"smaller", "bigger"};
    case ComparisonKind::kNumbers: return {"less", "greater"};
    case ComparisonKind::kMonths:
    case ComparisonKind::kLetters: return {"before", "after"};
  }
  return {};
}

// Every unordered pair of a set, expanded through a comparison template.
std::vector<PromptInstance> expand_pairs(const StimulusSet& set, const PromptTemplate& tmpl,
                                         const VariationAxes& axes,
                                         const std::string& experiment_id, int spaces) {
  std::vector<PromptInstance> out;
  for (std::size_t i = 0; i < set.items.size(); ++i) {
    for (std::size_t j = i + 1; j < set.items.size(); ++j) {
      const auto& a = set.items[i];
      const auto& b = set.items[j];
      const int dist = static_cast<int>(std::lround(std::abs(item_value(b) - item_value(a))));
      Bindings bindings{{"a_text", a.text},
                        {"a_value", format_value(item_value(a))},
                        {"b_text", b.text},
                        {"b_value", format_value(item_value(b))},
                        {"spaces", std::to_string(spaces)}};
      ItemContext ctx{experiment_id, {a.text, b.text}, spaces, dist};
      auto batch = expand(tmpl, axes, bindings, ctx);
      out.insert(out.end(), std::make_move_iterator(batch.begin()),
                 std::make_move_iterator(batch.end()));
    }
  }
  return out;
}

}  // namespace

bool spacing_allowed(std::string_view set_name) {
  static const std::set<std::string, std::less<>> kFixed = {"3-animals", "4-animals", "5-animals",
                                                            "digits"};
  return kFixed.count(set_name) > 0;
}

std::string_view to_string(AnalysisKind k) {
  switch (k) {
    case AnalysisKind::kConditionContrast: return "condition-contrast";
    case AnalysisKind::kDistanceAnova: return "distance-anova";
    case AnalysisKind::kSnarc: return "snarc";
    case AnalysisKind::kAnchoring: return "anchoring";
  }
  return "unknown";
}

AnalysisKind parse_analysis_kind(std::string_view s) {
  for (auto k : {AnalysisKind::kConditionContrast, AnalysisKind::kDistanceAnova,
                 AnalysisKind::kSnarc, AnalysisKind::kAnchoring}) {
    if (to_string(k) == s) return k;
  }
  throw ParseError("unknown analysis kind '" + std::string(s) + "'", 0);
}

void to_json(nlohmann::json& j, const BatteryDesign& d) {
  j = nlohmann::json{{"analysis", to_string(d.analysis)},
                     {"grouping", d.grouping},
                     {"conditions", d.conditions},
                     {"baseline_condition", d.baseline_condition},
                     {"favored_condition", d.favored_condition},
                     {"values_per_item_condition", d.values_per_item_condition},
                     {"item_label", d.item_label},
                     {"spacing_levels", d.spacing_levels},
                     {"stop_threshold", d.stop_threshold},
                     {"notes", d.notes}};
}

void from_json(const nlohmann::json& j, BatteryDesign& d) {
  d.analysis = parse_analysis_kind(j.at("analysis").get<std::string>());
  j.at("grouping").get_to(d.grouping);
  j.at("conditions").get_to(d.conditions);
  j.at("baseline_condition").get_to(d.baseline_condition);
  j.at("favored_condition").get_to(d.favored_condition);
  j.at("values_per_item_condition").get_to(d.values_per_item_condition);
  j.at("item_label").get_to(d.item_label);
  j.at("spacing_levels").get_to(d.spacing_levels);
  j.at("stop_threshold").get_to(d.stop_threshold);
  j.at("notes").get_to(d.notes);
}

void SpacingSchedule::validate() const {
  if (levels.empty()) throw ConfigError("spacing schedule is empty");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 2 || levels[i] > 20) {
      throw ConfigError("spacing levels must lie in [2, 20]");
    }
    if (i > 0 && levels[i] <= levels[i - 1]) {
      throw ConfigError("spacing levels must be strictly increasing");
    }
  }
  if (!(stop_threshold > 0.0 && stop_threshold < 1.0)) {
    throw ConfigError("stop threshold must lie in (0, 1)");
  }
}

Battery build_priming(PrimingVariation variation, const std::vector<int>& lengths,
                      const std::vector<int>& spacings, std::span<const PrimingTriple> triples,
                      const CatchTrialSpec& catch_trials) {
  if (triples.empty()) throw ConfigError("build_priming: no priming triples");
  if (spacings.empty()) throw ConfigError("build_priming: no spacing levels");
  for (int len : lengths) {
    if (len < 4 || len > 6) throw ConfigError("build_priming: lengths must be within {4,5,6}");
  }

  const auto tmpl = priming_template(variation);
  const auto axes = VariationAxes::priming();
  const std::string var_name(to_string(variation));

  Battery battery;
  battery.experiment_id = "priming-" + var_name;
  for (const auto& triple : triples) {
    const int len = static_cast<int>(triple.target.size());
    if (std::find(lengths.begin(), lengths.end(), len) == lengths.end()) continue;
    const std::string row = std::to_string(len) + "-" + var_name;
    for (int spaces : spacings) {
      for (const auto& [condition, prime] :
           {std::pair{"unrelated", triple.unrelated_prime},
            std::pair{"related", triple.related_prime}}) {
        Bindings b{{"prime", prime},
                   {"target", apply_spacing(triple.target, spaces)},
                   {"condition", condition},
                   {"correct", "yes"}};
        auto batch = expand(tmpl, axes, b, ItemContext{row, {triple.target}, spaces, {}});
        battery.instances.insert(battery.instances.end(), batch.begin(), batch.end());
      }
    }
  }
  if (battery.instances.empty()) {
    throw ConfigError("build_priming: no triples match the requested lengths");
  }

  if (catch_trials.count > 0) {
    // Catch trials use the question format with its first label pair and
    // separator; primes cycle through the unrelated primes.
    const auto catch_tmpl = priming_template(PrimingVariation::kQuestion);
    const Coords coords{{std::string(axis::kLabels), "Q&A"},
                        {std::string(axis::kSeparator), ":"}};
    const auto nonwords =
        generate_nonwords(catch_trials.count, catch_trials.length, catch_trials.seed);
    for (std::size_t i = 0; i < nonwords.size(); ++i) {
      const auto& prime = triples[i % triples.size()].unrelated_prime;
      Bindings b{{"prime", prime},
                 {"target", apply_spacing(nonwords[i].text, catch_trials.spacing)},
                 {"condition", "catch"},
                 {"correct", "no"}};
      PromptInstance inst;
      inst.experiment_id = battery.experiment_id + "-catch";
      inst.template_id = catch_tmpl.template_id;
      inst.rendered_text = render(catch_tmpl, coords, b, axes);
      inst.condition = "catch";
      inst.variation_coords = coords;
      inst.item_refs = {nonwords[i].text};
      inst.correct_answers = {"no"};
      inst.relevant_answers = {"yes", "no"};
      inst.spacing_level = catch_trials.spacing;
      battery.instances.push_back(std::move(inst));
    }
  }

  auto& d = battery.design;
  d.analysis = AnalysisKind::kConditionContrast;
  d.grouping = "paired-by-item";
  d.conditions = {"unrelated", "related", "catch"};
  d.baseline_condition = "unrelated";
  d.favored_condition = "related";
  d.values_per_item_condition = expansion_size(tmpl, axes);
  d.item_label = "words";
  d.spacing_levels = spacings;
  d.notes.push_back(
      "unrelated prime: lower-scored of the corpus's unrelated words under 0.2 (assumed)");
  return battery;
}

Relation parse_relation(std::string_view s) {
  if (s == "size") return Relation::kSize;
  if (s == "order") return Relation::kOrder;
  throw ConfigError("unknown relation '" + std::string(s) + "'");
}

Battery build_distance(const std::string& set_name, bool spaced, Relation relation) {
  const auto& set = builtin_set(set_name);
  const bool ordinal = set.kind == SetKind::kMonth || set.kind == SetKind::kLetter;
  if ((relation == Relation::kOrder) != ordinal) {
    throw ConfigError("relation does not match set '" + set_name + "'");
  }
  if (spaced && !spacing_allowed(set_name)) {
    throw ConfigError("spaced presentation requires a fixed-length set, not '" + set_name + "'");
  }
  const auto kind = comparison_kind(set.kind);
  const auto tmpl = comparison_template(kind, false);
  const auto axes = VariationAxes::comparison(comparison_words(kind));

  Battery battery;
  battery.experiment_id = std::string("distance-") + (spaced ? "spaced-" : "") + set_name;
  battery.instances = expand_pairs(set, tmpl, axes, battery.experiment_id, spaced ? 1 : 0);

  std::set<int> buckets;
  for (auto& inst : battery.instances) {
    inst.condition = "d" + std::to_string(*inst.distance);
    buckets.insert(*inst.distance);
  }
  auto& d = battery.design;
  d.analysis = AnalysisKind::kDistanceAnova;
  d.grouping = "distance-bucket";
  for (int b : buckets) d.conditions.push_back("d" + std::to_string(b));
  d.values_per_item_condition = expansion_size(tmpl, axes);
  d.item_label = "pairs";
  return battery;
}

Battery build_snarc(int experiment, SnarcAxis orientation, const SpacingSchedule& schedule) {
  schedule.validate();
  const auto tmpl = snarc_template(experiment, orientation);
  const auto axes = snarc_axes(experiment);

  Battery battery;
  battery.experiment_id =
      "snarc-" + std::to_string(experiment) + "-" + std::string(to_string(orientation));
  for (int level : schedule.levels) {
    for (const auto& item : builtin_set("digits").items) {
      if (item.text == "five") continue;
      Bindings b{{"number", apply_spacing(item.text, level)},
                 {"value", format_value(*item.magnitude)}};
      auto batch = expand(tmpl, axes, b, ItemContext{battery.experiment_id, {item.text}, level, {}});
      battery.instances.insert(battery.instances.end(), batch.begin(), batch.end());
    }
  }
  auto& d = battery.design;
  d.analysis = AnalysisKind::kSnarc;
  d.grouping = "paired-by-item";
  d.conditions = {"incongruent", "congruent"};
  d.baseline_condition = "incongruent";
  d.favored_condition = "congruent";
  d.values_per_item_condition = expansion_size(tmpl, axes) / 2;
  d.item_label = "digits";
  d.spacing_levels = schedule.levels;
  d.stop_threshold = schedule.stop_threshold;
  d.notes.push_back(
      "confidences averaged over included spacing levels per (digit, variant) before the "
      "t-test (assumed)");
  if (experiment == 2) {
    d.notes.push_back("response symbols enumerated as ordered pairs of distinct symbols");
  }
  return battery;
}

std::vector<PromptInstance> snarc_first_level(const Battery& battery) {
  if (battery.design.spacing_levels.empty()) return {};
  const int first = battery.design.spacing_levels.front();
  std::vector<PromptInstance> out;
  for (const auto& inst : battery.instances) {
    if (inst.spacing_level == first) out.push_back(inst);
  }
  return out;
}

StopRuleStep apply_stop_rule(const Battery& battery, std::span<const Observation> scored,
                             int current_level) {
  StopRuleStep step;
  const auto& levels = battery.design.spacing_levels;
  const auto it = std::find(levels.begin(), levels.end(), current_level);
  if (it == levels.end()) throw ConfigError("apply_stop_rule: level not in schedule");
  if (std::next(it) == levels.end()) return step;

  // word -> condition -> (sum, count) at the current level
  std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> acc;
  for (const auto& obs : scored) {
    if (obs.spacing_level != current_level || !obs.relevant) continue;
    auto& cell = acc[obs.item][obs.condition];
    cell.first += obs.value;
    ++cell.second;
  }

  std::set<std::string> words;
  for (const auto& inst : battery.instances) {
    if (inst.spacing_level == current_level) words.insert(inst.item_key());
  }
  std::set<std::string> keep;
  for (const auto& word : words) {
    bool any_above = false;
    for (const auto& [cond, cell] : acc[word]) {
      if (cell.second > 0 && cell.first / cell.second >= battery.design.stop_threshold) {
        any_above = true;
      }
    }
    (any_above ? step.continuing : step.stopped).push_back(word);
    if (any_above) keep.insert(word);
  }

  step.next_level = *std::next(it);
  for (const auto& inst : battery.instances) {
    if (inst.spacing_level == step.next_level && keep.count(inst.item_key())) {
      step.instances.push_back(inst);
    }
  }
  step.done = step.instances.empty();
  return step;
}

Battery build_size_congruity(const std::string& set_name, bool spaced, int number_variation) {
  static const std::set<std::string> kAllowed = {"paivio", "3-animals", "4-animals", "5-animals",
                                                 "numbers"};
  if (!kAllowed.count(set_name)) {
    throw ConfigError("size congruity: invalid set '" + set_name + "'");
  }
  const bool numbers = set_name == "numbers";
  const auto& set = builtin_set(numbers ? "digits" : set_name);
  if (spaced && !spacing_allowed(numbers ? "digits" : set_name)) {
    throw ConfigError("spaced presentation requires a fixed-length set, not '" + set_name + "'");
  }
  ComparisonPair words{"smaller", "bigger"};
  if (numbers) {
    if (number_variation != 1 && number_variation != 2) {
      throw ConfigError("size congruity: number variation must be 1 or 2");
    }
    words = number_variation == 1 ? ComparisonPair{"less", "greater"}
                                  : ComparisonPair{"smaller", "larger"};
  }
  const auto tmpl =
      comparison_template(numbers ? ComparisonKind::kNumbers : ComparisonKind::kAnimals, true);
  const auto axes = VariationAxes::comparison(words);

  Battery battery;
  battery.experiment_id = std::string("congruity-") + (spaced ? "spaced-" : "") + set_name +
                          (numbers ? "-" + std::to_string(number_variation) : "");
  battery.instances = expand_pairs(set, tmpl, axes, battery.experiment_id, spaced ? 1 : 0);

  auto& d = battery.design;
  d.analysis = AnalysisKind::kConditionContrast;
  d.grouping = "paired-by-item";
  d.conditions = {"incongruent", "congruent"};
  d.baseline_condition = "incongruent";
  d.favored_condition = "congruent";
  d.values_per_item_condition = expansion_size(tmpl, axes) / 2;
  d.item_label = "pairs";
  return battery;
}

Battery build_anchoring(const AnchoringSpec& spec) {
  if (spec.per_cell < 1) throw ConfigError("anchoring: per_cell must be >= 1");
  if (spec.min_length < 1 || spec.max_length < spec.min_length) {
    throw ConfigError("anchoring: invalid length range");
  }
  const auto tmpl = anchoring_template(spec.experiment);
  const VariationAxes axes;
  const bool two_anchors = spec.experiment == 2 || spec.experiment == 4;
  const bool sequence_anchors = spec.experiment >= 3;

  Battery battery;
  battery.experiment_id = "anchoring-" + std::to_string(spec.experiment);
  SeededRng rng(spec.seed);
  for (int length = spec.min_length; length <= spec.max_length; ++length) {
    for (auto category : {AnchorCategory::kSmall, AnchorCategory::kLarge}) {
      for (std::size_t k = 0; k < spec.per_cell; ++k) {
        Bindings b{{"sequence", generate_anchor_sequence(length, rng)},
                   {"true_length", std::to_string(length)},
                   {"category", std::string(to_string(category))}};
        const int n_anchors = two_anchors ? 2 : 1;
        for (int a = 1; a <= n_anchors; ++a) {
          const int anchor = sample_anchor(category, rng);
          b["anchor" + std::to_string(a)] = std::to_string(anchor);
          if (sequence_anchors) {
            b["anchor_seq" + std::to_string(a)] = generate_anchor_sequence(anchor, rng);
          }
        }
        auto batch = expand(tmpl, axes, b,
                            ItemContext{battery.experiment_id, {std::to_string(length)}, 0, {}});
        battery.instances.insert(battery.instances.end(), batch.begin(), batch.end());
      }
    }
  }
  auto& d = battery.design;
  d.analysis = AnalysisKind::kAnchoring;
  d.grouping = "anchor-category";
  d.conditions = {"small-anchor", "large-anchor"};
  d.baseline_condition = "small-anchor";
  d.favored_condition = "large-anchor";
  d.values_per_item_condition = spec.per_cell;
  d.item_label = "lengths";
  if (two_anchors) d.notes.push_back("both anchors drawn from the same category");
  return battery;
}

std::size_t estimate_tokens(const PromptInstance& instance, int positions) {
  return (instance.rendered_text.size() + 3) / 4 + static_cast<std::size_t>(positions);
}

}  // namespace cogfx
