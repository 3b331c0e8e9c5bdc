#include "cogfx/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include "cogfx/error.hpp"
#include "cogfx/stats.hpp"

namespace cogfx {

namespace {

nlohmann::json number_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double number_from_json(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool contains(std::span<const std::string> set, const std::string& v) {
  return std::find(set.begin(), set.end(), v) != set.end();
}

struct Sides {
  std::vector<double> a;
  std::vector<double> b;
};

EffectRow contrast_row(const std::string& label, const Sides& sides, std::size_t n_items,
                       std::size_t per_item, bool welch) {
  EffectRow row;
  row.label = label;
  row.n_items = n_items;
  row.n_a = sides.a.size();
  row.n_b = sides.b.size();
  row.mean_a = mean(sides.a);
  row.mean_b = mean(sides.b);
  row.expected_df = n_items == 0 ? 0 : static_cast<long>(2 * per_item * n_items) - 2;
  if (sides.a.size() < 2 || sides.b.size() < 2) {
    row.skipped = true;
    row.p = std::numeric_limits<double>::quiet_NaN();
    row.t = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  const auto tt = welch ? t_test_welch(sides.a, sides.b) : t_test_pooled(sides.a, sides.b);
  row.t = tt.t;
  row.df = tt.df;
  row.p = tt.p;
  row.degenerate = tt.degenerate;
  return row;
}

// Per-item condition means over cell means, for items with both conditions.
std::vector<ItemMeans> item_means(std::span<const CellMean> cells, const BatteryDesign& design,
                                  std::vector<ItemDecision>& missing) {
  std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> acc;
  for (const auto& c : cells) {
    auto& cell = acc[c.item][c.condition];
    cell.first += c.mean;
    ++cell.second;
  }
  std::vector<ItemMeans> out;
  for (const auto& [item, conds] : acc) {
    const auto a = conds.find(design.baseline_condition);
    const auto b = conds.find(design.favored_condition);
    if (a == conds.end() || b == conds.end()) {
      ItemDecision d{item, 0.0, 0.0, false, "missing-condition"};
      if (a != conds.end()) d.mean_a = a->second.first / a->second.second;
      if (b != conds.end()) d.mean_b = b->second.first / b->second.second;
      missing.push_back(d);
      continue;
    }
    out.push_back({item, a->second.first / a->second.second, b->second.first / b->second.second});
  }
  return out;
}

void analyze_contrast(ExperimentResult& result, const BatteryDesign& design,
                      std::span<const Observation> observations, const AnalysisOptions& opt) {
  // Row label: instance experiment id (priming batteries hold one row per
  // target length).
  std::map<std::string, std::vector<Observation>> by_row;
  std::vector<double> catch_values;
  for (const auto& o : observations) {
    if (o.condition == "catch") {
      if (o.relevant) catch_values.push_back(o.value);
      continue;
    }
    if (o.relevant) by_row[o.experiment_id].push_back(o);
  }
  if (!catch_values.empty()) {
    result.catch_mean = mean(catch_values);
    result.catch_valid = *result.catch_mean > kCatchValidityThreshold;
  }

  for (const auto& [label, obs] : by_row) {
    const auto cells = average_over_spacing(obs);
    std::size_t partial = 0;
    if (design.spacing_levels.size() > 1) {
      std::set<std::string> items_partial;
      for (const auto& c : cells) {
        if (c.n_levels < design.spacing_levels.size()) items_partial.insert(c.item);
      }
      partial = items_partial.size();
    }
    std::vector<ItemDecision> missing;
    const auto means = item_means(cells, design, missing);
    auto decisions = filter_items(means, opt.filter);

    std::set<std::string> retained;
    for (const auto& d : decisions) {
      if (d.retained) retained.insert(d.item);
    }
    Sides sides;
    for (const auto& c : cells) {
      if (!retained.count(c.item)) continue;
      if (c.condition == design.baseline_condition) sides.a.push_back(c.mean);
      if (c.condition == design.favored_condition) sides.b.push_back(c.mean);
    }
    result.rows.push_back(contrast_row(label, sides, retained.size(),
                                       design.values_per_item_condition, opt.welch));
    for (auto& d : decisions) {
      d.item = label + ":" + d.item;
      result.items.push_back(std::move(d));
    }
    for (auto& d : missing) {
      d.item = label + ":" + d.item;
      result.items.push_back(std::move(d));
    }
    if (partial > 0) {
      result.notes.push_back(label + ": " + std::to_string(partial) +
                             " items averaged over a subset of spacing levels");
    }
  }
}

void analyze_snarc(ExperimentResult& result, const BatteryDesign& design,
                   std::span<const Observation> observations, const AnalysisOptions& opt) {
  // digit -> level -> condition -> (sum, n)
  std::map<std::string, std::map<int, std::map<std::string, std::pair<double, std::size_t>>>> acc;
  for (const auto& o : observations) {
    if (!o.relevant) continue;
    auto& cell = acc[o.item][o.spacing_level][o.condition];
    cell.first += o.value;
    ++cell.second;
  }
  std::map<std::string, std::set<int>> included;
  for (const auto& [digit, levels] : acc) {
    auto& inc = included[digit];
    for (const auto& [level, conds] : levels) {
      const auto c = conds.find(design.favored_condition);
      const auto i = conds.find(design.baseline_condition);
      if (c == conds.end() || i == conds.end()) continue;
      if (include_spacing_level(c->second.first / c->second.second,
                                i->second.first / i->second.second, opt.filter)) {
        inc.insert(level);
      }
    }
  }
  std::vector<Observation> kept;
  for (const auto& o : observations) {
    if (o.relevant && included[o.item].count(o.spacing_level)) kept.push_back(o);
  }
  const auto cells = average_over_spacing(kept);

  Sides sides;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_digit;
  for (const auto& c : cells) {
    if (c.condition == design.baseline_condition) {
      sides.a.push_back(c.mean);
      per_digit[c.item].first.push_back(c.mean);
    } else if (c.condition == design.favored_condition) {
      sides.b.push_back(c.mean);
      per_digit[c.item].second.push_back(c.mean);
    }
  }
  std::size_t analyzed = 0;
  for (const auto& [digit, inc] : included) {
    ItemDecision d;
    d.item = digit;
    d.mean_a = mean(per_digit[digit].first);
    d.mean_b = mean(per_digit[digit].second);
    d.retained = !inc.empty();
    if (!d.retained) d.reason = "no-included-level";
    analyzed += d.retained;
    result.items.push_back(std::move(d));
  }
  result.rows.push_back(contrast_row(result.experiment_id, sides, analyzed,
                                     design.values_per_item_condition, opt.welch));
}

void analyze_distance(ExperimentResult& result, std::span<const Observation> observations) {
  std::map<int, std::vector<double>> groups;
  for (const auto& o : observations) {
    if (o.relevant && o.distance) groups[*o.distance].push_back(o.value);
  }
  AnovaRow row;
  row.label = result.experiment_id;
  std::vector<std::vector<double>> samples;
  for (const auto& [bucket, values] : groups) {
    BucketStat b{bucket, mean(values), 0.0, values.size()};
    if (values.size() >= 2) {
      b.ci_half = t_quantile(0.975, static_cast<double>(values.size() - 1)) *
                  std::sqrt(sample_variance(values) / static_cast<double>(values.size()));
    }
    row.buckets.push_back(b);
    samples.push_back(values);
  }
  std::size_t n = 0;
  for (const auto& s : samples) n += s.size();
  if (samples.size() >= 2 && n > samples.size()) {
    const auto a = one_way_anova(samples);
    row.F = a.F;
    row.df_between = a.df_between;
    row.df_within = a.df_within;
    row.mse = a.mse;
    row.p = a.p;
    row.degenerate = a.degenerate;
  } else {
    row.p = std::numeric_limits<double>::quiet_NaN();
    result.notes.push_back("ANOVA skipped: fewer than two populated buckets");
  }
  result.anova = std::move(row);
}

void analyze_anchoring(ExperimentResult& result, const BatteryDesign& design,
                       std::span<const Observation> observations, const AnalysisOptions& opt) {
  Sides sides;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_length;
  for (const auto& o : observations) {
    if (!o.relevant) continue;
    if (o.condition == design.baseline_condition) {
      sides.a.push_back(o.value);
      ++per_length[o.item].first;
    } else if (o.condition == design.favored_condition) {
      sides.b.push_back(o.value);
      ++per_length[o.item].second;
    }
  }
  std::size_t analyzed = 0;
  for (const auto& [len, counts] : per_length) {
    if (counts.first > 0 && counts.second > 0) ++analyzed;
  }
  result.rows.push_back(contrast_row(result.experiment_id, sides, analyzed,
                                     design.values_per_item_condition, opt.welch));
}

}  // namespace

void FilterPolicy::validate() const {
  if (!(0.0 < low_cut && low_cut < high_cut && high_cut < 1.0)) {
    throw ConfigError("filter policy requires 0 < low_cut < high_cut < 1");
  }
}

const std::set<std::string>& answer_vocabulary() {
  static const std::set<std::string> vocab = {"yes", "no", "left", "right", "up", "down",
                                              "!",   "@",  "#",    "$",     "%"};
  return vocab;
}

std::optional<std::string> normalize_token(std::string_view token) {
  std::string s = trim(token);
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto& vocab = answer_vocabulary();
  if (vocab.count(s)) return s;
  while (!s.empty() && std::ispunct(static_cast<unsigned char>(s.back()))) s.pop_back();
  if (!s.empty() && vocab.count(s)) return s;
  return std::nullopt;
}

std::optional<double> confidence(const TokenDistribution& dist,
                                 std::span<const std::string> correct,
                                 std::span<const std::string> relevant) {
  double relevant_mass = 0.0;
  double correct_mass = 0.0;
  bool any = false;
  for (const auto& e : dist.entries) {
    const auto word = normalize_token(e.token);
    if (!word || !contains(relevant, *word)) continue;
    any = true;
    const double p = std::exp(e.logprob);
    relevant_mass += p;
    if (contains(correct, *word)) correct_mass += p;
  }
  if (!any || relevant_mass <= 0.0) return std::nullopt;
  return correct_mass / relevant_mass;
}

std::optional<long> numeric_estimate(std::span<const TokenDistribution> dists) {
  std::string text;
  for (const auto& d : dists) {
    if (!d.entries.empty()) text += d.entries.front().token;
  }
  const std::string s = trim(text);
  std::size_t n = 0;
  while (n < s.size() && std::isdigit(static_cast<unsigned char>(s[n]))) ++n;
  if (n == 0) return std::nullopt;
  long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + n, value);
  if (ec != std::errc()) return std::nullopt;
  return value;
}

std::string combo_key(const Coords& coords) { return nlohmann::json(coords).dump(); }

Observation score(const PromptInstance& inst, std::size_t index,
                  std::span<const TokenDistribution> dists) {
  Observation o;
  o.instance_index = index;
  o.experiment_id = inst.experiment_id;
  o.item = inst.item_key();
  o.condition = inst.condition;
  o.combo = combo_key(inst.variation_coords);
  o.spacing_level = inst.spacing_level;
  o.distance = inst.distance;
  o.estimate = inst.is_estimate();
  if (o.estimate) {
    if (const auto v = numeric_estimate(dists)) {
      o.relevant = true;
      o.value = static_cast<double>(*v);
    }
  } else if (!dists.empty()) {
    if (const auto c = confidence(dists.front(), inst.correct_answers, inst.relevant_answers)) {
      o.relevant = true;
      o.value = *c;
    }
  }
  return o;
}

std::vector<Observation> score_all(
    std::span<const PromptInstance> instances,
    std::span<const std::optional<std::vector<TokenDistribution>>> results) {
  std::vector<Observation> out;
  for (std::size_t i = 0; i < instances.size() && i < results.size(); ++i) {
    if (results[i]) out.push_back(score(instances[i], i, *results[i]));
  }
  return out;
}

void to_json(nlohmann::json& j, const Observation& o) {
  j = nlohmann::json{{"instance_index", o.instance_index},
                     {"experiment_id", o.experiment_id},
                     {"item", o.item},
                     {"condition", o.condition},
                     {"combo", o.combo},
                     {"spacing_level", o.spacing_level},
                     {"relevant", o.relevant},
                     {"estimate", o.estimate},
                     {"value", o.value}};
  j["distance"] = o.distance ? nlohmann::json(*o.distance) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, Observation& o) {
  j.at("instance_index").get_to(o.instance_index);
  j.at("experiment_id").get_to(o.experiment_id);
  j.at("item").get_to(o.item);
  j.at("condition").get_to(o.condition);
  j.at("combo").get_to(o.combo);
  j.at("spacing_level").get_to(o.spacing_level);
  j.at("relevant").get_to(o.relevant);
  j.at("estimate").get_to(o.estimate);
  j.at("value").get_to(o.value);
  if (j.contains("distance") && !j["distance"].is_null()) {
    o.distance = j["distance"].get<int>();
  } else {
    o.distance.reset();
  }
}

void write_observations_csv(std::ostream& out, std::span<const Observation> observations) {
  out << "experiment,item,condition,variation,spacing,value,relevant\n";
  char buf[32];
  for (const auto& o : observations) {
    std::string value;
    if (o.relevant) {
      std::snprintf(buf, sizeof buf, o.estimate ? "%.0f" : "%.17g", o.value);
      value = buf;
    }
    out << csv_field(o.experiment_id) << ',' << csv_field(o.item) << ',' << csv_field(o.condition)
        << ',' << csv_field(o.combo) << ',' << o.spacing_level << ',' << value << ','
        << (o.relevant ? "true" : "false") << '\n';
  }
}

std::vector<CellMean> average_over_spacing(std::span<const Observation> observations) {
  std::map<std::tuple<std::string, std::string, std::string>,
           std::map<int, std::pair<double, std::size_t>>>
      acc;
  for (const auto& o : observations) {
    if (!o.relevant) continue;
    auto& level = acc[{o.item, o.condition, o.combo}][o.spacing_level];
    level.first += o.value;
    ++level.second;
  }
  std::vector<CellMean> out;
  out.reserve(acc.size());
  for (const auto& [key, levels] : acc) {
    double sum = 0.0;
    for (const auto& [lvl, cell] : levels) sum += cell.first / cell.second;
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key),
                   sum / static_cast<double>(levels.size()), levels.size()});
  }
  return out;
}

void to_json(nlohmann::json& j, const ItemDecision& d) {
  j = nlohmann::json{{"item", d.item},
                     {"mean_a", d.mean_a},
                     {"mean_b", d.mean_b},
                     {"retained", d.retained},
                     {"reason", d.reason}};
}

void from_json(const nlohmann::json& j, ItemDecision& d) {
  j.at("item").get_to(d.item);
  j.at("mean_a").get_to(d.mean_a);
  j.at("mean_b").get_to(d.mean_b);
  j.at("retained").get_to(d.retained);
  j.at("reason").get_to(d.reason);
}

std::vector<ItemDecision> filter_items(std::span<const ItemMeans> items,
                                       const FilterPolicy& policy) {
  std::vector<ItemDecision> out;
  out.reserve(items.size());
  for (const auto& m : items) {
    ItemDecision d{m.item, m.mean_a, m.mean_b, true, ""};
    if (m.mean_a > policy.high_cut && m.mean_b > policy.high_cut) {
      d.retained = false;
      d.reason = "ceiling";
    } else if (m.mean_a < policy.low_cut && m.mean_b < policy.low_cut) {
      d.retained = false;
      d.reason = "floor";
    }
    out.push_back(std::move(d));
  }
  return out;
}

bool include_spacing_level(double congruent_mean, double incongruent_mean,
                           const FilterPolicy& policy) {
  return std::min(congruent_mean, incongruent_mean) < policy.high_cut &&
         std::max(congruent_mean, incongruent_mean) > policy.low_cut;
}

void to_json(nlohmann::json& j, const EffectRow& r) {
  j = nlohmann::json{{"label", r.label},
                     {"mean_a", number_json(r.mean_a)},
                     {"mean_b", number_json(r.mean_b)},
                     {"p", number_json(r.p)},
                     {"t", number_json(r.t)},
                     {"df", number_json(r.df)},
                     {"n_items", r.n_items},
                     {"n_a", r.n_a},
                     {"n_b", r.n_b},
                     {"skipped", r.skipped},
                     {"degenerate", r.degenerate},
                     {"expected_df", r.expected_df}};
}

void from_json(const nlohmann::json& j, EffectRow& r) {
  j.at("label").get_to(r.label);
  r.mean_a = number_from_json(j.at("mean_a"));
  r.mean_b = number_from_json(j.at("mean_b"));
  r.p = number_from_json(j.at("p"));
  r.t = number_from_json(j.at("t"));
  r.df = number_from_json(j.at("df"));
  j.at("n_items").get_to(r.n_items);
  j.at("n_a").get_to(r.n_a);
  j.at("n_b").get_to(r.n_b);
  j.at("skipped").get_to(r.skipped);
  j.at("degenerate").get_to(r.degenerate);
  j.at("expected_df").get_to(r.expected_df);
}

void to_json(nlohmann::json& j, const AnovaRow& r) {
  nlohmann::json buckets = nlohmann::json::array();
  for (const auto& b : r.buckets) {
    buckets.push_back(
        {{"bucket", b.bucket}, {"mean", b.mean}, {"ci_half", b.ci_half}, {"n", b.n}});
  }
  j = nlohmann::json{{"label", r.label},
                     {"F", number_json(r.F)},
                     {"df_between", r.df_between},
                     {"df_within", r.df_within},
                     {"mse", number_json(r.mse)},
                     {"p", number_json(r.p)},
                     {"degenerate", r.degenerate},
                     {"buckets", std::move(buckets)}};
}

void from_json(const nlohmann::json& j, AnovaRow& r) {
  j.at("label").get_to(r.label);
  r.F = number_from_json(j.at("F"));
  j.at("df_between").get_to(r.df_between);
  j.at("df_within").get_to(r.df_within);
  r.mse = number_from_json(j.at("mse"));
  r.p = number_from_json(j.at("p"));
  j.at("degenerate").get_to(r.degenerate);
  r.buckets.clear();
  for (const auto& b : j.at("buckets")) {
    r.buckets.push_back({b.at("bucket").get<int>(), b.at("mean").get<double>(),
                         b.at("ci_half").get<double>(), b.at("n").get<std::size_t>()});
  }
}

void to_json(nlohmann::json& j, const ExperimentResult& r) {
  j = nlohmann::json{{"experiment_id", r.experiment_id},
                     {"analysis", to_string(r.analysis)},
                     {"item_label", r.item_label},
                     {"baseline_condition", r.baseline_condition},
                     {"favored_condition", r.favored_condition},
                     {"rows", r.rows},
                     {"items", r.items},
                     {"scored", r.scored},
                     {"not_relevant", r.not_relevant},
                     {"notes", r.notes}};
  j["anova"] = r.anova ? nlohmann::json(*r.anova) : nlohmann::json(nullptr);
  j["catch_mean"] = r.catch_mean ? nlohmann::json(*r.catch_mean) : nlohmann::json(nullptr);
  j["catch_valid"] = r.catch_valid ? nlohmann::json(*r.catch_valid) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, ExperimentResult& r) {
  j.at("experiment_id").get_to(r.experiment_id);
  r.analysis = parse_analysis_kind(j.at("analysis").get<std::string>());
  j.at("item_label").get_to(r.item_label);
  j.at("baseline_condition").get_to(r.baseline_condition);
  j.at("favored_condition").get_to(r.favored_condition);
  j.at("rows").get_to(r.rows);
  j.at("items").get_to(r.items);
  j.at("scored").get_to(r.scored);
  j.at("not_relevant").get_to(r.not_relevant);
  j.at("notes").get_to(r.notes);
  r.anova.reset();
  if (!j.at("anova").is_null()) r.anova = j["anova"].get<AnovaRow>();
  r.catch_mean.reset();
  if (!j.at("catch_mean").is_null()) r.catch_mean = j["catch_mean"].get<double>();
  r.catch_valid.reset();
  if (!j.at("catch_valid").is_null()) r.catch_valid = j["catch_valid"].get<bool>();
}

ExperimentResult analyze_battery(const std::string& experiment_id, const BatteryDesign& design,
                                 std::span<const Observation> observations,
                                 const AnalysisOptions& options) {
  options.filter.validate();
  ExperimentResult result;
  result.experiment_id = experiment_id;
  result.analysis = design.analysis;
  result.item_label = design.item_label;
  result.baseline_condition = design.baseline_condition;
  result.favored_condition = design.favored_condition;
  result.notes = design.notes;
  for (const auto& o : observations) {
    ++result.scored;
    if (!o.relevant) ++result.not_relevant;
  }
  switch (design.analysis) {
    case AnalysisKind::kConditionContrast:
      analyze_contrast(result, design, observations, options);
      break;
    case AnalysisKind::kSnarc:
      analyze_snarc(result, design, observations, options);
      break;
    case AnalysisKind::kDistanceAnova:
      analyze_distance(result, observations);
      break;
    case AnalysisKind::kAnchoring:
      analyze_anchoring(result, design, observations, options);
      break;
  }
  return result;
}

}  // namespace cogfx
