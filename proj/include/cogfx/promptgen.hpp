#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cogfx {

// Axis names, in the fixed enumeration order used by every template.
namespace axis {
inline constexpr std::string_view kLabels = "labels";
inline constexpr std::string_view kSeparator = "separator";
inline constexpr std::string_view kOrder = "order";
inline constexpr std::string_view kComparison = "comparison";
inline constexpr std::string_view kPlural = "plural";
inline constexpr std::string_view kCase = "case";
inline constexpr std::string_view kXName = "x_name";
inline constexpr std::string_view kRuleOrder = "rule_order";
inline constexpr std::string_view kMapping = "mapping";
inline constexpr std::string_view kSymbols = "symbols";
}  // namespace axis

struct LabelPair {
  std::string question;
  std::string answer;
};

// Two comparison words, the first asserting "first < second".
struct ComparisonPair {
  std::string lesser;
  std::string greater;
};

// The variation axes that stand in for multiple participants. Boolean axes
// list the values to enumerate; a template only consults the axes it uses.
struct VariationAxes {
  std::vector<LabelPair> qa_labels;
  std::vector<std::string> separators;
  std::vector<bool> order_swap{false, true};
  std::vector<ComparisonPair> comparison_words;
  std::vector<bool> plural{false, true};
  // true: the greater referent is uppercased (congruent).
  std::vector<bool> capitalize_greater{true, false};
  std::vector<std::string> response_symbols;
  std::vector<std::string> x_names;
  std::vector<bool> rule_order{false, true};
  // false: standard response mapping (small-left, or even-right for parity).
  std::vector<bool> mapping{false, true};

  // Two label pairs and three separators.
  static VariationAxes priming();
  // Five label pairs and six separators.
  static VariationAxes comparison(ComparisonPair words);

  // Enumerated values of one axis, as recorded in variation coordinates.
  std::vector<std::string> values(std::string_view axis_name) const;
};

using Coords = std::map<std::string, std::string>;
using Bindings = std::map<std::string, std::string>;

struct Resolution {
  Bindings placeholders;
  std::string condition;
  std::vector<std::string> correct;
  std::vector<std::string> relevant;
};

struct PromptTemplate {
  std::string template_id;
  std::string body;
  std::vector<std::string> axes_used;
  // Maps chosen coordinates plus stimulus bindings to placeholder text,
  // condition label and answer keys.
  std::function<Resolution(const Coords&, const Bindings&, const VariationAxes&)> resolve;
};

struct PromptInstance {
  std::string experiment_id;
  std::string template_id;
  std::string rendered_text;
  std::string condition;
  Coords variation_coords;
  std::vector<std::string> item_refs;
  std::vector<std::string> correct_answers;
  std::vector<std::string> relevant_answers;
  int spacing_level = 0;
  std::optional<int> distance;

  std::string item_key() const;
  // Anchoring prompts have no fixed answer vocabulary.
  bool is_estimate() const { return relevant_answers.empty(); }
};

void to_json(nlohmann::json& j, const PromptInstance& p);
void from_json(const nlohmann::json& j, PromptInstance& p);

// Context copied into every expanded instance.
struct ItemContext {
  std::string experiment_id;
  std::vector<std::string> item_refs;
  int spacing_level = 0;
  std::optional<int> distance;
};

std::string apply_spacing(std::string_view word, int n_spaces);

enum class CaseStyle { kUpper, kLower };
std::string apply_case(std::string_view word, CaseStyle style);

// Regular "+s" with a small irregular table (goose, wolf, ...).
std::string pluralize(std::string_view word);

// Replaces each {name} in body. Throws ConfigError on an unbound name.
std::string substitute(std::string_view body, const Bindings& values);

std::string render(const PromptTemplate& tmpl, const Coords& coords, const Bindings& bindings,
                   const VariationAxes& axes);

// Full cartesian product over tmpl.axes_used, first axis outermost.
std::vector<PromptInstance> expand(const PromptTemplate& tmpl, const VariationAxes& axes,
                                   const Bindings& bindings, const ItemContext& context);

std::size_t expansion_size(const PromptTemplate& tmpl, const VariationAxes& axes);

// ---- battery templates ----

enum class PrimingVariation { kQuestion, kSentence, kSimple };
std::string_view to_string(PrimingVariation v);
PrimingVariation parse_priming_variation(std::string_view s);

// Bindings: prime, target, condition, correct.
PromptTemplate priming_template(PrimingVariation variation);

enum class ComparisonKind { kAnimals, kNumbers, kMonths, kLetters };

// Bindings: a_text, a_value, b_text, b_value (a is the lesser referent).
// Congruity variants add the capitalization axis and uppercase one referent.
PromptTemplate comparison_template(ComparisonKind kind, bool capitalization);

enum class SnarcAxis { kHorizontal, kVertical };
std::string_view to_string(SnarcAxis a);
SnarcAxis parse_snarc_axis(std::string_view s);

// Bindings: number (as presented), value (digit).
PromptTemplate snarc_template(int experiment, SnarcAxis orientation);

// Axis values used with snarc_template for the given experiment.
VariationAxes snarc_axes(int experiment);

// Bindings: sequence, true_length, category, anchor1 [, anchor2]
// [, anchor_seq1 [, anchor_seq2]].
PromptTemplate anchoring_template(int experiment);

}  // namespace cogfx
