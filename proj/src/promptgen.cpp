#include "cogfx/promptgen.hpp"

#include <algorithm>
#include <cctype>

#include "cogfx/error.hpp"

namespace cogfx {

namespace {

const std::string& need(const Bindings& b, const std::string& key) {
  const auto it = b.find(key);
  if (it == b.end()) throw ConfigError("missing binding '" + key + "'");
  return it->second;
}

const std::string& coord(const Coords& c, std::string_view axis_name) {
  const auto it = c.find(std::string(axis_name));
  if (it == c.end()) throw ConfigError("missing coordinate '" + std::string(axis_name) + "'");
  return it->second;
}

double need_number(const Bindings& b, const std::string& key) {
  return std::stod(need(b, key));
}

std::string bool_value(std::string_view axis_name, bool v) {
  if (axis_name == axis::kOrder || axis_name == axis::kRuleOrder) {
    return v ? "swapped" : "forward";
  }
  if (axis_name == axis::kPlural) return v ? "plural" : "singular";
  if (axis_name == axis::kCase) return v ? "greater-upper" : "lesser-upper";
  if (axis_name == axis::kMapping) return v ? "reversed" : "standard";
  return v ? "true" : "false";
}

LabelPair find_labels(const VariationAxes& axes, const std::string& value) {
  for (const auto& l : axes.qa_labels) {
    if (l.question + "&" + l.answer == value) return l;
  }
  throw ConfigError("unknown label pair '" + value + "'");
}

std::pair<std::string, std::string> split_symbols(const std::string& value) {
  const auto slash = value.find('/');
  if (slash == std::string::npos) throw ConfigError("bad symbol pair '" + value + "'");
  return {value.substr(0, slash), value.substr(slash + 1)};
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

Resolution priming_resolve(const Coords& c, const Bindings& b, const VariationAxes& axes) {
  const auto labels = find_labels(axes, coord(c, axis::kLabels));
  Resolution r;
  r.placeholders = {{"q", labels.question},
                    {"a", labels.answer},
                    {"sep", coord(c, axis::kSeparator)}};
  r.condition = need(b, "condition");
  r.correct = {need(b, "correct")};
  r.relevant = {"yes", "no"};
  return r;
}

// Side words of a spatial axis: {small side, large side}.
std::pair<std::string, std::string> sides(SnarcAxis a) {
  return a == SnarcAxis::kHorizontal ? std::pair<std::string, std::string>{"left", "right"}
                                     : std::pair<std::string, std::string>{"down", "up"};
}

const std::vector<std::string> kSnarcSymbols = {"!", "@", "#", "$", "%"};

}  // namespace

VariationAxes VariationAxes::priming() {
  VariationAxes axes;
  axes.qa_labels = {{"Q", "A"}, {"Question", "Answer"}};
  axes.separators = {":", ")", "."};
  return axes;
}

VariationAxes VariationAxes::comparison(ComparisonPair words) {
  VariationAxes axes;
  axes.qa_labels = {{"Q", "A"},
                    {"Question", "Answer"},
                    {"q", "a"},
                    {"question", "answer"},
                    {"QUESTION", "ANSWER"}};
  axes.separators = {":", ")", ".", "]", "}", ";"};
  axes.comparison_words = {std::move(words)};
  return axes;
}

std::vector<std::string> VariationAxes::values(std::string_view axis_name) const {
  std::vector<std::string> out;
  auto from_bools = [&](const std::vector<bool>& v) {
    for (bool b : v) out.push_back(bool_value(axis_name, b));
  };
  if (axis_name == axis::kLabels) {
    for (const auto& l : qa_labels) out.push_back(l.question + "&" + l.answer);
  } else if (axis_name == axis::kSeparator) {
    out = separators;
  } else if (axis_name == axis::kOrder) {
    from_bools(order_swap);
  } else if (axis_name == axis::kComparison) {
    for (const auto& p : comparison_words) {
      out.push_back(p.lesser);
      out.push_back(p.greater);
    }
  } else if (axis_name == axis::kPlural) {
    from_bools(plural);
  } else if (axis_name == axis::kCase) {
    from_bools(capitalize_greater);
  } else if (axis_name == axis::kXName) {
    out = x_names;
  } else if (axis_name == axis::kRuleOrder) {
    from_bools(rule_order);
  } else if (axis_name == axis::kMapping) {
    from_bools(mapping);
  } else if (axis_name == axis::kSymbols) {
    for (const auto& first : response_symbols) {
      for (const auto& second : response_symbols) {
        if (first != second) out.push_back(first + "/" + second);
      }
    }
  } else {
    throw ConfigError("unknown axis '" + std::string(axis_name) + "'");
  }
  for (const auto& v : out) {
    if (v.find('\n') != std::string::npos) {
      throw ConfigError("axis value contains a newline");
    }
  }
  return out;
}

std::string PromptInstance::item_key() const {
  std::string key;
  for (const auto& ref : item_refs) {
    if (!key.empty()) key += '|';
    key += ref;
  }
  return key;
}

void to_json(nlohmann::json& j, const PromptInstance& p) {
  j = nlohmann::json{{"experiment_id", p.experiment_id},
                     {"template_id", p.template_id},
                     {"rendered_text", p.rendered_text},
                     {"condition", p.condition},
                     {"variation_coords", p.variation_coords},
                     {"item_refs", p.item_refs},
                     {"correct_answers", p.correct_answers},
                     {"relevant_answers", p.relevant_answers},
                     {"spacing_level", p.spacing_level}};
  j["distance"] = p.distance ? nlohmann::json(*p.distance) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, PromptInstance& p) {
  j.at("experiment_id").get_to(p.experiment_id);
  j.at("template_id").get_to(p.template_id);
  j.at("rendered_text").get_to(p.rendered_text);
  j.at("condition").get_to(p.condition);
  j.at("variation_coords").get_to(p.variation_coords);
  j.at("item_refs").get_to(p.item_refs);
  j.at("correct_answers").get_to(p.correct_answers);
  j.at("relevant_answers").get_to(p.relevant_answers);
  j.at("spacing_level").get_to(p.spacing_level);
  if (j.contains("distance") && !j["distance"].is_null()) {
    p.distance = j["distance"].get<int>();
  } else {
    p.distance.reset();
  }
}

std::string apply_spacing(std::string_view word, int n_spaces) {
  if (n_spaces <= 0 || word.size() < 2) return std::string(word);
  std::string out;
  out.reserve(word.size() + (word.size() - 1) * n_spaces);
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (i) out.append(n_spaces, ' ');
    out.push_back(word[i]);
  }
  return out;
}

std::string apply_case(std::string_view word, CaseStyle style) {
  std::string out(word);
  for (auto& c : out) {
    const auto u = static_cast<unsigned char>(c);
    c = static_cast<char>(style == CaseStyle::kUpper ? std::toupper(u) : std::tolower(u));
  }
  return out;
}

std::string pluralize(std::string_view word) {
  static const std::map<std::string, std::string, std::less<>> kIrregular = {
      {"goose", "geese"}, {"wolf", "wolves"}, {"mouse", "mice"}};
  if (const auto it = kIrregular.find(word); it != kIrregular.end()) return it->second;
  return std::string(word) + "s";
}

std::string substitute(std::string_view body, const Bindings& values) {
  std::string out;
  out.reserve(body.size() + 64);
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      const auto close = body.find('}', i + 1);
      if (close == std::string_view::npos) throw ConfigError("unterminated placeholder");
      const std::string name(body.substr(i + 1, close - i - 1));
      const auto it = values.find(name);
      if (it == values.end()) throw ConfigError("unbound placeholder '{" + name + "}'");
      out += it->second;
      i = close + 1;
    } else {
      out.push_back(body[i++]);
    }
  }
  return out;
}

std::string render(const PromptTemplate& tmpl, const Coords& coords, const Bindings& bindings,
                   const VariationAxes& axes) {
  Bindings merged = bindings;
  for (auto& [k, v] : tmpl.resolve(coords, bindings, axes).placeholders) merged[k] = v;
  return substitute(tmpl.body, merged);
}

std::size_t expansion_size(const PromptTemplate& tmpl, const VariationAxes& axes) {
  std::size_t n = 1;
  for (const auto& a : tmpl.axes_used) n *= axes.values(a).size();
  return n;
}

std::vector<PromptInstance> expand(const PromptTemplate& tmpl, const VariationAxes& axes,
                                   const Bindings& bindings, const ItemContext& context) {
  std::vector<std::vector<std::string>> axis_values;
  for (const auto& a : tmpl.axes_used) {
    axis_values.push_back(axes.values(a));
    if (axis_values.back().empty()) throw ConfigError("axis '" + a + "' has no values");
  }

  std::vector<PromptInstance> out;
  out.reserve(expansion_size(tmpl, axes));
  std::vector<std::size_t> idx(axis_values.size(), 0);
  while (true) {
    Coords coords;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      coords[tmpl.axes_used[k]] = axis_values[k][idx[k]];
    }
    Resolution res = tmpl.resolve(coords, bindings, axes);
    Bindings merged = bindings;
    for (auto& [k, v] : res.placeholders) merged[k] = v;

    PromptInstance inst;
    inst.experiment_id = context.experiment_id;
    inst.template_id = tmpl.template_id;
    inst.rendered_text = substitute(tmpl.body, merged);
    inst.condition = std::move(res.condition);
    inst.variation_coords = std::move(coords);
    inst.item_refs = context.item_refs;
    inst.correct_answers = std::move(res.correct);
    inst.relevant_answers = std::move(res.relevant);
    inst.spacing_level = context.spacing_level;
    inst.distance = context.distance;
    out.push_back(std::move(inst));

    // Odometer increment, last axis fastest.
    std::size_t k = idx.size();
    while (k > 0) {
      --k;
      if (++idx[k] < axis_values[k].size()) break;
      idx[k] = 0;
      if (k == 0) return out;
    }
    if (idx.empty()) return out;
  }
}

std::string_view to_string(PrimingVariation v) {
  switch (v) {
    case PrimingVariation::kQuestion: return "question";
    case PrimingVariation::kSentence: return "sentence";
    case PrimingVariation::kSimple: return "simple";
  }
  return "unknown";
}

PrimingVariation parse_priming_variation(std::string_view s) {
  if (s == "question") return PrimingVariation::kQuestion;
  if (s == "sentence") return PrimingVariation::kSentence;
  if (s == "simple") return PrimingVariation::kSimple;
  throw ConfigError("unknown priming variation '" + std::string(s) + "'");
}

PromptTemplate priming_template(PrimingVariation variation) {
  static constexpr std::string_view kQuery =
      "{q}{sep} Can the letter sequence \"{target}\" form a word?\n{a}{sep}";
  PromptTemplate t;
  t.template_id = "priming-" + std::string(to_string(variation));
  switch (variation) {
    case PrimingVariation::kQuestion:
      t.body = "{q}{sep} Answer with an arbitrary word.\n{a}{sep} {prime}.\n";
      break;
    case PrimingVariation::kSentence:
      t.body = "\"{prime}\" is a word.\n";
      break;
    case PrimingVariation::kSimple:
      t.body = "{prime}.\n";
      break;
  }
  t.body += kQuery;
  t.axes_used = {std::string(axis::kLabels), std::string(axis::kSeparator)};
  t.resolve = priming_resolve;
  return t;
}

PromptTemplate comparison_template(ComparisonKind kind, bool capitalization) {
  PromptTemplate t;
  std::vector<std::string> axes = {std::string(axis::kLabels), std::string(axis::kSeparator),
                                   std::string(axis::kOrder), std::string(axis::kComparison)};
  switch (kind) {
    case ComparisonKind::kAnimals:
      t.template_id = "compare-animals";
      t.body = "{q}{sep} {verb} {first} {cmp} than {second}?\n{a}{sep}";
      axes.push_back(std::string(axis::kPlural));
      break;
    case ComparisonKind::kNumbers:
      t.template_id = "compare-numbers";
      t.body = "{v1} is {first}\n{v2} is {second}\n{q}{sep} Is {v1} {cmp} than {v2}?\n{a}{sep}";
      break;
    case ComparisonKind::kMonths:
      t.template_id = "compare-months";
      t.body = "{q}{sep} Is {first} {cmp} {second}?\n{a}{sep}";
      break;
    case ComparisonKind::kLetters:
      t.template_id = "compare-letters";
      t.body = "{q}{sep} In the alphabet, is {first} {cmp} {second}?\n{a}{sep}";
      break;
  }
  if (capitalization) {
    t.template_id += "-congruity";
    axes.push_back(std::string(axis::kCase));
  }
  t.axes_used = axes;

  t.resolve = [kind, capitalization](const Coords& c, const Bindings& b,
                                     const VariationAxes& ax) {
    const auto labels = find_labels(ax, coord(c, axis::kLabels));
    const bool swapped = coord(c, axis::kOrder) == "swapped";
    const bool plural =
        kind == ComparisonKind::kAnimals && coord(c, axis::kPlural) == "plural";
    const int spaces = b.count("spaces") ? std::stoi(b.at("spaces")) : 0;

    struct Side {
      std::string text;
      double value;
      bool upper = false;
    };
    Side lesser{need(b, "a_text"), need_number(b, "a_value")};
    Side greater{need(b, "b_text"), need_number(b, "b_value")};
    for (Side* s : {&lesser, &greater}) {
      if (plural) s->text = pluralize(s->text);
      s->text = apply_spacing(s->text, spaces);
    }

    Resolution r;
    if (capitalization) {
      const bool upper_greater = coord(c, axis::kCase) == "greater-upper";
      Side& up = upper_greater ? greater : lesser;
      up.text = apply_case(up.text, CaseStyle::kUpper);
      up.upper = true;
      r.condition = upper_greater ? "congruent" : "incongruent";
    } else {
      r.condition = "distance";
    }
    // Variable letters are positional (first presented is x) and follow
    // the case of their number word.
    const Side& first = swapped ? greater : lesser;
    const Side& second = swapped ? lesser : greater;

    const std::string& cmp = coord(c, axis::kComparison);
    bool asks_less = false;
    bool found = false;
    for (const auto& p : ax.comparison_words) {
      if (cmp == p.lesser) { asks_less = true; found = true; break; }
      if (cmp == p.greater) { asks_less = false; found = true; break; }
    }
    if (!found) throw ConfigError("unknown comparison word '" + cmp + "'");
    const bool truth = asks_less ? first.value < second.value : first.value > second.value;

    r.placeholders = {{"q", labels.question},
                      {"a", labels.answer},
                      {"sep", coord(c, axis::kSeparator)},
                      {"first", first.text},
                      {"second", second.text},
                      {"cmp", cmp},
                      {"verb", plural ? "Are" : "Is"},
                      {"v1", first.upper ? "X" : "x"},
                      {"v2", second.upper ? "Y" : "y"}};
    r.correct = {yes_no(truth)};
    r.relevant = {"yes", "no"};
    return r;
  };
  return t;
}

std::string_view to_string(SnarcAxis a) {
  return a == SnarcAxis::kHorizontal ? "horizontal" : "vertical";
}

SnarcAxis parse_snarc_axis(std::string_view s) {
  if (s == "horizontal") return SnarcAxis::kHorizontal;
  if (s == "vertical") return SnarcAxis::kVertical;
  throw ConfigError("unknown SNARC axis '" + std::string(s) + "'");
}

VariationAxes snarc_axes(int experiment) {
  VariationAxes axes;
  switch (experiment) {
    case 1:
      axes.x_names = {"B", "C", "D", "E", "X", "Y", "W", "Z"};
      break;
    case 2:
      axes.x_names = {"X", "Y"};
      axes.response_symbols = kSnarcSymbols;
      break;
    case 3:
    case 4:
    case 5:
      axes.separators = {":", ";", ")", ".", "|", "]", "}"};
      break;
    default:
      throw ConfigError("SNARC experiment must be 1..5, got " + std::to_string(experiment));
  }
  return axes;
}

PromptTemplate snarc_template(int experiment, SnarcAxis orientation) {
  PromptTemplate t;
  t.template_id = "snarc-" + std::to_string(experiment) + "-" + std::string(to_string(orientation));
  const std::string rule_axes[] = {std::string(axis::kRuleOrder), std::string(axis::kMapping)};
  switch (experiment) {
    case 1:
      t.body =
          "In the following instructions, {x} is equal to 5.\n"
          "A word is about to be presented to you.\n"
          "If the word represents a number {cmp1} than {x}, respond with \"{resp1}\".\n"
          "If the word represents a number {cmp2} than {x}, respond with \"{resp2}\".\n"
          "Word: {number}\n"
          "Response:";
      t.axes_used = {std::string(axis::kXName), rule_axes[0], rule_axes[1]};
      break;
    case 2:
      t.body =
          "In the following instructions, {x} is equal to 5.\n"
          "A word is about to be presented to you.\n"
          "If the word is a spatial word associated with {side1} or the word represents a "
          "number {cmp1} than {x}, respond with {resp1}.\n"
          "If the word is a spatial word associated with {side2} or the word represents a "
          "number {cmp2} than {x}, respond with {resp2}.\n"
          "Word: {number}\n"
          "Response:";
      t.axes_used = {std::string(axis::kXName), rule_axes[0], rule_axes[1],
                     std::string(axis::kSymbols)};
      break;
    case 3:
    case 4:
    case 5: {
      t.body =
          "A word is about to be presented to you.\n"
          "If the word represents an {par1} number, respond with \"{resp1}\".\n"
          "If the word represents an {par2} number, respond with \"{resp2}\".\n";
      if (experiment == 4) t.body += "Is the number greater than five?\n";
      if (experiment == 5) {
        t.body += "After responding, write whether or not the number is greater than five.\n";
      }
      t.body += "Word{sep} {number}\nResponse{sep}";
      t.axes_used = {std::string(axis::kSeparator), rule_axes[0], rule_axes[1]};
      break;
    }
    default:
      throw ConfigError("SNARC experiment must be 1..5, got " + std::to_string(experiment));
  }

  t.resolve = [experiment, orientation](const Coords& c, const Bindings& b,
                                        const VariationAxes&) {
    const auto [small_side, large_side] = sides(orientation);
    const bool swapped = coord(c, axis::kRuleOrder) == "swapped";
    const bool standard = coord(c, axis::kMapping) == "standard";
    const double value = need_number(b, "value");
    const bool is_small = value < 5;
    Resolution r;

    if (experiment == 1 || experiment == 2) {
      // Side (exp 1) or spatial association (exp 2) grouped with "smaller".
      const std::string smaller_side = standard ? small_side : large_side;
      const std::string larger_side = standard ? large_side : small_side;
      const std::string cmp1 = swapped ? "larger" : "smaller";
      const std::string cmp2 = swapped ? "smaller" : "larger";
      r.placeholders = {{"x", coord(c, axis::kXName)}, {"cmp1", cmp1}, {"cmp2", cmp2}};
      r.condition = standard ? "congruent" : "incongruent";
      if (experiment == 1) {
        r.placeholders["resp1"] = swapped ? larger_side : smaller_side;
        r.placeholders["resp2"] = swapped ? smaller_side : larger_side;
        r.correct = {is_small ? smaller_side : larger_side};
        r.relevant = {small_side, large_side};
      } else {
        const auto [sym1, sym2] = split_symbols(coord(c, axis::kSymbols));
        r.placeholders["side1"] = swapped ? larger_side : smaller_side;
        r.placeholders["side2"] = swapped ? smaller_side : larger_side;
        r.placeholders["resp1"] = sym1;
        r.placeholders["resp2"] = sym2;
        const bool line1_matches = is_small != swapped;
        r.correct = {line1_matches ? sym1 : sym2};
        r.relevant = kSnarcSymbols;
      }
    } else {
      const std::string even_side = standard ? large_side : small_side;
      const std::string odd_side = standard ? small_side : large_side;
      const bool even = static_cast<long>(value) % 2 == 0;
      r.placeholders = {{"sep", coord(c, axis::kSeparator)},
                        {"par1", swapped ? "odd" : "even"},
                        {"par2", swapped ? "even" : "odd"},
                        {"resp1", swapped ? odd_side : even_side},
                        {"resp2", swapped ? even_side : odd_side}};
      const std::string answer = even ? even_side : odd_side;
      r.correct = {answer};
      r.relevant = {small_side, large_side};
      r.condition = (answer == (is_small ? small_side : large_side)) ? "congruent" : "incongruent";
    }
    return r;
  };
  return t;
}

PromptTemplate anchoring_template(int experiment) {
  PromptTemplate t;
  t.template_id = "anchoring-" + std::to_string(experiment);
  switch (experiment) {
    case 1:
      t.body = "a = {anchor1}\nlength = len('{sequence}') # equals to";
      break;
    case 2:
      t.body = "a = {anchor1}\nb = {anchor2}\nz = len('{sequence}') # equals to";
      break;
    case 3:
      t.body = "len('{anchor_seq1}') # equals to {anchor1}\nlen('{sequence}') # equals to";
      break;
    case 4:
      t.body =
          "len('{anchor_seq1}') # equals to {anchor1}\n"
          "len('{anchor_seq2}') # equals to {anchor2}\n"
          "len('{sequence}') # equals to";
      break;
    default:
      throw ConfigError("anchoring experiment must be 1..4, got " + std::to_string(experiment));
  }
  t.resolve = [](const Coords&, const Bindings& b, const VariationAxes&) {
    Resolution r;
    r.condition = need(b, "category");
    r.correct = {need(b, "true_length")};
    return r;
  };
  return t;
}

}  // namespace cogfx
