#include <doctest.h>

#include <algorithm>
#include <set>

#include "cogfx/batteries.hpp"
#include "cogfx/error.hpp"
#include "cogfx/promptgen.hpp"

using namespace cogfx;

namespace {

std::size_t count_char(const std::string& s, char c) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), c));
}

const PromptInstance& find_coords(const std::vector<PromptInstance>& xs, const Coords& want) {
  for (const auto& x : xs) {
    bool match = true;
    for (const auto& [k, v] : want) {
      const auto it = x.variation_coords.find(k);
      if (it == x.variation_coords.end() || it->second != v) match = false;
    }
    if (match) return x;
  }
  throw std::runtime_error("no instance with requested coordinates");
}

}  // namespace

TEST_CASE("letter spacing") {
  CHECK(apply_spacing("cow", 1) == "c o w");
  CHECK(apply_spacing("one", 0) == "one");
  CHECK(apply_spacing("abc", 3) == "a   b   c");
  CHECK(apply_spacing("one hundred", 1) == "o n e   h u n d r e d");
  const std::string letters = "abcdefghijkl";
  for (std::size_t len = 1; len <= 12; ++len) {
    const auto w = letters.substr(0, len);
    for (int n = 0; n <= 20; ++n) {
      const auto s = apply_spacing(w, n);
      CHECK(s.size() == len + (len - 1) * static_cast<std::size_t>(n));
      CHECK(count_char(s, ' ') == (len - 1) * static_cast<std::size_t>(n));
    }
  }
}

TEST_CASE("case and plural helpers") {
  CHECK(apply_case("cow", CaseStyle::kUpper) == "COW");
  CHECK(apply_case("ONE", CaseStyle::kLower) == "one");
  CHECK(apply_case(apply_case("Cow", CaseStyle::kUpper), CaseStyle::kUpper) == "COW");
  CHECK(pluralize("cow") == "cows");
  CHECK(pluralize("goose") == "geese");
  CHECK(pluralize("wolf") == "wolves");
}

TEST_CASE("substitution requires every placeholder") {
  CHECK(substitute("{a} and {b}", {{"a", "x"}, {"b", "y"}}) == "x and y");
  CHECK_THROWS_AS(substitute("{a} and {b}", {{"a", "x"}}), ConfigError);
}

TEST_CASE("expansion sizes") {
  const Bindings animals{{"a_text", "ant"}, {"a_value", "1"}, {"b_text", "cow"},
                         {"b_value", "6"}, {"spaces", "0"}};
  const auto animal_axes = VariationAxes::comparison({"smaller", "bigger"});
  const auto animal_tmpl = comparison_template(ComparisonKind::kAnimals, false);
  CHECK(expansion_size(animal_tmpl, animal_axes) == 240);
  CHECK(expand(animal_tmpl, animal_axes, animals, {}).size() == 240);

  const auto number_tmpl = comparison_template(ComparisonKind::kNumbers, false);
  CHECK(expansion_size(number_tmpl, VariationAxes::comparison({"smaller", "larger"})) == 120);

  const auto priming_axes = VariationAxes::priming();
  const auto priming = priming_template(PrimingVariation::kQuestion);
  CHECK(expansion_size(priming, priming_axes) == 6);

  CHECK(expansion_size(snarc_template(1, SnarcAxis::kHorizontal), snarc_axes(1)) == 32);
  CHECK(expansion_size(snarc_template(3, SnarcAxis::kHorizontal), snarc_axes(3)) == 28);
  CHECK(snarc_axes(3).separators.size() == 7);
}

TEST_CASE("every battery template renders injectively with one question mark") {
  std::vector<Battery> batteries;
  batteries.push_back(build_distance("3-animals", false, Relation::kSize));
  batteries.push_back(build_distance("digits", false, Relation::kSize));
  batteries.push_back(build_distance("months", false, Relation::kOrder));
  batteries.push_back(build_distance("letters", false, Relation::kOrder));
  batteries.push_back(build_size_congruity("3-animals", false, 1));
  batteries.push_back(build_size_congruity("numbers", false, 2));
  const std::vector<PrimingTriple> triples{{"nurse", "doctor", "table", 0.8, 0.1}};
  for (auto v : {PrimingVariation::kQuestion, PrimingVariation::kSentence,
                 PrimingVariation::kSimple}) {
    CatchTrialSpec none;
    none.count = 0;
    batteries.push_back(build_priming(v, {5}, {5}, triples, none));
  }
  for (const auto& b : batteries) {
    CAPTURE(b.experiment_id);
    std::set<std::string> texts;
    for (const auto& inst : b.instances) {
      CHECK(count_char(inst.rendered_text, '?') == 1);
      CHECK(texts.insert(inst.rendered_text).second);
      CHECK(inst.rendered_text.back() != '\n');
      for (const auto& c : inst.correct_answers) {
        CHECK(std::find(inst.relevant_answers.begin(), inst.relevant_answers.end(), c) !=
              inst.relevant_answers.end());
      }
    }
  }
}

TEST_CASE("rendered examples") {
  const auto months = build_distance("months", false, Relation::kOrder);
  std::vector<PromptInstance> mar_jul;
  for (const auto& i : months.instances) {
    if (i.item_refs == std::vector<std::string>{"March", "July"}) mar_jul.push_back(i);
  }
  REQUIRE(mar_jul.size() == 120);
  const auto& x = find_coords(mar_jul, {{"labels", "Q&A"},
                                        {"separator", ")"},
                                        {"order", "forward"},
                                        {"comparison", "before"}});
  CHECK(x.rendered_text == "Q) Is March before July?\nA)");
  CHECK(x.correct_answers == std::vector<std::string>{"yes"});

  const auto snarc = build_snarc(1, SnarcAxis::kHorizontal, {});
  const auto& y = find_coords(snarc.instances, {{"x_name", "Y"}, {"mapping", "standard"}});
  CHECK(y.rendered_text.rfind("In the following instructions, Y is equal to 5.", 0) == 0);
  CHECK(y.rendered_text.size() >= 9);
  CHECK(y.rendered_text.substr(y.rendered_text.size() - 9) == "Response:");

  const auto anchoring = build_anchoring({});
  const auto& a = anchoring.instances.front();
  CHECK(a.rendered_text.rfind("a = ", 0) == 0);
  CHECK(a.rendered_text.find("\nlength = len('") != std::string::npos);
  CHECK(a.rendered_text.substr(a.rendered_text.size() - 14) == "') # equals to");
}

TEST_CASE("prompt instance JSON round trip") {
  const auto b = build_distance("digits", false, Relation::kSize);
  for (std::size_t i = 0; i < b.instances.size(); i += 97) {
    const auto& inst = b.instances[i];
    const nlohmann::json j = inst;
    const auto back = j.get<PromptInstance>();
    CHECK(nlohmann::json(back) == j);
    CHECK(back.item_key() == inst.item_key());
  }
}

TEST_CASE("enum parsers reject unknown names") {
  CHECK(parse_priming_variation("sentence") == PrimingVariation::kSentence);
  CHECK(parse_snarc_axis("vertical") == SnarcAxis::kVertical);
  CHECK_THROWS_AS(parse_priming_variation("poem"), ConfigError);
  CHECK_THROWS_AS(parse_snarc_axis("diagonal"), ConfigError);
}
