#include "cogfx/stimuli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cogfx/error.hpp"

namespace cogfx {

namespace {

constexpr std::string_view kConsonants = "bcdfghjklmnpqrstvwxyz";

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

bool has_outer_space(std::string_view s) {
  return s.empty() || std::isspace(static_cast<unsigned char>(s.front())) ||
         std::isspace(static_cast<unsigned char>(s.back()));
}

double parse_score(const std::string& field, std::size_t line_no) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("priming corpus: bad association score '" + field + "'", line_no);
  }
  if (value < 0.0 || value > 1.0) {
    throw ParseError("priming corpus: association score outside [0,1]", line_no);
  }
  return value;
}

StimulusSet make_set(std::string name, SetKind kind,
                     std::initializer_list<std::string_view> words,
                     double magnitude_step = 0.0) {
  StimulusSet set{std::move(name), kind, {}};
  int rank = 1;
  for (auto w : words) {
    StimulusItem item{std::string(w), rank, std::nullopt};
    if (magnitude_step > 0.0) item.magnitude = magnitude_step * rank;
    set.items.push_back(std::move(item));
    ++rank;
  }
  return set;
}

}  // namespace

std::string_view to_string(SetKind kind) {
  switch (kind) {
    case SetKind::kAnimal: return "animal";
    case SetKind::kNumberWord: return "number-word";
    case SetKind::kMonth: return "month";
    case SetKind::kLetter: return "letter";
    case SetKind::kNonword: return "nonword";
    case SetKind::kCharSequence: return "char-sequence";
  }
  return "unknown";
}

std::string_view to_string(AnchorCategory category) {
  return category == AnchorCategory::kSmall ? "small-anchor" : "large-anchor";
}

bool StimulusSet::fixed_length() const {
  if (items.empty()) return true;
  const auto n = items.front().text.size();
  return std::all_of(items.begin(), items.end(),
                     [n](const StimulusItem& i) { return i.text.size() == n; });
}

PrimingCorpus parse_priming_triples(std::istream& in) {
  PrimingCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    const auto fields = split_tabs(line);
    if (fields.size() != 5 && fields.size() != 7) {
      throw ParseError("priming corpus: expected 5 or 7 tab-separated fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const bool is_word = (i == 0 || i == 1 || i == 3 || i == 5);
      if (is_word && has_outer_space(fields[i])) {
        throw ParseError("priming corpus: empty or padded word field", line_no);
      }
    }

    PrimingTriple triple;
    triple.target = fields[0];
    triple.related_prime = fields[1];
    triple.related_association = parse_score(fields[2], line_no);

    std::optional<std::pair<std::string, double>> best;
    for (std::size_t i = 3; i + 1 < fields.size(); i += 2) {
      const double score = parse_score(fields[i + 1], line_no);
      if (score < kMaxUnrelatedAssociation && (!best || score < best->second)) {
        best = std::make_pair(fields[i], score);
      }
    }
    if (!best) {
      ++corpus.excluded_association;
      continue;
    }
    const auto len = triple.target.size();
    if (len < 4 || len > 6) {
      ++corpus.excluded_length;
      continue;
    }
    triple.unrelated_prime = best->first;
    triple.unrelated_association = best->second;
    corpus.triples.push_back(std::move(triple));
  }
  return corpus;
}

PrimingCorpus load_priming_triples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("priming corpus: cannot open " + path.string(), 0);
  return parse_priming_triples(in);
}

TargetSelection select_priming_targets(std::span<const PrimingTriple> triples,
                                       std::size_t per_length) {
  if (per_length == 0) throw ConfigError("select_priming_targets: per_length must be >= 1");
  TargetSelection out;
  for (int len : {4, 5, 6}) {
    std::vector<PrimingTriple> pool;
    for (const auto& t : triples) {
      if (static_cast<int>(t.target.size()) == len &&
          t.unrelated_association < kMaxUnrelatedAssociation) {
        pool.push_back(t);
      }
    }
    std::stable_sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
      if (a.related_association != b.related_association) {
        return a.related_association > b.related_association;
      }
      return a.target < b.target;
    });
    if (pool.size() < per_length) out.short_supply = true;
    pool.resize(std::min(pool.size(), per_length));
    out.per_length[len] = pool.size();
    out.triples.insert(out.triples.end(), pool.begin(), pool.end());
  }
  return out;
}

bool is_vowel_free(std::string_view text) {
  return std::none_of(text.begin(), text.end(), [](char c) {
    switch (std::tolower(static_cast<unsigned char>(c))) {
      case 'a': case 'e': case 'i': case 'o': case 'u': return true;
      default: return false;
    }
  });
}

std::vector<StimulusItem> generate_nonwords(std::size_t count, std::size_t length,
                                            std::uint64_t seed) {
  if (length == 0) throw ConfigError("generate_nonwords: length must be >= 1");
  // Number of distinct sequences, saturating once it exceeds any sane count.
  std::size_t available = 1;
  for (std::size_t i = 0; i < length && available <= count; ++i) {
    available *= kConsonants.size();
  }
  if (count > available) {
    throw ConfigError("generate_nonwords: only " + std::to_string(available) +
                      " distinct sequences of length " + std::to_string(length));
  }
  SeededRng rng(seed);
  std::set<std::string> seen;
  std::vector<StimulusItem> out;
  out.reserve(count);
  while (out.size() < count) {
    std::string word(length, ' ');
    for (auto& c : word) {
      c = kConsonants[rng.uniform_int(0, kConsonants.size() - 1)];
    }
    if (seen.insert(word).second) {
      out.push_back({word, static_cast<int>(out.size()) + 1, std::nullopt});
    }
  }
  return out;
}

std::string generate_anchor_sequence(std::size_t length, SeededRng& rng) {
  std::string out;
  out.reserve(length);
  const auto n = static_cast<std::int64_t>(kAnchorAlphabet.size());
  for (std::size_t i = 0; i < length; ++i) {
    if (out.empty()) {
      out.push_back(kAnchorAlphabet[rng.uniform_int(0, n - 1)]);
    } else {
      // Draw among the n-1 characters that differ from the previous one.
      const auto prev = kAnchorAlphabet.find(out.back());
      auto pick = rng.uniform_int(0, n - 2);
      if (pick >= static_cast<std::int64_t>(prev)) ++pick;
      out.push_back(kAnchorAlphabet[pick]);
    }
  }
  return out;
}

std::string generate_anchor_sequence(std::size_t length, std::uint64_t seed) {
  SeededRng rng(seed);
  return generate_anchor_sequence(length, rng);
}

int sample_anchor(AnchorCategory category, SeededRng& rng) {
  return category == AnchorCategory::kSmall
             ? static_cast<int>(rng.uniform_int(10, 29))
             : static_cast<int>(rng.uniform_int(71, 90));
}

const std::map<std::string, StimulusSet>& builtin_sets() {
  static const std::map<std::string, StimulusSet> sets = [] {
    std::map<std::string, StimulusSet> m;
    auto add = [&m](StimulusSet s) { m.emplace(s.name, std::move(s)); };
    add(make_set("3-animals", SetKind::kAnimal, {"ant", "bat", "owl", "cat", "pig", "cow"}));
    add(make_set("5-animals", SetKind::kAnimal, {"snail", "raven", "koala", "camel", "whale"}));
    add(make_set("paivio", SetKind::kAnimal,
                 {"ant", "rat", "goose", "wolf", "donkey", "bear", "whale"}));
    add(make_set("4-animals", SetKind::kAnimal, {"moth", "frog", "duck", "goat", "puma", "bear"}));
    add(make_set("digits", SetKind::kNumberWord,
                 {"one", "two", "three", "four", "five", "six", "seven", "eight", "nine"}, 1.0));
    add(make_set("tens", SetKind::kNumberWord,
                 {"ten", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty",
                  "ninety"},
                 10.0));
    add(make_set("hundreds", SetKind::kNumberWord,
                 {"one hundred", "two hundred", "three hundred", "four hundred", "five hundred",
                  "six hundred", "seven hundred", "eight hundred", "nine hundred"},
                 100.0));
    add(make_set("months", SetKind::kMonth,
                 {"January", "February", "March", "April", "May", "June", "July", "August",
                  "September"}));
    add(make_set("letters", SetKind::kLetter, {"a", "b", "c", "d", "e", "f", "g", "h", "i"}));
    return m;
  }();
  return sets;
}

const StimulusSet& builtin_set(std::string_view name) {
  const auto& sets = builtin_sets();
  const auto it = sets.find(std::string(name));
  if (it == sets.end()) throw ConfigError("unknown stimulus set '" + std::string(name) + "'");
  return it->second;
}

nlohmann::json to_json(const StimulusSet& set) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : set.items) {
    nlohmann::json j{{"text", item.text}, {"ordinal_rank", item.ordinal_rank}};
    if (item.magnitude) j["magnitude"] = *item.magnitude;
    items.push_back(std::move(j));
  }
  return {{"name", set.name}, {"kind", to_string(set.kind)}, {"items", std::move(items)}};
}

nlohmann::json builtin_sets_json() {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, set] : builtin_sets()) out[name] = to_json(set);
  return out;
}

}  // namespace cogfx
