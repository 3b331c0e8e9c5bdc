#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cogfx/random.hpp"

namespace cogfx {

enum class SetKind { kAnimal, kNumberWord, kMonth, kLetter, kNonword, kCharSequence };

std::string_view to_string(SetKind kind);

struct StimulusItem {
  std::string text;
  int ordinal_rank = 0;
  // Numeric value for number words. Unset for animals, whose sets are
  // already size ordered by rank.
  std::optional<double> magnitude;
};

struct StimulusSet {
  std::string name;
  SetKind kind = SetKind::kAnimal;
  std::vector<StimulusItem> items;

  // True when every item has the same letter count.
  bool fixed_length() const;
};

struct PrimingTriple {
  std::string target;
  std::string related_prime;
  std::string unrelated_prime;
  double related_association = 0.0;
  double unrelated_association = 0.0;
};

inline constexpr double kMaxUnrelatedAssociation = 0.2;

struct PrimingCorpus {
  std::vector<PrimingTriple> triples;
  // Records with no unrelated word under kMaxUnrelatedAssociation.
  std::size_t excluded_association = 0;
  // Records whose target is not 4, 5 or 6 letters long.
  std::size_t excluded_length = 0;

  std::size_t excluded() const { return excluded_association + excluded_length; }
};

// Tab-separated records, one per line:
//   target  related  related_score  unrelated  unrelated_score  [unrelated2  unrelated2_score]
// Blank lines and lines starting with '#' are skipped. When both unrelated
// words qualify, the lower-scored one becomes the prime.
PrimingCorpus load_priming_triples(const std::filesystem::path& path);
PrimingCorpus parse_priming_triples(std::istream& in);

struct TargetSelection {
  std::vector<PrimingTriple> triples;
  std::map<int, std::size_t> per_length;
  // Some length had fewer than the requested number of triples.
  bool short_supply = false;
};

TargetSelection select_priming_targets(std::span<const PrimingTriple> triples,
                                       std::size_t per_length);

bool is_vowel_free(std::string_view text);

std::vector<StimulusItem> generate_nonwords(std::size_t count, std::size_t length,
                                            std::uint64_t seed);

inline constexpr std::string_view kAnchorAlphabet = "!#%^&*";

std::string generate_anchor_sequence(std::size_t length, SeededRng& rng);
std::string generate_anchor_sequence(std::size_t length, std::uint64_t seed);

enum class AnchorCategory { kSmall, kLarge };

std::string_view to_string(AnchorCategory category);

// small: uniform on [10, 29]; large: uniform on [71, 90].
int sample_anchor(AnchorCategory category, SeededRng& rng);

const std::map<std::string, StimulusSet>& builtin_sets();
const StimulusSet& builtin_set(std::string_view name);

nlohmann::json to_json(const StimulusSet& set);
nlohmann::json builtin_sets_json();

}  // namespace cogfx
