#pragma once

#include <cstddef>
#include <optional>
#include <string>

namespace cogfx {

// One scored query. For classification prompts value is the confidence and
// is meaningful only when relevant; for estimate prompts it is the parsed
// integer.
struct Observation {
  std::size_t instance_index = 0;
  std::string experiment_id;
  std::string item;
  std::string condition;
  std::string combo;
  int spacing_level = 0;
  std::optional<int> distance;
  bool relevant = false;
  bool estimate = false;
  double value = 0.0;
};

}  // namespace cogfx
