#include "cogfx/mock.hpp"

#include <algorithm>
#include <cmath>

#include "cogfx/digest.hpp"
#include "cogfx/random.hpp"

namespace cogfx {

namespace {

constexpr double kProbFloor = 1e-6;

TokenDistribution two_way(const std::string& hit, const std::string& miss, double p,
                          const std::string& hash) {
  p = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
  return TokenDistribution::from_entries({{hit, std::log(p)}, {miss, std::log1p(-p)}}, hash);
}

TokenDistribution trailing_position(const std::string& hash) {
  return TokenDistribution::from_entries({{"\n", std::log(0.9)}, {".", std::log(0.05)}}, hash);
}

std::string alternative_answer(const PromptInstance& inst) {
  // Prefer a wrong answer that the prompt itself offers.
  std::string fallback;
  for (const auto& r : inst.relevant_answers) {
    if (std::find(inst.correct_answers.begin(), inst.correct_answers.end(), r) !=
        inst.correct_answers.end()) {
      continue;
    }
    if (fallback.empty()) fallback = r;
    if (inst.rendered_text.find(r) != std::string::npos) return r;
  }
  return fallback;
}

}  // namespace

std::string PlantSpec::digest() const { return sha256_hex(nlohmann::json(*this).dump()); }

void to_json(nlohmann::json& j, const PlantSpec& p) {
  j = nlohmann::json{{"mu", p.mu},
                     {"delta", p.delta},
                     {"sigma", p.sigma},
                     {"seed", p.seed},
                     {"clamp_low", p.clamp_low},
                     {"clamp_high", p.clamp_high},
                     {"distance_slope", p.distance_slope},
                     {"spacing_slope", p.spacing_slope},
                     {"catch_confidence", p.catch_confidence},
                     {"item_confidence", p.item_confidence},
                     {"not_relevant_rate", p.not_relevant_rate},
                     {"anchor_bias_small", p.anchor_bias_small},
                     {"anchor_bias_large", p.anchor_bias_large},
                     {"estimate_noise", p.estimate_noise}};
}

void from_json(const nlohmann::json& j, PlantSpec& p) {
  const PlantSpec d;
  p.mu = j.value("mu", d.mu);
  p.delta = j.value("delta", d.delta);
  p.sigma = j.value("sigma", d.sigma);
  p.seed = j.value("seed", d.seed);
  p.clamp_low = j.value("clamp_low", d.clamp_low);
  p.clamp_high = j.value("clamp_high", d.clamp_high);
  p.distance_slope = j.value("distance_slope", d.distance_slope);
  p.spacing_slope = j.value("spacing_slope", d.spacing_slope);
  p.catch_confidence = j.value("catch_confidence", d.catch_confidence);
  p.item_confidence = j.value("item_confidence", d.item_confidence);
  p.not_relevant_rate = j.value("not_relevant_rate", d.not_relevant_rate);
  p.anchor_bias_small = j.value("anchor_bias_small", d.anchor_bias_small);
  p.anchor_bias_large = j.value("anchor_bias_large", d.anchor_bias_large);
  p.estimate_noise = j.value("estimate_noise", d.estimate_noise);
}

double planted_confidence(const PromptInstance& inst, const PlantSpec& plant) {
  if (inst.condition == "catch") return plant.catch_confidence;
  if (const auto it = plant.item_confidence.find(inst.item_key());
      it != plant.item_confidence.end()) {
    return it->second;
  }
  const double sign = (inst.condition == "related" || inst.condition == "congruent") ? 1.0 : 0.0;
  double p = plant.mu + plant.delta * sign - plant.spacing_slope * inst.spacing_level;
  if (inst.distance) p += plant.distance_slope * (*inst.distance - 1);
  if (plant.sigma != 0.0) p += plant.sigma * hashed_normal(inst.rendered_text, plant.seed);
  return std::clamp(p, plant.clamp_low, plant.clamp_high);
}

std::vector<TokenDistribution> mock_complete(const PromptInstance& inst, const PlantSpec& plant,
                                             int positions) {
  const std::string hash = sha256_hex(inst.rendered_text);
  std::vector<TokenDistribution> out;

  if (inst.is_estimate()) {
    const double truth = inst.correct_answers.empty() ? 0.0 : std::stod(inst.correct_answers[0]);
    const double bias =
        inst.condition == "large-anchor" ? plant.anchor_bias_large : plant.anchor_bias_small;
    double noise = 0.0;
    if (plant.estimate_noise != 0.0) {
      noise = plant.estimate_noise * hashed_normal(inst.rendered_text, plant.seed);
    }
    const long value = std::max(0L, std::lround(truth + bias + noise));
    const std::string digits = std::to_string(value);
    std::vector<std::string> tokens = {" " + digits.substr(0, 1)};
    if (digits.size() > 1) tokens.push_back(digits.substr(1));
    for (int pos = 0; pos < positions; ++pos) {
      if (pos < static_cast<int>(tokens.size())) {
        const auto& tok = tokens[pos];
        std::string alt = tok;
        char& last = alt.back();
        last = static_cast<char>('0' + (last - '0' + 1) % 10);
        out.push_back(TokenDistribution::from_entries(
            {{tok, std::log(0.9)}, {alt, std::log(0.05)}}, hash));
      } else {
        out.push_back(trailing_position(hash));
      }
    }
    return out;
  }

  if (plant.not_relevant_rate > 0.0 &&
      hashed_uniform(inst.rendered_text, plant.seed, 3) < plant.not_relevant_rate) {
    out.push_back(TokenDistribution::from_entries(
        {{" maybe", std::log(0.6)}, {" perhaps", std::log(0.3)}}, hash));
  } else {
    const std::string correct = inst.correct_answers.empty() ? "yes" : inst.correct_answers[0];
    const std::string alt = alternative_answer(inst);
    out.push_back(two_way(" " + correct, " " + (alt.empty() ? "no" : alt),
                          planted_confidence(inst, plant), hash));
  }
  for (int pos = 1; pos < positions; ++pos) out.push_back(trailing_position(hash));
  return out;
}

MockBackend::MockBackend(PlantSpec plant) : plant_(std::move(plant)) {}

void MockBackend::register_instances(std::span<const PromptInstance> instances) {
  std::lock_guard lock(mu_);
  for (const auto& inst : instances) registry_.try_emplace(inst.rendered_text, inst);
}

std::vector<TokenDistribution> MockBackend::fetch(const std::string& prompt, int positions) {
  PromptInstance inst;
  {
    std::lock_guard lock(mu_);
    if (const auto it = registry_.find(prompt); it != registry_.end()) {
      inst = it->second;
    } else {
      inst.rendered_text = prompt;
      inst.condition = "unknown";
      inst.correct_answers = {"yes"};
      inst.relevant_answers = {"yes", "no"};
    }
  }
  return mock_complete(inst, plant_, positions);
}

std::string MockBackend::model_id() const { return "mock-" + plant_.digest().substr(0, 16); }

}  // namespace cogfx
