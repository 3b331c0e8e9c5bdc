#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cogfx/backend.hpp"
#include "cogfx/promptgen.hpp"

namespace cogfx {

// Planted-effect model for the offline backend. For classification prompts
//   P(correct) = clamp(mu + delta*s + distance_slope*(d-1) - spacing_slope*n
//                      + sigma*eta(prompt), clamp_low, clamp_high)
// with s = 1 in the related/congruent condition and 0 otherwise, d the
// distance bucket, n the spacing level and eta a hashed standard normal.
// Pinned items and catch trials bypass the formula.
struct PlantSpec {
  double mu = 0.8;
  double delta = 0.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  double clamp_low = 0.01;
  double clamp_high = 0.99;
  double distance_slope = 0.0;
  double spacing_slope = 0.0;
  double catch_confidence = 0.995;
  // Exact P(correct) per item key, both conditions.
  std::map<std::string, double> item_confidence;
  // Fraction of prompts answered with no relevant token.
  double not_relevant_rate = 0.0;
  // Estimate prompts answer round(true_length + bias + estimate_noise*eta).
  double anchor_bias_small = 0.0;
  double anchor_bias_large = 0.0;
  double estimate_noise = 0.0;

  std::string digest() const;
};

void to_json(nlohmann::json& j, const PlantSpec& p);
void from_json(const nlohmann::json& j, PlantSpec& p);

// Probability the planted model assigns to the correct answer.
double planted_confidence(const PromptInstance& instance, const PlantSpec& plant);

// Pure function of (instance, plant): the instance's rendered text seeds
// the noise.
std::vector<TokenDistribution> mock_complete(const PromptInstance& instance, const PlantSpec& plant,
                                             int positions);

// Offline backend. Prompts are looked up in a registry of battery
// instances; unknown prompts get a neutral yes/no distribution at mu.
class MockBackend : public CompletionBackend {
 public:
  explicit MockBackend(PlantSpec plant);

  void register_instances(std::span<const PromptInstance> instances);

  std::vector<TokenDistribution> fetch(const std::string& prompt, int positions) override;
  std::string model_id() const override;

  const PlantSpec& plant() const { return plant_; }

 private:
  PlantSpec plant_;
  std::mutex mu_;
  std::unordered_map<std::string, PromptInstance> registry_;
};

}  // namespace cogfx
