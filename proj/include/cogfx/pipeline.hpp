#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cogfx/backend.hpp"
#include "cogfx/batteries.hpp"
#include "cogfx/config.hpp"
#include "cogfx/report.hpp"

namespace cogfx {

std::vector<Battery> build_batteries(const RunConfig& config);

struct PlannedBattery {
  std::string experiment_id;
  std::size_t instances = 0;
  std::size_t estimated_tokens = 0;
  // SNARC batteries stop early per word, so the count is a ceiling.
  bool upper_bound = false;
};

struct Plan {
  std::vector<PlannedBattery> batteries;
  std::size_t total_instances = 0;
  std::size_t total_tokens = 0;
};

Plan make_plan(const RunConfig& config);
nlohmann::json plan_json(const Plan& plan);

// output_dir/<first 16 hex digits of the config digest>
std::filesystem::path run_directory(const RunConfig& config);

struct RunOptions {
  // Defaults to output_dir/cache.jsonl.
  std::filesystem::path cache_path;
  // Replaces the backend chosen by the config (tests, fault injection).
  std::shared_ptr<CompletionBackend> backend;
  // Polled before each request; true cancels the run, leaving the cache
  // usable for a resume.
  std::function<bool()> should_stop;
};

struct RunSummary {
  std::filesystem::path run_dir;
  std::string model;
  std::size_t dispatched = 0;
  std::size_t network_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t failures = 0;
  bool aborted = false;    // failure ceiling breached
  bool cancelled = false;  // should_stop fired
};

// Builds batteries, dispatches through the cache, scores and persists
// observations under run_directory(config).
RunSummary run_experiments(const RunConfig& config, const RunOptions& options = {});

// Reads a completed run directory and computes the effect report. Throws
// EmptyDataError when there are no observations.
EffectReport analyze_run(const std::filesystem::path& run_dir);

struct MockValidationCell {
  double delta = 0.0;
  std::size_t seeds = 0;
  std::size_t detected_05 = 0;
  std::size_t detected_001 = 0;
  std::size_t right_direction = 0;
};

struct MockValidationOptions {
  std::vector<double> deltas{0.0, 0.05, 0.1};
  double sigma = 0.05;
  double mu = 0.8;
  std::size_t seeds = 100;
  std::size_t items = 30;
  std::vector<int> spacings{5, 10, 15};
  std::uint64_t base_seed = 1;
};

// Runs a synthetic priming battery through the planted mock, scoring,
// filtering and the t-test for each (delta, seed).
std::vector<MockValidationCell> mock_validate(const MockValidationOptions& options);

// Deterministic pseudo-word triples: count per length for lengths 4, 5, 6.
std::vector<PrimingTriple> synthetic_priming_triples(std::size_t per_length, std::uint64_t seed);

}  // namespace cogfx
