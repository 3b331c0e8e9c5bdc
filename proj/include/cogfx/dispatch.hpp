#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cogfx/backend.hpp"
#include "cogfx/promptgen.hpp"

namespace cogfx {

struct DispatchOptions {
  int max_in_flight = 4;
  // Stop issuing requests once failures exceed this fraction of the battery.
  double failure_ceiling = 0.05;
  // Decoded positions for estimate prompts; classification prompts use one.
  int estimate_positions = 3;
  // Polled before each request; returning true cancels the remaining work.
  std::function<bool()> should_stop;
};

struct InstanceFailure {
  std::size_t index = 0;
  std::string message;
};

struct DispatchResult {
  // Indexed like the input; empty for failed or never-dispatched instances.
  std::vector<std::optional<std::vector<TokenDistribution>>> results;
  std::vector<InstanceFailure> failures;
  std::size_t completed = 0;
  bool aborted = false;
  bool cancelled = false;
};

// Called once per completed instance, serialized across workers.
using ResultSink =
    std::function<void(std::size_t index, const PromptInstance&, const std::vector<TokenDistribution>&)>;

int positions_for(const PromptInstance& instance, int estimate_positions);

// Completes every instance with at most max_in_flight requests in flight.
DispatchResult dispatch(std::span<const PromptInstance> instances, CompletionClient& client,
                        const DispatchOptions& options, const ResultSink& sink = {});

}  // namespace cogfx
