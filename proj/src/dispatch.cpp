#include "cogfx/dispatch.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include "cogfx/error.hpp"

namespace cogfx {

int positions_for(const PromptInstance& instance, int estimate_positions) {
  return instance.is_estimate() ? estimate_positions : 1;
}

DispatchResult dispatch(std::span<const PromptInstance> instances, CompletionClient& client,
                        const DispatchOptions& options, const ResultSink& sink) {
  if (options.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");

  DispatchResult result;
  result.results.resize(instances.size());
  const double ceiling = options.failure_ceiling * static_cast<double>(instances.size());

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;

  auto worker = [&] {
    while (!stop.load()) {
      if (options.should_stop && options.should_stop()) {
        std::lock_guard lock(mu);
        result.cancelled = true;
        stop = true;
        break;
      }
      const std::size_t i = next.fetch_add(1);
      if (i >= instances.size()) break;
      const auto& inst = instances[i];
      try {
        auto dists =
            client.complete(inst.rendered_text, positions_for(inst, options.estimate_positions));
        std::lock_guard lock(mu);
        if (sink) sink(i, inst, dists);
        result.results[i] = std::move(dists);
        ++result.completed;
      } catch (const Error& e) {
        std::lock_guard lock(mu);
        result.failures.push_back({i, e.what()});
        if (static_cast<double>(result.failures.size()) > ceiling) {
          result.aborted = true;
          stop = true;
        }
      }
    }
  };

  const auto n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(options.max_in_flight), instances.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  std::sort(result.failures.begin(), result.failures.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  return result;
}

}  // namespace cogfx
