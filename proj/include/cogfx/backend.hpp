#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace cogfx {

class ResultCache;

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
};

// Top-k next-token distribution at one decoded position.
struct TokenDistribution {
  std::vector<TokenLogprob> entries;  // logprob descending, at most kTopK
  std::string echoed_prompt_hash;

  static constexpr std::size_t kTopK = 5;

  // Sorts descending (ties by token text), truncates to kTopK.
  static TokenDistribution from_entries(std::vector<TokenLogprob> entries,
                                        std::string prompt_hash = {});

  // Sorted, logprobs <= 0, probabilities sum to at most 1 + 1e-9.
  bool valid() const;
};

void to_json(nlohmann::json& j, const TokenDistribution& d);
void from_json(const nlohmann::json& j, TokenDistribution& d);

struct RetryPolicy {
  int max_attempts = 4;
  int base_backoff_ms = 500;
  int max_backoff_ms = 30000;
  double jitter = 0.25;  // fraction of the delay added at random

  // Delay before retry number `attempt` (1-based), jitter drawn from u in [0,1).
  std::chrono::milliseconds backoff(int attempt, double u) const;
};

// Retry on 429, 5xx and transport errors (status 0); fail fast otherwise.
bool is_retryable_status(int status);

struct BackendConfig {
  std::string endpoint_url = "https://api.openai.com/v1/completions";
  std::string model_name = "text-davinci-003";
  std::string api_key_env_name = "OPENAI_API_KEY";
  int max_in_flight = 4;
  RetryPolicy retry;
  int request_timeout_ms = 30000;

  void validate() const;
};

// Parameters that change what the endpoint returns; part of the cache key.
struct DecodeParams {
  int max_tokens = 1;
  int logprobs = 5;
  double temperature = 0.0;
};

std::string cache_key(std::string_view model, std::string_view prompt, const DecodeParams& params);

// JSON request body: model, prompt, max_tokens, logprobs, temperature.
std::string build_request_body(std::string_view model, std::string_view prompt,
                               const DecodeParams& params);

// Reads choices[0].logprobs.top_logprobs. Throws BackendError on a
// malformed body.
std::vector<TokenDistribution> parse_completion_response(std::string_view body,
                                                         const std::string& prompt_hash);

struct HttpResponse {
  int status = 0;
  std::string body;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

// Raw POST. Throws BackendError with status 0 on connection failure or
// timeout.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& url, const std::string& body,
                            const Headers& headers, std::chrono::milliseconds timeout) = 0;
};

// cpp-httplib client; supports http:// and https:// URLs.
class HttplibTransport : public HttpTransport {
 public:
  HttpResponse post(const std::string& url, const std::string& body, const Headers& headers,
                    std::chrono::milliseconds timeout) override;
};

// Source of completions, without caching. Each fetch is one "network call".
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::vector<TokenDistribution> fetch(const std::string& prompt, int positions) = 0;
  // Model identifier that goes into cache keys.
  virtual std::string model_id() const = 0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

class CompletionsEndpoint : public CompletionBackend {
 public:
  // Reads the API key from the environment; throws ConfigError if unset.
  CompletionsEndpoint(BackendConfig config, std::shared_ptr<HttpTransport> transport,
                      Sleeper sleeper = {});
  CompletionsEndpoint(BackendConfig config, std::string api_key,
                      std::shared_ptr<HttpTransport> transport, Sleeper sleeper = {});

  std::vector<TokenDistribution> fetch(const std::string& prompt, int positions) override;
  std::string model_id() const override { return config_.model_name; }

  std::size_t attempts() const { return attempts_.load(); }

 private:
  BackendConfig config_;
  std::string api_key_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
  std::atomic<std::size_t> attempts_{0};
};

// Cache-first completion. On a miss, one backend fetch, persisted before
// returning.
class CompletionClient {
 public:
  CompletionClient(std::shared_ptr<CompletionBackend> backend,
                   std::shared_ptr<ResultCache> cache);

  std::vector<TokenDistribution> complete(const std::string& prompt, int positions);

  std::size_t network_calls() const { return network_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }
  CompletionBackend& backend() { return *backend_; }

 private:
  std::shared_ptr<CompletionBackend> backend_;
  std::shared_ptr<ResultCache> cache_;
  std::atomic<std::size_t> network_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

}  // namespace cogfx
