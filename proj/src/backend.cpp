#include "cogfx/backend.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include "cogfx/cache.hpp"
#include "cogfx/digest.hpp"
#include "cogfx/error.hpp"
#include "cogfx/random.hpp"

namespace cogfx {

TokenDistribution TokenDistribution::from_entries(std::vector<TokenLogprob> entries,
                                                  std::string prompt_hash) {
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.logprob != b.logprob) return a.logprob > b.logprob;
    return a.token < b.token;
  });
  if (entries.size() > kTopK) entries.resize(kTopK);
  return TokenDistribution{std::move(entries), std::move(prompt_hash)};
}

bool TokenDistribution::valid() const {
  double total = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!(entries[i].logprob <= 0.0)) return false;
    if (i > 0 && entries[i].logprob > entries[i - 1].logprob) return false;
    total += std::exp(entries[i].logprob);
  }
  return entries.size() <= kTopK && total <= 1.0 + 1e-9;
}

void to_json(nlohmann::json& j, const TokenDistribution& d) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : d.entries) entries.push_back({e.token, e.logprob});
  j = nlohmann::json{{"entries", std::move(entries)}, {"prompt_hash", d.echoed_prompt_hash}};
}

void from_json(const nlohmann::json& j, TokenDistribution& d) {
  d.entries.clear();
  for (const auto& e : j.at("entries")) {
    d.entries.push_back({e.at(0).get<std::string>(), e.at(1).get<double>()});
  }
  d.echoed_prompt_hash = j.value("prompt_hash", "");
}

std::chrono::milliseconds RetryPolicy::backoff(int attempt, double u) const {
  const double base = base_backoff_ms * std::pow(2.0, std::max(0, attempt - 1));
  const double delay = std::min<double>(base * (1.0 + jitter * u), max_backoff_ms);
  return std::chrono::milliseconds(static_cast<long long>(delay));
}

bool is_retryable_status(int status) {
  return status == 0 || status == 429 || (status >= 500 && status <= 599);
}

void BackendConfig::validate() const {
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
  if (retry.base_backoff_ms < 0) throw ConfigError("retry.base_backoff_ms must be >= 0");
  if (request_timeout_ms < 1) throw ConfigError("request_timeout_ms must be >= 1");
  if (model_name.empty()) throw ConfigError("model name is empty");
}

std::string cache_key(std::string_view model, std::string_view prompt,
                      const DecodeParams& params) {
  // Canonical JSON: keys are sorted by nlohmann::json.
  const nlohmann::json j{{"model", model},
                         {"prompt", prompt},
                         {"max_tokens", params.max_tokens},
                         {"logprobs", params.logprobs},
                         {"temperature", params.temperature}};
  return sha256_hex(j.dump());
}

std::string build_request_body(std::string_view model, std::string_view prompt,
                               const DecodeParams& params) {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["prompt"] = prompt;
  j["max_tokens"] = params.max_tokens;
  j["logprobs"] = params.logprobs;
  j["temperature"] = params.temperature;
  return j.dump();
}

std::vector<TokenDistribution> parse_completion_response(std::string_view body,
                                                         const std::string& prompt_hash) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed response: ") + e.what(), 200, std::string(body));
  }
  const auto* choices = j.contains("choices") ? &j["choices"] : nullptr;
  if (!choices || !choices->is_array() || choices->empty()) {
    throw BackendError("malformed response: no choices", 200, std::string(body));
  }
  const auto& choice = (*choices)[0];
  if (!choice.contains("logprobs") || !choice["logprobs"].is_object() ||
      !choice["logprobs"].contains("top_logprobs") ||
      !choice["logprobs"]["top_logprobs"].is_array()) {
    throw BackendError("malformed response: missing logprobs block", 200, std::string(body));
  }
  std::vector<TokenDistribution> out;
  for (const auto& position : choice["logprobs"]["top_logprobs"]) {
    if (!position.is_object()) {
      throw BackendError("malformed response: top_logprobs entry is not an object", 200,
                         std::string(body));
    }
    std::vector<TokenLogprob> entries;
    for (const auto& [token, lp] : position.items()) {
      if (!lp.is_number()) {
        throw BackendError("malformed response: non-numeric logprob", 200, std::string(body));
      }
      entries.push_back({token, std::min(0.0, lp.get<double>())});
    }
    out.push_back(TokenDistribution::from_entries(std::move(entries), prompt_hash));
  }
  if (out.empty()) {
    throw BackendError("malformed response: empty top_logprobs", 200, std::string(body));
  }
  return out;
}

HttpResponse HttplibTransport::post(const std::string& url, const std::string& body,
                                    const Headers& headers, std::chrono::milliseconds timeout) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  const auto secs = timeout.count() / 1000;
  const auto usecs = (timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(path, h, body, "application/json");
  if (!res) {
    throw BackendError("transport error: " + httplib::to_string(res.error()), 0);
  }
  return {res->status, res->body};
}

CompletionsEndpoint::CompletionsEndpoint(BackendConfig config,
                                         std::shared_ptr<HttpTransport> transport,
                                         Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  config_.validate();
  const char* key = std::getenv(config_.api_key_env_name.c_str());
  if (!key || !*key) {
    throw ConfigError("API key variable " + config_.api_key_env_name + " is not set");
  }
  api_key_ = key;
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

CompletionsEndpoint::CompletionsEndpoint(BackendConfig config, std::string api_key,
                                         std::shared_ptr<HttpTransport> transport,
                                         Sleeper sleeper)
    : config_(std::move(config)),
      api_key_(std::move(api_key)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)) {
  config_.validate();
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::vector<TokenDistribution> CompletionsEndpoint::fetch(const std::string& prompt,
                                                          int positions) {
  const DecodeParams params{positions, 5, 0.0};
  const std::string body = build_request_body(config_.model_name, prompt, params);
  const Headers headers{{"Authorization", "Bearer " + api_key_}};
  const std::string prompt_hash = sha256_hex(prompt);
  thread_local std::mt19937_64 jitter_rng{std::random_device{}()};

  for (int attempt = 1;; ++attempt) {
    ++attempts_;
    HttpResponse res;
    try {
      res = transport_->post(config_.endpoint_url, body, headers,
                             std::chrono::milliseconds(config_.request_timeout_ms));
    } catch (const BackendError& e) {
      if (attempt >= config_.retry.max_attempts) {
        throw BackendError("retries exhausted: " + std::string(e.what()), 0);
      }
      sleeper_(config_.retry.backoff(attempt, std::uniform_real_distribution<>(0, 1)(jitter_rng)));
      continue;
    }
    if (res.status >= 200 && res.status < 300) {
      return parse_completion_response(res.body, prompt_hash);
    }
    if (!is_retryable_status(res.status) || attempt >= config_.retry.max_attempts) {
      throw BackendError("HTTP " + std::to_string(res.status) + ": " + res.body, res.status,
                         res.body);
    }
    sleeper_(config_.retry.backoff(attempt, std::uniform_real_distribution<>(0, 1)(jitter_rng)));
  }
}

CompletionClient::CompletionClient(std::shared_ptr<CompletionBackend> backend,
                                   std::shared_ptr<ResultCache> cache)
    : backend_(std::move(backend)), cache_(std::move(cache)) {}

std::vector<TokenDistribution> CompletionClient::complete(const std::string& prompt,
                                                          int positions) {
  if (prompt.empty()) throw ConfigError("complete: empty prompt");
  if (positions < 1 || positions > 4) throw ConfigError("complete: positions must be 1..4");
  const std::string key = cache_key(backend_->model_id(), prompt, DecodeParams{positions, 5, 0.0});
  if (cache_) {
    if (auto hit = cache_->lookup(key)) {
      ++cache_hits_;
      return *std::move(hit);
    }
  }
  ++network_calls_;
  auto dists = backend_->fetch(prompt, positions);
  if (cache_) cache_->store(CacheRecord{key, dists, {}});
  return dists;
}

}  // namespace cogfx
