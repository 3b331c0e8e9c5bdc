#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "cogfx/backend.hpp"
#include "cogfx/batteries.hpp"
#include "cogfx/cache.hpp"
#include "cogfx/dispatch.hpp"
#include "cogfx/error.hpp"
#include "cogfx/mock.hpp"

using namespace cogfx;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  auto p = fs::temp_directory_path() / ("cogfx_test_" + name);
  fs::remove_all(p);
  return p;
}

const char* kResponse = R"({
  "id": "cmpl-1", "object": "text_completion",
  "choices": [{"text": " yes", "index": 0,
    "logprobs": {"tokens": [" yes"], "token_logprobs": [-0.2],
      "top_logprobs": [{" yes": -0.2, " no": -2.5, " Yes": -3.0, "\n": -5.0, " maybe": -6.0}]}}]
})";

// Scripted responses; records every request body.
class ScriptedTransport : public HttpTransport {
 public:
  explicit ScriptedTransport(std::vector<HttpResponse> script) : script_(std::move(script)) {}
  HttpResponse post(const std::string&, const std::string& body, const Headers& headers,
                    std::chrono::milliseconds) override {
    std::lock_guard lock(mu_);
    bodies.push_back(body);
    last_headers = headers;
    if (calls_ >= script_.size()) return script_.back();
    const auto r = script_[calls_++];
    if (r.status == 0) throw BackendError("simulated timeout", 0);
    return r;
  }
  std::vector<std::string> bodies;
  Headers last_headers;

 private:
  std::mutex mu_;
  std::vector<HttpResponse> script_;
  std::size_t calls_ = 0;
};

class CountingBackend : public CompletionBackend {
 public:
  std::vector<TokenDistribution> fetch(const std::string& prompt, int positions) override {
    const int now = ++in_flight;
    int seen = max_in_flight.load();
    while (now > seen && !max_in_flight.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    ++calls;
    --in_flight;
    if (fail_prefix && prompt.rfind("fail", 0) == 0) throw BackendError("injected", 500);
    std::vector<TokenDistribution> out;
    for (int i = 0; i < positions; ++i) {
      out.push_back(TokenDistribution::from_entries({{" yes", std::log(0.7)}, {" no", std::log(0.3)}}));
    }
    return out;
  }
  std::string model_id() const override { return "counting"; }
  std::atomic<int> in_flight{0};
  std::atomic<int> max_in_flight{0};
  std::atomic<int> calls{0};
  bool fail_prefix = false;
};

PromptInstance yes_no(const std::string& text) {
  PromptInstance p;
  p.rendered_text = text;
  p.correct_answers = {"yes"};
  p.relevant_answers = {"yes", "no"};
  return p;
}

}  // namespace

TEST_CASE("token distributions sort, truncate and validate") {
  const auto d = TokenDistribution::from_entries(
      {{"a", -3.0}, {"b", -1.0}, {"c", -2.0}, {"e", -2.0}, {"d", -4.0}, {"f", -5.0}});
  REQUIRE(d.entries.size() == 5);
  CHECK(d.entries[0].token == "b");
  CHECK(d.entries[1].token == "c");
  CHECK(d.entries[2].token == "e");
  CHECK(d.valid());
  TokenDistribution bad;
  bad.entries = {{"x", -0.1}, {"y", -0.2}, {"z", -0.3}};
  CHECK_FALSE(bad.valid());
  const nlohmann::json j = d;
  CHECK(nlohmann::json(j.get<TokenDistribution>()) == j);
}

TEST_CASE("cache keys and request bodies") {
  const DecodeParams one{1, 5, 0.0};
  const DecodeParams three{3, 5, 0.0};
  CHECK(cache_key("m", "p", one) == cache_key("m", "p", one));
  CHECK(cache_key("m", "p", one) != cache_key("m", "p", three));
  CHECK(cache_key("m", "p", one) != cache_key("n", "p", one));
  CHECK(cache_key("m", "p", one) != cache_key("m", "q", one));
  CHECK(cache_key("m", "p", one).size() == 64);

  const auto body = nlohmann::json::parse(build_request_body("text-davinci-003", "Q: x?\nA:", three));
  CHECK(body.at("model") == "text-davinci-003");
  CHECK(body.at("prompt") == "Q: x?\nA:");
  CHECK(body.at("max_tokens") == 3);
  CHECK(body.at("logprobs") == 5);
  CHECK(body.at("temperature") == 0);
  CHECK(body.size() == 5);
}

TEST_CASE("completion response parsing") {
  const auto d = parse_completion_response(kResponse, "h");
  REQUIRE(d.size() == 1);
  CHECK(d[0].entries.size() == 5);
  CHECK(d[0].entries[0].token == " yes");
  CHECK(d[0].echoed_prompt_hash == "h");
  CHECK(d[0].valid());
  CHECK_THROWS_AS(parse_completion_response("{}", "h"), BackendError);
  CHECK_THROWS_AS(parse_completion_response("not json", "h"), BackendError);
  CHECK_THROWS_AS(parse_completion_response(R"({"choices":[{"logprobs":null}]})", "h"),
                  BackendError);
}

TEST_CASE("retry policy") {
  RetryPolicy r;
  CHECK(r.backoff(1, 0.0).count() == 500);
  CHECK(r.backoff(2, 0.0).count() == 1000);
  CHECK(r.backoff(3, 0.0).count() == 2000);
  CHECK(r.backoff(2, 1.0).count() == 1250);
  CHECK(r.backoff(30, 0.5).count() == 30000);
  CHECK(is_retryable_status(429));
  CHECK(is_retryable_status(500));
  CHECK(is_retryable_status(503));
  CHECK(is_retryable_status(0));
  CHECK_FALSE(is_retryable_status(400));
  CHECK_FALSE(is_retryable_status(401));
  CHECK_FALSE(is_retryable_status(404));
  BackendConfig bad;
  bad.max_in_flight = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.retry.max_attempts = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("500 then 200 retries once and records one result") {
  auto transport = std::make_shared<ScriptedTransport>(
      std::vector<HttpResponse>{{500, "overloaded"}, {200, kResponse}});
  std::vector<std::chrono::milliseconds> sleeps;
  auto backend = std::make_shared<CompletionsEndpoint>(
      BackendConfig{}, "sk-test", transport,
      [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
  const auto path = temp_path("retry.jsonl");
  auto cache = std::make_shared<ResultCache>(path);
  CompletionClient client(backend, cache);
  const auto d = client.complete("Q: x?\nA:", 1);
  CHECK(d.size() == 1);
  CHECK(backend->attempts() == 2);
  CHECK(sleeps.size() == 1);
  CHECK(cache->size() == 1);
  CHECK(transport->last_headers.at(0).second == "Bearer sk-test");
  // Second call served from cache.
  client.complete("Q: x?\nA:", 1);
  CHECK(backend->attempts() == 2);
  CHECK(client.network_calls() == 1);
  CHECK(client.cache_hits() == 1);
  fs::remove(path);
}

TEST_CASE("client errors fail fast and retries are bounded") {
  auto t400 = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{400, "bad request"}});
  CompletionsEndpoint e400(BackendConfig{}, "k", t400, [](auto) {});
  try {
    e400.fetch("p", 1);
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.status() == 400);
    CHECK(e.body() == "bad request");
  }
  CHECK(e400.attempts() == 1);

  auto t503 = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{503, "busy"}});
  CompletionsEndpoint e503(BackendConfig{}, "k", t503, [](auto) {});
  CHECK_THROWS_AS(e503.fetch("p", 1), BackendError);
  CHECK(e503.attempts() == 4);

  auto tdown = std::make_shared<ScriptedTransport>(
      std::vector<HttpResponse>{{0, ""}, {429, "slow down"}, {200, kResponse}});
  CompletionsEndpoint edown(BackendConfig{}, "k", tdown, [](auto) {});
  CHECK(edown.fetch("p", 1).size() == 1);
  CHECK(edown.attempts() == 3);
}

TEST_CASE("missing API key is a configuration error") {
  BackendConfig c;
  c.api_key_env_name = "COGFX_TEST_KEY_THAT_IS_NOT_SET";
  ::unsetenv(c.api_key_env_name.c_str());
  CHECK_THROWS_AS(CompletionsEndpoint(c, std::make_shared<HttplibTransport>()), ConfigError);
  ::setenv(c.api_key_env_name.c_str(), "sk-env", 1);
  CHECK_NOTHROW(CompletionsEndpoint(c, std::make_shared<HttplibTransport>()));
  ::unsetenv(c.api_key_env_name.c_str());
}

TEST_CASE("wire format against a local HTTP server") {
  httplib::Server server;
  std::string seen_body;
  std::string seen_auth;
  std::string seen_path;
  std::mutex mu;
  server.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu);
    seen_body = req.body;
    seen_auth = req.get_header_value("Authorization");
    seen_path = req.path;
    res.set_content(kResponse, "application/json");
  });
  server.Post("/v1/broken", [](const httplib::Request&, httplib::Response& res) {
    res.status = 401;
    res.set_content(R"({"error":"invalid key"})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  BackendConfig c;
  c.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/completions";
  c.model_name = "text-davinci-003";
  CompletionsEndpoint endpoint(c, "sk-local", std::make_shared<HttplibTransport>(), [](auto) {});
  const auto d = endpoint.fetch("Q: Is ant smaller than cow?\nA:", 1);
  REQUIRE(d.size() == 1);
  CHECK(d[0].entries[0].token == " yes");
  {
    std::lock_guard lock(mu);
    CHECK(seen_path == "/v1/completions");
    CHECK(seen_auth == "Bearer sk-local");
    const auto body = nlohmann::json::parse(seen_body);
    CHECK(body["model"] == "text-davinci-003");
    CHECK(body["prompt"] == "Q: Is ant smaller than cow?\nA:");
    CHECK(body["max_tokens"] == 1);
    CHECK(body["logprobs"] == 5);
    CHECK(body["temperature"] == 0);
  }

  c.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/broken";
  CompletionsEndpoint broken(c, "sk-local", std::make_shared<HttplibTransport>(), [](auto) {});
  try {
    broken.fetch("p", 1);
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.status() == 401);
    CHECK(e.body().find("invalid key") != std::string::npos);
  }
  server.stop();
  th.join();

  // Nothing listening any more: transport error, retried, then surfaced.
  c.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/completions";
  c.retry.max_attempts = 2;
  c.request_timeout_ms = 500;
  CompletionsEndpoint down(c, "k", std::make_shared<HttplibTransport>(), [](auto) {});
  try {
    down.fetch("p", 1);
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.status() == 0);
  }
  CHECK(down.attempts() == 2);
}

TEST_CASE("cache persists, reloads and tolerates a torn tail") {
  const auto path = temp_path("cache.jsonl");
  const auto dist = TokenDistribution::from_entries({{" yes", std::log(0.6)}, {" no", std::log(0.3)}}, "h");
  {
    ResultCache cache(path);
    cache.store({"k1", {dist}, {}});
    cache.store({"k2", {dist, dist}, {}});
    CHECK(cache.size() == 2);
  }
  {
    std::ofstream out(path, std::ios::app);
    out << R"({"key":"k3","distributions":[{"entr)";
  }
  {
    ResultCache cache(path);
    CHECK(cache.size() == 2);
    CHECK(cache.skipped_lines() == 1);
    const auto hit = cache.lookup("k2");
    REQUIRE(hit);
    CHECK(hit->size() == 2);
    CHECK(nlohmann::json((*hit)[0]) == nlohmann::json(dist));
    CHECK_FALSE(cache.lookup("k3"));
    cache.store({"k3", {dist}, {}});
    // Later record wins.
    const auto other = TokenDistribution::from_entries({{" no", std::log(0.9)}});
    cache.store({"k1", {other}, {}});
  }
  {
    ResultCache cache(path);
    CHECK(cache.size() == 3);
    CHECK(cache.skipped_lines() == 0);
    CHECK(cache.lookup("k1")->front().entries.front().token == " no");
    CHECK(cache.lookup("k3"));
  }
  {
    std::ofstream out(path, std::ios::app);
    out << "garbage line\n{\"key\":\"k9\",\"distributions\":[]}\n";
  }
  CHECK_THROWS_AS(ResultCache{path}, ParseError);
  fs::remove(path);
}

TEST_CASE("mock backend is deterministic and follows the plant") {
  PlantSpec plant;
  plant.mu = 0.8;
  auto inst = yes_no("Q: Is ant smaller than cow?\nA:");
  inst.condition = "unrelated";
  auto d = mock_complete(inst, plant, 1);
  REQUIRE(d.size() == 1);
  CHECK(d[0].valid());
  CHECK(std::exp(d[0].entries[0].logprob) == doctest::Approx(0.8));
  inst.condition = "related";
  plant.delta = 0.1;
  d = mock_complete(inst, plant, 1);
  CHECK(planted_confidence(inst, plant) == doctest::Approx(0.9));
  CHECK(std::exp(d[0].entries[0].logprob) == doctest::Approx(0.9));
  plant.sigma = 0.05;
  plant.seed = 4;
  const auto a = mock_complete(inst, plant, 2);
  const auto b = mock_complete(inst, plant, 2);
  CHECK(nlohmann::json(a) == nlohmann::json(b));
  CHECK(a.size() == 2);
  plant.seed = 5;
  CHECK(nlohmann::json(mock_complete(inst, plant, 1)) != nlohmann::json(b).at(0));

  inst.condition = "catch";
  inst.correct_answers = {"no"};
  CHECK(planted_confidence(inst, plant) == doctest::Approx(0.995));

  MockBackend backend(plant);
  backend.register_instances(std::vector<PromptInstance>{inst});
  CHECK(nlohmann::json(backend.fetch(inst.rendered_text, 1)) ==
        nlohmann::json(mock_complete(inst, plant, 1)));
  CHECK(backend.fetch("unregistered prompt", 1).size() == 1);
  CHECK(backend.model_id().rfind("mock-", 0) == 0);
  PlantSpec other = plant;
  other.delta = 0.2;
  CHECK(MockBackend(other).model_id() != backend.model_id());
}

TEST_CASE("mock estimate prompts emit digit tokens") {
  const auto b = build_anchoring({});
  PlantSpec plant;
  plant.anchor_bias_large = 5.0;
  for (std::size_t i = 0; i < b.instances.size(); i += 41) {
    const auto& inst = b.instances[i];
    const auto d = mock_complete(inst, plant, 3);
    REQUIRE(d.size() == 3);
    std::string text;
    for (const auto& x : d) text += x.entries.front().token;
    const long expected = std::stol(inst.correct_answers.front()) +
                          (inst.condition == "large-anchor" ? 5 : 0);
    CHECK(std::stol(text) == expected);
  }
}

TEST_CASE("dispatch respects max_in_flight and counts cache hits") {
  std::vector<PromptInstance> xs;
  for (int i = 0; i < 40; ++i) xs.push_back(yes_no("prompt " + std::to_string(i)));
  auto backend = std::make_shared<CountingBackend>();
  const auto path = temp_path("dispatch.jsonl");
  auto cache = std::make_shared<ResultCache>(path);
  CompletionClient client(backend, cache);

  DispatchOptions opt;
  opt.max_in_flight = 1;
  auto r = dispatch(xs, client, opt);
  CHECK(r.completed == 40);
  CHECK(backend->max_in_flight == 1);
  CHECK(backend->calls == 40);

  xs.push_back(yes_no("prompt new"));
  opt.max_in_flight = 4;
  std::size_t sink_calls = 0;
  r = dispatch(xs, client, opt, [&](std::size_t, const PromptInstance&, const auto&) { ++sink_calls; });
  CHECK(r.completed == 41);
  CHECK(sink_calls == 41);
  CHECK(backend->calls == 41);
  CHECK(client.cache_hits() == 40);
  for (const auto& res : r.results) CHECK(res.has_value());
  fs::remove(path);
}

TEST_CASE("dispatch bounds concurrency and aborts past the failure ceiling") {
  std::vector<PromptInstance> xs;
  for (int i = 0; i < 60; ++i) xs.push_back(yes_no("prompt " + std::to_string(i)));
  auto backend = std::make_shared<CountingBackend>();
  CompletionClient client(backend, nullptr);
  DispatchOptions opt;
  opt.max_in_flight = 3;
  auto r = dispatch(xs, client, opt);
  CHECK(backend->max_in_flight <= 3);
  CHECK(r.completed == 60);

  std::vector<PromptInstance> mixed;
  for (int i = 0; i < 100; ++i) {
    mixed.push_back(yes_no((i % 10 == 0 ? "fail " : "ok ") + std::to_string(i)));
  }
  backend->fail_prefix = true;
  opt.failure_ceiling = 0.2;
  r = dispatch(mixed, client, opt);
  CHECK_FALSE(r.aborted);
  CHECK(r.failures.size() == 10);
  CHECK(r.completed == 90);

  opt.failure_ceiling = 0.05;
  r = dispatch(mixed, client, opt);
  CHECK(r.aborted);

  std::atomic<int> polls{0};
  opt.failure_ceiling = 1.0;
  opt.should_stop = [&] { return ++polls > 20; };
  r = dispatch(xs, client, opt);
  CHECK(r.cancelled);
  CHECK(r.completed < xs.size());
}
