// Scripted mock backend, retry/backoff policy, provider config parsing, and
// the HTTP client against an in-process server.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "selfroute/errors.hpp"
#include "selfroute/llm.hpp"
#include "selfroute/llm_http.hpp"

#include "temp_dir.hpp"

using namespace selfroute;
using namespace std::chrono_literals;

TEST_CASE("mock: default response and word_approx token counts") {
  ScriptedMockLlm mock;
  Completion c = mock.generate("three word prompt");
  CHECK(c.text == "unanswerable");
  CHECK(c.input_tokens == TokenCount{3, TokenMethod::word_approx});
  CHECK(c.output_tokens == TokenCount{1, TokenMethod::word_approx});

  ScriptedMockLlm custom("no idea");
  CHECK(custom.generate("x").text == "no idea");
}

TEST_CASE("mock: exact match beats substring matchers") {
  ScriptedMockLlm mock;
  mock.add_exact("the whole prompt", "exact!");
  mock.add_substring("whole", "sub1");
  mock.add_substring("prompt", "sub2");
  // exact hit: the two overlapping substrings would otherwise be ambiguous
  CHECK(mock.generate("the whole prompt").text == "exact!");
  CHECK_THROWS_AS(mock.generate("the whole prompt."), AmbiguousMatchError);
}

TEST_CASE("mock: substring matching") {
  ScriptedMockLlm mock("fallback");
  mock.add_substring("alpha", "saw alpha");
  mock.add_substring("beta", "saw beta");
  CHECK(mock.generate("question about alpha only").text == "saw alpha");
  CHECK(mock.generate("question about beta only").text == "saw beta");
  CHECK(mock.generate("question about gamma").text == "fallback");
  CHECK_THROWS_AS(mock.generate("alpha and beta together"), AmbiguousMatchError);
}

TEST_CASE("mock: calls are logged in order, including failing ones") {
  ScriptedMockLlm mock;
  mock.add_substring("a", "ra");
  mock.add_substring("b", "rb");
  mock.generate("a");
  CHECK_THROWS_AS(mock.generate("a b"), AmbiguousMatchError);
  mock.generate("zzz");
  CHECK(mock.call_count() == 3);
  CHECK(mock.call_log() == std::vector<std::string>{"a", "a b", "zzz"});
}

TEST_CASE("mock: context window") {
  ScriptedMockLlm mock;
  mock.set_context_window(4);
  CHECK(mock.generate("one two three four").text == "unanswerable");
  CHECK_THROWS_AS(mock.generate("one two three four five"), ContextOverflowError);
  CHECK(mock.call_count() == 2);  // the overflowing call is still logged
}

TEST_CASE("mock: id is stable and script-dependent") {
  ScriptedMockLlm a, b;
  CHECK(a.id() == b.id());
  CHECK(a.id().rfind("mock:", 0) == 0);
  b.add_substring("x", "y");
  CHECK(a.id() != b.id());
  CHECK(a.id() == a.id());
}

TEST_CASE("mock: fixture file loading") {
  TempDir tmp;

  SUBCASE("patterns, default, and window") {
    auto p = tmp.write("fix.json",
                       "{\"*\": \"dunno\", \"alpha\": \"A!\", \"__max_prompt_words__\": 6}");
    auto mock = ScriptedMockLlm::from_fixture_file(p);
    CHECK(mock->generate("tell me about alpha").text == "A!");
    CHECK(mock->generate("tell me about beta").text == "dunno");
    CHECK_THROWS_AS(mock->generate("one two three four five six seven"),
                    ContextOverflowError);
  }
  SUBCASE("missing * keeps the unanswerable default") {
    auto p = tmp.write("fix.json", "{\"alpha\": \"A!\"}");
    auto mock = ScriptedMockLlm::from_fixture_file(p);
    CHECK(mock->generate("beta?").text == "unanswerable");
  }
  SUBCASE("rejects bad fixtures") {
    CHECK_THROWS_AS(ScriptedMockLlm::from_fixture_file(tmp.file("missing.json")), IoError);
    CHECK_THROWS_AS(ScriptedMockLlm::from_fixture_file(tmp.write("a.json", "[1,2]")),
                    ConfigError);
    CHECK_THROWS_AS(ScriptedMockLlm::from_fixture_file(tmp.write("b.json", "{notjson")),
                    ConfigError);
    CHECK_THROWS_AS(
        ScriptedMockLlm::from_fixture_file(tmp.write("c.json", "{\"k\": 42}")),
        ConfigError);
    CHECK_THROWS_AS(ScriptedMockLlm::from_fixture_file(
                        tmp.write("d.json", "{\"__max_prompt_words__\": -3}")),
                    ConfigError);
  }
}

TEST_CASE("free generate() refuses blank prompts") {
  ScriptedMockLlm mock;
  CHECK_THROWS_AS(generate(mock, ""), Error);
  CHECK_THROWS_AS(generate(mock, "   \n"), Error);
  CHECK(mock.call_count() == 0);  // rejected before reaching the backend
  CHECK(generate(mock, "ok").text == "unanswerable");
}

TEST_CASE("backoff_delay schedule") {
  auto base = 100ms;
  CHECK(backoff_delay(1, base, 0.0) == 100ms);
  CHECK(backoff_delay(2, base, 0.0) == 200ms);
  CHECK(backoff_delay(3, base, 0.0) == 400ms);
  CHECK(backoff_delay(4, base, 0.0) == 800ms);
  // jitter adds up to one extra base interval
  CHECK(backoff_delay(1, base, 0.5) == 150ms);
  CHECK(backoff_delay(2, base, 0.999).count() == doctest::Approx(299).epsilon(0.01));
  CHECK_THROWS_AS(backoff_delay(0, base, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(backoff_delay(1, base, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(backoff_delay(1, base, -0.1), std::invalid_argument);
}

TEST_CASE("provider config TOML parsing") {
  TempDir tmp;

  SUBCASE("full file with comments and sections") {
    auto p = tmp.write("p.toml",
                       "# provider settings\n"
                       "[provider]\n"
                       "base_url = \"http://localhost:8088/v1\"\n"
                       "model = \"test-model\"  # inline note after string\n"
                       "api_key_env = \"MY_KEY\"\n"
                       "max_retries = 2\n"
                       "request_timeout_ms = 1500\n"
                       "max_concurrent = 8\n"
                       "retry_base_ms = 10 # fast\n"
                       "embed_model = \"test-embed\"\n"
                       "embed_base_url = \"http://localhost:9099/v1\"\n");
    ProviderConfig cfg = ProviderConfig::from_toml_file(p);
    CHECK(cfg.base_url == "http://localhost:8088/v1");
    CHECK(cfg.model == "test-model");
    CHECK(cfg.api_key_env == "MY_KEY");
    CHECK(cfg.max_retries == 2);
    CHECK(cfg.request_timeout == 1500ms);
    CHECK(cfg.max_concurrent == 8);
    CHECK(cfg.retry_base_delay == 10ms);
    CHECK(cfg.embed_model == "test-embed");
    CHECK(cfg.embed_base_url == "http://localhost:9099/v1");
  }
  SUBCASE("defaults fill unset keys") {
    auto p = tmp.write("p.toml",
                       "base_url = \"http://x\"\n"
                       "model = \"m\"\n");
    ProviderConfig cfg = ProviderConfig::from_toml_file(p);
    CHECK(cfg.api_key_env == "LLM_API_KEY");
    CHECK(cfg.max_retries == 3);
    CHECK(cfg.request_timeout == 30000ms);
    CHECK(cfg.max_concurrent == 4);
    CHECK(cfg.retry_base_delay == 250ms);
    CHECK(cfg.embed_model.empty());
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(ProviderConfig::from_toml_file(tmp.file("nope.toml")), IoError);
    CHECK_THROWS_AS(ProviderConfig::from_toml_file(tmp.write("a.toml",
                        "base_url = \"http://x\"\nmodel = \"m\"\nsurprise_key = 1\n")),
                    ConfigError);
    CHECK_THROWS_AS(ProviderConfig::from_toml_file(tmp.write("b.toml",
                        "base_url = \"http://x\"\nbase_url = \"http://y\"\nmodel = \"m\"\n")),
                    ConfigError);
    CHECK_THROWS_AS(ProviderConfig::from_toml_file(tmp.write("c.toml",
                        "base_url = \"http://x\"\nmodel = \"m\"\nmax_retries = soon\n")),
                    ConfigError);
    CHECK_THROWS_AS(ProviderConfig::from_toml_file(tmp.write("d.toml",
                        "base_url = \"unterminated\nmodel = \"m\"\n")),
                    ConfigError);
    CHECK_THROWS_AS(ProviderConfig::from_toml_file(tmp.write("e.toml", "model = \"m\"\n")),
                    ConfigError);  // base_url required
    CHECK_THROWS_AS(ProviderConfig::from_toml_file(tmp.write("f.toml",
                        "base_url = \"http://x\"\nmodel = \"m\"\nmax_retries = 11\n")),
                    ConfigError);
    CHECK_THROWS_AS(ProviderConfig::from_toml_file(tmp.write("g.toml",
                        "base_url = \"http://x\"\nmodel = \"m\"\njust a line\n")),
                    ConfigError);
  }
}

// ---------------------------------------------------------------------------
// HTTP client against a local server.

namespace {

struct TestServer {
  httplib::Server svr;
  int port = 0;
  std::thread th;

  explicit TestServer(httplib::Server::Handler handler) {
    svr.Post("/v1/chat/completions", std::move(handler));
    port = svr.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    th = std::thread([this] { svr.listen_after_bind(); });
    svr.wait_until_ready();
  }
  ~TestServer() {
    svr.stop();
    th.join();
  }

  ProviderConfig config(int max_retries = 3) const {
    ProviderConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    cfg.model = "test-model";
    cfg.api_key_env = "SELFROUTE_TEST_KEY";
    cfg.max_retries = max_retries;
    cfg.retry_base_delay = 5ms;  // keep retry tests fast
    cfg.request_timeout = 5000ms;
    return cfg;
  }
};

std::string ok_body(const std::string& text, bool with_usage) {
  nlohmann::json doc;
  doc["choices"] = nlohmann::json::array(
      {nlohmann::json{{"message", {{"role", "assistant"}, {"content", text}}}}});
  if (with_usage) doc["usage"] = {{"prompt_tokens", 123}, {"completion_tokens", 45}};
  return doc.dump();
}

struct EnvKey {
  EnvKey() { setenv("SELFROUTE_TEST_KEY", "sk-test-secret", 1); }
};

}  // namespace

TEST_CASE("http client: happy path with provider-reported usage") {
  EnvKey env;
  std::string seen_auth, seen_body;
  TestServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(ok_body("hello back", true), "application/json");
  });

  HttpLlmClient client(server.config());
  Completion c = client.generate("hello there");
  CHECK(c.text == "hello back");
  CHECK(c.input_tokens == TokenCount{123, TokenMethod::provider_reported});
  CHECK(c.output_tokens == TokenCount{45, TokenMethod::provider_reported});

  CHECK(seen_auth == "Bearer sk-test-secret");
  nlohmann::json req = nlohmann::json::parse(seen_body);
  CHECK(req["model"] == "test-model");
  CHECK(req["temperature"] == 0);
  CHECK(req["messages"][0]["content"] == "hello there");
  CHECK(req["messages"][0]["role"] == "user");

  CHECK(client.id() == server.config().base_url + "#test-model");
  CHECK(client.max_concurrent() == 4);
}

TEST_CASE("http client: missing usage falls back to word counts") {
  EnvKey env;
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    res.set_content(ok_body("two words", false), "application/json");
  });
  HttpLlmClient client(server.config());
  Completion c = client.generate("a three word prompt");  // 4 words
  CHECK(c.input_tokens == TokenCount{4, TokenMethod::word_approx});
  CHECK(c.output_tokens == TokenCount{2, TokenMethod::word_approx});
}

TEST_CASE("http client: 429 then success is retried") {
  EnvKey env;
  std::atomic<int> hits{0};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    if (hits.fetch_add(1) < 2) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
    } else {
      res.set_content(ok_body("finally", true), "application/json");
    }
  });
  HttpLlmClient client(server.config());
  CHECK(client.generate("q").text == "finally");
  CHECK(hits.load() == 3);
}

TEST_CASE("http client: persistent 429 exhausts retries") {
  EnvKey env;
  std::atomic<int> hits{0};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    hits.fetch_add(1);
    res.status = 429;
  });
  HttpLlmClient client(server.config(/*max_retries=*/1));
  CHECK_THROWS_AS(client.generate("q"), RateLimitedError);
  CHECK(hits.load() == 2);  // max_retries + 1 attempts
}

TEST_CASE("http client: 500 then success is retried") {
  EnvKey env;
  std::atomic<int> hits{0};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    if (hits.fetch_add(1) == 0)
      res.status = 503;
    else
      res.set_content(ok_body("ok", true), "application/json");
  });
  HttpLlmClient client(server.config());
  CHECK(client.generate("q").text == "ok");
  CHECK(hits.load() == 2);
}

TEST_CASE("http client: context overflow is surfaced, not retried") {
  EnvKey env;
  std::atomic<int> hits{0};

  SUBCASE("400 with overflow marker") {
    TestServer server([&](const httplib::Request&, httplib::Response& res) {
      hits.fetch_add(1);
      res.status = 400;
      res.set_content("{\"error\": {\"code\": \"context_length_exceeded\"}}",
                      "application/json");
    });
    HttpLlmClient client(server.config());
    CHECK_THROWS_AS(client.generate("q"), ContextOverflowError);
    CHECK(hits.load() == 1);
  }
  SUBCASE("413 payload too large") {
    TestServer server([&](const httplib::Request&, httplib::Response& res) {
      hits.fetch_add(1);
      res.status = 413;
    });
    HttpLlmClient client(server.config());
    CHECK_THROWS_AS(client.generate("q"), ContextOverflowError);
    CHECK(hits.load() == 1);
  }
  SUBCASE("prose mention of the window counts too") {
    TestServer server([&](const httplib::Request&, httplib::Response& res) {
      hits.fetch_add(1);
      res.status = 400;
      res.set_content("This model's maximum context length is 8192 tokens.", "text/plain");
    });
    HttpLlmClient client(server.config());
    CHECK_THROWS_AS(client.generate("q"), ContextOverflowError);
    CHECK(hits.load() == 1);
  }
}

TEST_CASE("http client: other 4xx fails immediately") {
  EnvKey env;
  std::atomic<int> hits{0};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    hits.fetch_add(1);
    res.status = 403;
    res.set_content("forbidden", "text/plain");
  });
  HttpLlmClient client(server.config());
  try {
    client.generate("q");
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.status() == 403);
    CHECK(e.body() == "forbidden");
  }
  CHECK(hits.load() == 1);
}

TEST_CASE("http client: malformed 200 bodies are backend errors") {
  EnvKey env;
  SUBCASE("unparseable json") {
    TestServer server([&](const httplib::Request&, httplib::Response& res) {
      res.set_content("not json", "text/plain");
    });
    HttpLlmClient client(server.config(0));
    CHECK_THROWS_AS(client.generate("q"), BackendError);
  }
  SUBCASE("missing choices") {
    TestServer server([&](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"choices\": []}", "application/json");
    });
    HttpLlmClient client(server.config(0));
    CHECK_THROWS_AS(client.generate("q"), BackendError);
  }
}

TEST_CASE("http client: read timeout maps to TimeoutError") {
  EnvKey env;
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(600ms);
    res.set_content(ok_body("late", true), "application/json");
  });
  ProviderConfig cfg = server.config(/*max_retries=*/0);
  cfg.request_timeout = 200ms;
  HttpLlmClient client(cfg);
  CHECK_THROWS_AS(client.generate("q"), TimeoutError);
}

TEST_CASE("http client: concurrency stays under max_concurrent") {
  EnvKey env;
  std::atomic<int> active{0}, peak{0}, served{0};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    int now = active.fetch_add(1) + 1;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(40ms);
    active.fetch_sub(1);
    served.fetch_add(1);
    res.set_content(ok_body("done", true), "application/json");
  });

  ProviderConfig cfg = server.config();
  cfg.max_concurrent = 2;
  HttpLlmClient client(cfg);

  std::vector<std::thread> threads;
  for (int i = 0; i < 6; ++i)
    threads.emplace_back([&] { CHECK(client.generate("q").text == "done"); });
  for (auto& t : threads) t.join();

  CHECK(served.load() == 6);
  CHECK(peak.load() <= 2);
}

TEST_CASE("http client: refuses to start without the API key env var") {
  unsetenv("SELFROUTE_MISSING_KEY");
  ProviderConfig cfg;
  cfg.base_url = "http://127.0.0.1:1";
  cfg.model = "m";
  cfg.api_key_env = "SELFROUTE_MISSING_KEY";
  CHECK_THROWS_AS(HttpLlmClient{cfg}, ConfigError);
}
