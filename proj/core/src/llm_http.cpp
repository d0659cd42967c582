#include "selfroute/llm_http.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "selfroute/errors.hpp"
#include "selfroute/text.hpp"

namespace selfroute {

namespace {

// Counting gate for in-flight requests. Hand-rolled so the release order and
// max count are dead simple to reason about.
class Gate {
 public:
  explicit Gate(std::size_t slots) : slots_(slots) {}
  void acquire() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return slots_ > 0; });
    --slots_;
  }
  void release() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++slots_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t slots_;
};

struct GateGuard {
  Gate& gate;
  explicit GateGuard(Gate& g) : gate(g) { gate.acquire(); }
  ~GateGuard() { gate.release(); }
};

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path_prefix;
};

SplitUrl split_url(const std::string& base_url) {
  const std::size_t scheme = base_url.find("://");
  if (scheme == std::string::npos)
    throw ConfigError("base_url must include a scheme: " + base_url);
  const std::size_t slash = base_url.find('/', scheme + 3);
  SplitUrl out;
  if (slash == std::string::npos) {
    out.origin = base_url;
  } else {
    out.origin = base_url.substr(0, slash);
    out.path_prefix = base_url.substr(slash);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/')
      out.path_prefix.pop_back();
  }
  return out;
}

bool looks_like_context_overflow(int status, const std::string& body) {
  if (status == 413) return true;
  if (status != 400) return false;
  return body.find("context_length_exceeded") != std::string::npos ||
         body.find("maximum context length") != std::string::npos ||
         body.find("context window") != std::string::npos;
}

}  // namespace

struct HttpLlmClient::Impl {
  ProviderConfig config;
  SplitUrl url;
  std::string api_key;
  Gate gate;
  std::mutex rng_mu;
  std::mt19937_64 rng;

  explicit Impl(ProviderConfig cfg)
      : config(std::move(cfg)),
        url(split_url(config.base_url)),
        gate(config.max_concurrent),
        rng(std::random_device{}()) {
    const char* key = std::getenv(config.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw ConfigError("environment variable " + config.api_key_env +
                        " (API key) is not set");
    api_key = key;
  }

  double jitter_unit() {
    std::lock_guard<std::mutex> lock(rng_mu);
    // 53 random bits -> [0, 1)
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }

  Completion run(const std::string& prompt) {
    GateGuard guard(gate);

    nlohmann::json body{
        {"model", config.model},
        {"messages", nlohmann::json::array({nlohmann::json{
                         {"role", "user"}, {"content", prompt}}})},
        {"temperature", 0},
    };
    const std::string payload = body.dump();
    const std::string path = url.path_prefix + "/chat/completions";
    const httplib::Headers headers{{"Authorization", "Bearer " + api_key}};

    const int attempts_allowed = config.max_retries + 1;
    int last_status = 0;
    std::string last_body;
    bool last_was_timeout = false;
    std::string last_transport;

    for (int attempt = 1; attempt <= attempts_allowed; ++attempt) {
      if (attempt > 1) {
        std::this_thread::sleep_for(
            backoff_delay(attempt - 1, config.retry_base_delay, jitter_unit()));
      }

      httplib::Client client(url.origin);
      const auto sec = std::chrono::duration_cast<std::chrono::seconds>(config.request_timeout);
      const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(
          config.request_timeout - sec);
      client.set_connection_timeout(sec.count(), usec.count());
      client.set_read_timeout(sec.count(), usec.count());
      client.set_write_timeout(sec.count(), usec.count());

      const auto t0 = std::chrono::steady_clock::now();
      httplib::Result res = client.Post(path, headers, payload, "application/json");
      const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - t0);

      if (!res) {
        const httplib::Error err = res.error();
        last_was_timeout = (err == httplib::Error::ConnectionTimeout ||
                            err == httplib::Error::Read || err == httplib::Error::Write);
        last_transport = httplib::to_string(err);
        continue;  // transport problems are transient; retry
      }

      last_status = res->status;
      last_body = res->body;
      last_transport.clear();
      last_was_timeout = false;

      if (res->status == 200) return parse_completion(res->body, prompt, elapsed);
      if (looks_like_context_overflow(res->status, res->body))
        throw ContextOverflowError("backend rejected prompt as too long: " + res->body);
      if (res->status == 429 || res->status >= 500) continue;  // retryable
      throw BackendError(res->status, res->body);
    }

    if (!last_transport.empty()) {
      if (last_was_timeout)
        throw TimeoutError("request timed out after " + std::to_string(attempts_allowed) +
                           " attempts");
      throw BackendError(0, "transport failure after " + std::to_string(attempts_allowed) +
                                " attempts: " + last_transport);
    }
    if (last_status == 429) throw RateLimitedError(attempts_allowed);
    throw BackendError(last_status, last_body);
  }

  Completion parse_completion(const std::string& body, const std::string& prompt,
                              std::chrono::milliseconds latency) const {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
      throw BackendError(200, "unparseable response body");
    }
    if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
      throw BackendError(200, "response missing choices");
    const nlohmann::json& first = doc["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string())
      throw BackendError(200, "response missing message content");

    Completion out;
    out.text = first["message"]["content"].get<std::string>();
    out.latency = latency;
    if (doc.contains("usage") && doc["usage"].is_object() &&
        doc["usage"].contains("prompt_tokens") && doc["usage"].contains("completion_tokens")) {
      out.input_tokens = TokenCount{doc["usage"]["prompt_tokens"].get<std::uint64_t>(),
                                    TokenMethod::provider_reported};
      out.output_tokens = TokenCount{doc["usage"]["completion_tokens"].get<std::uint64_t>(),
                                     TokenMethod::provider_reported};
    } else {
      out.input_tokens = count_tokens(prompt);
      out.output_tokens = count_tokens(out.text);
    }
    return out;
  }
};

HttpLlmClient::HttpLlmClient(ProviderConfig config) {
  config.validate();
  impl_ = std::make_unique<Impl>(std::move(config));
}

HttpLlmClient::~HttpLlmClient() = default;

Completion HttpLlmClient::generate(const std::string& prompt) { return impl_->run(prompt); }

std::string HttpLlmClient::id() const {
  return impl_->config.base_url + "#" + impl_->config.model;
}

std::size_t HttpLlmClient::max_concurrent() const { return impl_->config.max_concurrent; }

}  // namespace selfroute
