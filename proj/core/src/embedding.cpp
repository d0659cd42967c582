#include "selfroute/embedding.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "selfroute/errors.hpp"
#include "selfroute/text.hpp"

namespace selfroute {

namespace {

struct SplitUrl {
  std::string origin;
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

}  // namespace

struct HttpEmbeddingProvider::Impl {
  ProviderConfig config;
  SplitUrl url;
  std::string model;
  std::string api_key;
  std::mutex rng_mu;
  std::mt19937_64 rng;

  explicit Impl(ProviderConfig cfg) : config(std::move(cfg)), rng(std::random_device{}()) {
    model = config.embed_model;
    if (trim(model).empty())
      throw ConfigError("embed_model is required for the embedding retriever");
    url = split_url(config.embed_base_url.empty() ? config.base_url : config.embed_base_url);
    const char* key = std::getenv(config.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw ConfigError("environment variable " + config.api_key_env +
                        " (API key) is not set");
    api_key = key;
  }

  double jitter_unit() {
    std::lock_guard<std::mutex> lock(rng_mu);
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }

  std::vector<EmbeddingVector> run(const std::vector<std::string>& inputs) {
    nlohmann::json body{{"input", inputs}, {"model", model}};
    const std::string payload = body.dump();
    const std::string path = url.path_prefix + "/embeddings";
    const httplib::Headers headers{{"Authorization", "Bearer " + api_key}};

    const int attempts_allowed = config.max_retries + 1;
    int last_status = 0;
    std::string last_body;
    bool saw_timeout = false;

    for (int attempt = 1; attempt <= attempts_allowed; ++attempt) {
      if (attempt > 1)
        std::this_thread::sleep_for(
            backoff_delay(attempt - 1, config.retry_base_delay, jitter_unit()));

      httplib::Client client(url.origin);
      const auto sec = std::chrono::duration_cast<std::chrono::seconds>(config.request_timeout);
      const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(
          config.request_timeout - sec);
      client.set_connection_timeout(sec.count(), usec.count());
      client.set_read_timeout(sec.count(), usec.count());
      client.set_write_timeout(sec.count(), usec.count());

      httplib::Result res = client.Post(path, headers, payload, "application/json");
      if (!res) {
        const httplib::Error err = res.error();
        saw_timeout = (err == httplib::Error::ConnectionTimeout ||
                       err == httplib::Error::Read || err == httplib::Error::Write);
        continue;
      }
      last_status = res->status;
      last_body = res->body;
      if (res->status == 200) return parse(res->body, inputs.size());
      if (res->status == 429 || res->status >= 500) continue;
      throw BackendError(res->status, res->body);
    }
    if (last_status == 429) throw RateLimitedError(attempts_allowed);
    if (saw_timeout)
      throw TimeoutError("embedding request timed out after " +
                         std::to_string(attempts_allowed) + " attempts");
    throw BackendError(last_status, last_body);
  }

  static std::vector<EmbeddingVector> parse(const std::string& body, std::size_t expected) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
      throw BackendError(200, "unparseable embeddings response");
    }
    if (!doc.contains("data") || !doc["data"].is_array())
      throw BackendError(200, "embeddings response missing data array");

    // Entries carry an "index" when the backend reorders; respect it.
    std::vector<EmbeddingVector> out(doc["data"].size());
    std::size_t fallback_index = 0;
    for (const nlohmann::json& item : doc["data"]) {
      std::size_t idx = fallback_index++;
      if (item.contains("index") && item["index"].is_number_unsigned())
        idx = item["index"].get<std::size_t>();
      if (idx >= out.size() || !item.contains("embedding") || !item["embedding"].is_array())
        throw BackendError(200, "malformed embeddings response entry");
      EmbeddingVector v;
      v.values = item["embedding"].get<std::vector<double>>();
      out[idx] = std::move(v);
    }
    if (out.size() != expected)
      throw BackendError(200, "embeddings response count mismatch");
    return out;
  }
};

HttpEmbeddingProvider::HttpEmbeddingProvider(ProviderConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpEmbeddingProvider::~HttpEmbeddingProvider() = default;

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed(
    const std::vector<std::string>& inputs) {
  if (inputs.empty()) return {};
  return impl_->run(inputs);
}

std::string HttpEmbeddingProvider::id() const {
  return (impl_->config.embed_base_url.empty() ? impl_->config.base_url
                                               : impl_->config.embed_base_url) +
         "#" + impl_->model;
}

EmbeddingRetriever::EmbeddingRetriever(std::shared_ptr<EmbeddingProvider> provider)
    : provider_(std::move(provider)) {
  if (!provider_) throw std::invalid_argument("embedding provider must not be null");
}

std::vector<ScoredChunk> EmbeddingRetriever::score(const std::string& question,
                                                   const std::vector<Chunk>& chunks) const {
  if (chunks.empty()) throw EmptyChunksError();

  // Collect texts missing from the cache (question included) and embed them
  // in one batch.
  std::vector<std::string> missing;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto want = [&](const std::string& text) {
      if (!cache_.count(text)) missing.push_back(text);
    };
    want(question);
    for (const Chunk& c : chunks) want(c.text);
  }
  if (!missing.empty()) {
    // Dedup while keeping order so the provider sees each text once.
    std::vector<std::string> unique;
    for (const std::string& t : missing)
      if (std::find(unique.begin(), unique.end(), t) == unique.end()) unique.push_back(t);
    const std::vector<EmbeddingVector> vectors = provider_->embed(unique);
    if (vectors.size() != unique.size())
      throw BackendError(200, "embedding provider returned wrong count");
    std::lock_guard<std::mutex> lock(mu_);
    for (std::size_t i = 0; i < unique.size(); ++i) cache_[unique[i]] = vectors[i];
  }

  const EmbeddingVector q = lookup(question);
  std::vector<ScoredChunk> out;
  out.reserve(chunks.size());
  for (const Chunk& c : chunks) out.push_back(ScoredChunk{c, cosine(q, lookup(c.text))});
  return out;
}

EmbeddingVector EmbeddingRetriever::lookup(const std::string& text) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(text);
  if (it == cache_.end()) throw Error("embedding cache miss for a just-embedded text");
  return it->second;
}

std::string EmbeddingRetriever::id() const { return "embed:" + provider_->id(); }

std::size_t EmbeddingRetriever::cache_size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.size();
}

}  // namespace selfroute
