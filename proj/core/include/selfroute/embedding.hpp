#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "selfroute/llm.hpp"
#include "selfroute/retrieval.hpp"

namespace selfroute {

/// Batch text-embedding backend.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  /// One vector per input, same order. All vectors share a dimension.
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& inputs) = 0;
  virtual std::string id() const = 0;
};

/// OpenAI-compatible embeddings endpoint: POST {base_url}/embeddings with
/// {"input": [...], "model": ...}. Uses the embed_* overrides from
/// ProviderConfig when present, falling back to the chat settings. Same
/// retry/backoff policy as the chat client.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(ProviderConfig config);
  ~HttpEmbeddingProvider() override;

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& inputs) override;
  std::string id() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Dense retriever: cosine similarity between the question embedding and
/// each chunk embedding. Embeddings are cached in memory for the lifetime of
/// the retriever, keyed by (provider id, text), so repeated queries against
/// the same document embed each chunk once.
class EmbeddingRetriever final : public Retriever {
 public:
  explicit EmbeddingRetriever(std::shared_ptr<EmbeddingProvider> provider);

  std::vector<ScoredChunk> score(const std::string& question,
                                 const std::vector<Chunk>& chunks) const override;
  std::string id() const override;

  std::size_t cache_size() const;

 private:
  EmbeddingVector lookup(const std::string& text) const;

  std::shared_ptr<EmbeddingProvider> provider_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, EmbeddingVector> cache_;
};

}  // namespace selfroute
