#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "selfroute/corpus.hpp"

namespace selfroute {

struct Completion {
  std::string text;
  TokenCount input_tokens;
  TokenCount output_tokens;
  std::chrono::milliseconds latency{0};
};

/// Connection and retry settings for an OpenAI-compatible chat backend.
/// The API key is never stored in config files, only its env var name.
struct ProviderConfig {
  std::string base_url;
  std::string model;
  std::string api_key_env = "LLM_API_KEY";
  int max_retries = 3;  // retries after the first attempt, 0..10
  std::chrono::milliseconds request_timeout{30000};
  std::size_t max_concurrent = 4;
  std::chrono::milliseconds retry_base_delay{250};
  // Embedding endpoint overrides; empty embed_base_url falls back to
  // base_url. embed_model is required only when embeddings are used.
  std::string embed_model;
  std::string embed_base_url;

  void validate() const;  // throws ConfigError

  /// Minimal TOML (key = "string" | integer, # comments, optional [section]
  /// headers which are ignored). Unknown keys are rejected.
  static ProviderConfig from_toml_file(const std::filesystem::path& path);
};

/// A text-in/text-out completion backend. Implementations must be safe for
/// concurrent generate() calls.
class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual Completion generate(const std::string& prompt) = 0;
  /// Stable identifier used in run hashes (e.g. "openai:gpt-4o" or "mock:<h>").
  virtual std::string id() const = 0;
  /// Upper bound on in-flight generate() calls the backend allows.
  virtual std::size_t max_concurrent() const { return 1; }
};

/// Shared entry point: rejects empty/whitespace-only prompts up front so no
/// backend ever sees one.
Completion generate(LlmProvider& provider, const std::string& prompt);

/// Exponential backoff with additive jitter: base * 2^(attempt-1) + jitter,
/// where attempt counts from 1 and jitter_unit in [0, 1) scales one extra
/// base interval. Pure so retry schedules are testable.
std::chrono::milliseconds backoff_delay(int attempt, std::chrono::milliseconds base,
                                        double jitter_unit);

/// Deterministic scripted backend for offline runs and tests.
///
/// Matching: an exact-prompt entry wins outright; otherwise substring
/// patterns are consulted — exactly one hit returns its response, zero hits
/// return the default response, and two or more hits throw AmbiguousMatch.
/// Token counts are word_approx. Calls are logged in order.
class ScriptedMockLlm final : public LlmProvider {
 public:
  explicit ScriptedMockLlm(std::string default_response = "unanswerable");

  void add_exact(std::string prompt, std::string response);
  void add_substring(std::string pattern, std::string response);
  void set_default_response(std::string response);
  /// Optional fixed context window in words; longer prompts throw
  /// ContextOverflow, mimicking a real backend's hard limit.
  void set_context_window(std::size_t max_prompt_words);
  void set_max_concurrent(std::size_t n);

  Completion generate(const std::string& prompt) override;
  std::string id() const override;
  std::size_t max_concurrent() const override;

  std::vector<std::string> call_log() const;
  std::size_t call_count() const;

  /// JSON object of matcher -> response. Keys are substring patterns except
  /// "*", which sets the default response. Missing "*" keeps "unanswerable".
  static std::unique_ptr<ScriptedMockLlm> from_fixture_file(const std::filesystem::path& path);

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> exact_;
  std::vector<std::pair<std::string, std::string>> substrings_;
  std::string default_response_;
  std::size_t max_prompt_words_ = 0;  // 0 = unlimited
  std::size_t max_concurrent_ = 4;
  std::vector<std::string> calls_;
};

}  // namespace selfroute
