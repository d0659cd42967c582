#pragma once

#include <memory>
#include <string>

#include "selfroute/llm.hpp"

namespace selfroute {

/// OpenAI-compatible chat backend: POST {base_url}/chat/completions with
/// temperature 0. Retries 429/5xx/timeouts with exponential backoff and
/// jitter, at most max_retries + 1 attempts total; a concurrency gate caps
/// in-flight requests at max_concurrent. 400-class context-window responses
/// surface as ContextOverflow — prompts are never truncated here.
class HttpLlmClient final : public LlmProvider {
 public:
  explicit HttpLlmClient(ProviderConfig config);
  ~HttpLlmClient() override;

  Completion generate(const std::string& prompt) override;
  std::string id() const override;
  std::size_t max_concurrent() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace selfroute
