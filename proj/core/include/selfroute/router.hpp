#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "selfroute/corpus.hpp"
#include "selfroute/errors.hpp"
#include "selfroute/llm.hpp"
#include "selfroute/prompts.hpp"
#include "selfroute/records.hpp"
#include "selfroute/retrieval.hpp"

namespace selfroute {

/// A response counts as a decline when the standalone word "unanswerable"
/// appears within its first ten words (case- and punctuation-insensitive).
bool is_unanswerable(std::string_view response);

struct RouterConfig {
  std::size_t k = kDefaultTopK;
  std::size_t chunk_size = kDefaultChunkSize;
  ChunkOrder chunk_order = ChunkOrder::score_desc;
  /// Preferred token accounting. word_approx recounts prompts/responses
  /// locally (deterministic, offline); provider_reported trusts backend
  /// usage when available.
  TokenMethod counting = TokenMethod::word_approx;
};

/// Everything that identifies a run's outputs. Two runs with equal specs
/// write to the same directory and may resume each other.
struct RunSpec {
  std::string dataset_name;
  RunMode mode = RunMode::lc;
  RouterConfig router;
  std::string retriever_id;
  std::string model_id;
};

/// Stable JSON string over the run-identifying fields (sorted keys).
std::string canonical_run_key(const RunSpec& spec);

/// 16-hex-char name of the run directory under the output root.
std::string run_hash(const RunSpec& spec);

/// Execute one query in the given mode. Context-overflow failures become
/// error records; transport errors propagate to the caller.
RunRecord run_query(const QueryTask& task, RunMode mode, const Retriever& retriever,
                    LlmProvider& llm, const PromptLibrary& prompts,
                    const RouterConfig& config);

/// Step one: pose the route prompt over the top-k retrieved chunks; accept
/// the answer unless the model declines. Step two (declined queries only):
/// ask again over the full context. Route-step failures propagate; an LC-step
/// context overflow throws RouteLcOverflowError carrying the partial decision.
RouteDecision self_route(const QueryTask& task, const Retriever& retriever, LlmProvider& llm,
                         const PromptLibrary& prompts, const RouterConfig& config);

class RouteLcOverflowError : public ContextOverflowError {
 public:
  RouteLcOverflowError(const std::string& detail, RouteDecision partial)
      : ContextOverflowError(detail), partial_(std::move(partial)) {}
  const RouteDecision& partial() const { return partial_; }

 private:
  RouteDecision partial_;
};

struct BenchmarkResult {
  std::vector<RunRecord> records;  // sorted by query id
  Summary summary;
  std::filesystem::path run_dir;
  std::size_t executed = 0;  // queries actually run in this invocation
};

/// Run a whole dataset. Results live in <out_dir>/<run_hash>/: records.jsonl
/// (appended incrementally, rewritten sorted by query id at the end),
/// summary.json, and config.json (config_echo when given, else the canonical
/// run key). Query ids already present in records.jsonl are skipped, which
/// makes interrupted runs resumable. Per-query failures are recorded as
/// error records and the run continues; only I/O failures abort.
BenchmarkResult run_benchmark(const Dataset& dataset, RunMode mode, const Retriever& retriever,
                              LlmProvider& llm, const PromptLibrary& prompts,
                              const RouterConfig& config, const std::filesystem::path& out_dir,
                              const std::string& config_echo = "");

/// Order used for records.jsonl: digit runs compare numerically, everything
/// else bytewise, so "d:2" sorts before "d:10".
bool natural_less(std::string_view a, std::string_view b);

/// Short, stable tag describing a failure, recorded in RunRecord.error.
std::string error_tag(const std::exception& e);

}  // namespace selfroute
