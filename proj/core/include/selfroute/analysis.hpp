#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "selfroute/corpus.hpp"
#include "selfroute/llm.hpp"
#include "selfroute/prompts.hpp"
#include "selfroute/records.hpp"
#include "selfroute/retrieval.hpp"
#include "selfroute/router.hpp"

namespace selfroute {

/// One row of the k-sweep: score and input-token cost (as a percentage of
/// the LC baseline) for plain RAG and for routing at a given k.
struct KSweepRow {
  std::size_t k = 0;
  double rag_score = 0.0;
  double route_score = 0.0;
  double rag_token_pct = 0.0;
  double route_token_pct = 0.0;
};

/// Run the LC baseline once, then RAG and routed runs per k (in-memory, no
/// run directories). ks must be non-empty and strictly ascending. Per-query
/// failures become error records and are excluded from means, like in
/// run_benchmark.
std::vector<KSweepRow> sweep_k(const Dataset& dataset, const Retriever& retriever,
                               LlmProvider& llm, const PromptLibrary& prompts,
                               const RouterConfig& base, const std::vector<std::size_t>& ks);

/// CSV with header k,rag_score,route_score,rag_token_pct,route_token_pct.
void write_sweep_csv(const std::vector<KSweepRow>& rows, const std::filesystem::path& path);

/// Why retrieval failed for a query the router declined to answer, reason
/// codes A-E of the failure-classification prompt.
enum class FailureReason { multi_step, general_query, long_complex, implicit, other };

char to_letter(FailureReason reason);
FailureReason failure_reason_from_letter(char letter);
std::string_view to_string(FailureReason reason);

struct FailureLabel {
  std::string query_id;
  FailureReason reason = FailureReason::other;
  std::string raw_response;
};

/// Classify the routed records that fell back to LC. The retrieved chunks
/// are reconstructed from each record's retrieved_indices over the task's
/// context. Unparseable model output falls into `other` with the raw
/// response retained. Runs under the provider's concurrency cap.
std::vector<FailureLabel> classify_failures(const Dataset& dataset,
                                            const std::vector<RunRecord>& records,
                                            LlmProvider& llm,
                                            const std::vector<FailureExample>& few_shot,
                                            const RouterConfig& config);

/// Fraction per reason over the labeled set (sums to 1 when non-empty).
std::map<FailureReason, double> failure_distribution(const std::vector<FailureLabel>& labels);

/// CSV with header dataset,reason,count; one row per reason code A-E.
void write_failures_csv(const std::string& dataset_name,
                        const std::vector<FailureLabel>& labels,
                        const std::filesystem::path& path);

/// Split of a dataset into tasks answerable without the document (asked via
/// the no-context prompt) and the rest.
struct CommonsenseSplit {
  std::vector<std::string> commonsense_ids;
  Dataset filtered;  // tasks that do need the document
};

/// A task counts as commonsense-answerable when the no-context answer gets
/// full marks (multiple choice) or F1 >= threshold (open QA / summarization).
/// Queries whose probe call fails are conservatively retained in `filtered`.
CommonsenseSplit filter_commonsense(const Dataset& dataset, LlmProvider& llm,
                                    double threshold = 80.0);

}  // namespace selfroute
