#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "selfroute/corpus.hpp"

namespace selfroute {

enum class RunMode { rag, lc, route };

std::string_view to_string(RunMode mode);
RunMode run_mode_from_string(std::string_view name);

enum class AnsweredBy { rag, lc };

std::string_view to_string(AnsweredBy by);

/// Full record of one Self-Route execution: which step answered, both
/// predictions, and token usage per step.
struct RouteDecision {
  std::string query_id;
  AnsweredBy answered_by = AnsweredBy::rag;
  std::string rag_response;
  std::string final_answer;
  TokenCount route_input_tokens;
  TokenCount route_output_tokens;
  TokenCount lc_input_tokens;   // zero when answered_by == rag
  TokenCount lc_output_tokens;  // zero when answered_by == rag
  std::vector<std::size_t> retrieved_indices;

  TokenCount total_tokens() const;

  bool operator==(const RouteDecision&) const = default;
};

/// Per-query result persisted to records.jsonl; the unit of resumability.
struct RunRecord {
  std::string query_id;
  RunMode mode = RunMode::lc;
  std::string prediction;
  std::optional<double> score;  // present iff error absent
  TokenCount input_tokens;
  TokenCount output_tokens;
  std::vector<std::size_t> retrieved_indices;  // rag and route modes
  std::optional<RouteDecision> decision;       // route mode
  std::optional<std::string> error;

  bool operator==(const RunRecord&) const = default;
};

std::string to_json_line(const RunRecord& record);
RunRecord run_record_from_json_line(const std::string& line);

std::vector<RunRecord> read_records_jsonl(const std::filesystem::path& path);
void write_records_jsonl(const std::vector<RunRecord>& records,
                         const std::filesystem::path& path);

/// Aggregate of one run; serialized as summary.json.
struct Summary {
  double mean_score = 0.0;
  std::size_t n = 0;
  std::optional<double> answerable_pct;
  std::uint64_t input_tokens = 0;
  std::uint64_t output_tokens = 0;
  std::optional<double> token_pct_vs_lc;
};

std::string summary_to_json(const Summary& summary);
Summary summary_from_json(const std::string& text);
void write_summary(const Summary& summary, const std::filesystem::path& path);
Summary read_summary(const std::filesystem::path& path);

}  // namespace selfroute
