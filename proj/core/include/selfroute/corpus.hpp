#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selfroute {

enum class TokenMethod { provider_reported, word_approx };

std::string_view to_string(TokenMethod method);
TokenMethod token_method_from_string(std::string_view name);

/// An approximate token count plus the method that produced it. Ratios are
/// only ever formed between counts with the same method.
struct TokenCount {
  std::uint64_t value = 0;
  TokenMethod method = TokenMethod::word_approx;

  bool operator==(const TokenCount&) const = default;
};

/// word_approx counting: number of whitespace-separated words. Only
/// word_approx is computable offline; provider_reported counts come from LLM
/// responses.
TokenCount count_tokens(std::string_view text, TokenMethod method = TokenMethod::word_approx);

enum class TaskKind { open_qa, multi_choice, summarization };
enum class MetricKind { qa_f1, mc_accuracy, rouge_l };

std::string_view to_string(TaskKind kind);
std::string_view to_string(MetricKind kind);
MetricKind metric_for(TaskKind kind);

/// One benchmark example: a long document, a question, and gold answers.
struct QueryTask {
  std::string id;
  std::string dataset_id;
  std::string context;
  std::string question;
  std::vector<std::string> gold_answers;
  std::optional<std::vector<std::string>> choices;  // exactly 4 when present
  TaskKind task_kind = TaskKind::open_qa;

  bool operator==(const QueryTask&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<QueryTask> tasks;
  MetricKind metric_kind = MetricKind::qa_f1;

  bool operator==(const Dataset&) const = default;
};

enum class DatasetFormat { longbench_jsonl, infbench_jsonl };

std::string_view to_string(DatasetFormat format);
DatasetFormat dataset_format_from_string(std::string_view name);

/// Load a JSONL dataset; one record per line, file order preserved. The
/// dataset name defaults to the file stem. Ids are taken from "_id" when
/// present, otherwise synthesized as "<name>:<line>" (1-based).
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const std::string& name);

/// Emit the longbench_jsonl schema: {"_id", "context", "input", "answers",
/// "all_classes"?}. Reloading the written file yields an identical Dataset.
void write_dataset_jsonl(const Dataset& dataset, const std::filesystem::path& path);

/// Task kind implied by a dataset's name for records without choices:
/// summarization for QMSum-like names, open QA otherwise.
TaskKind default_task_kind(std::string_view dataset_name);

/// Gold answers of multi-choice tasks resolve to a letter either directly
/// ("B", "B) foo") or by matching the gold text against one of the choices.
char resolve_gold_letter(const QueryTask& task);

}  // namespace selfroute
