#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "selfroute/corpus.hpp"

namespace selfroute {

enum class PromptKind { lc, rag, route, no_context, failure_classify };

std::string_view to_string(PromptKind kind);

/// The decline option appended to route prompts whose template does not
/// already offer one.
inline constexpr std::string_view kDeclineSentence =
    "Write unanswerable if the query can not be answered based on the provided text.";

/// A dataset prompt template over the placeholders {context}, {input} and
/// (for multiple choice) {all_classes}. Construction validates the body:
/// {context} and {input} are required, braces must form known placeholders.
struct PromptTemplate {
  std::string id;
  std::string body;
  bool requires_choices = false;  // body contains {all_classes}

  static PromptTemplate parse(std::string id, std::string body);

  bool operator==(const PromptTemplate&) const = default;
};

struct RenderedPrompt {
  std::string text;
  PromptKind kind = PromptKind::lc;
};

/// Substitute placeholders: {context} <- context_text, {input} <- question,
/// {all_classes} <- choices joined one per line. Blank context or question is
/// rejected; templates requiring choices reject tasks without them.
RenderedPrompt render(const PromptTemplate& tmpl, std::string_view context_text,
                      std::string_view question,
                      const std::optional<std::vector<std::string>>& choices,
                      PromptKind kind = PromptKind::lc);

/// The routing prompt: the dataset template over the retrieved chunks, with
/// the decline sentence appended when the template does not already mention
/// "unanswerable". Idempotent: the sentence is never appended twice.
RenderedPrompt make_route_prompt(const PromptTemplate& tmpl, std::string_view retrieved_text,
                                 std::string_view question,
                                 const std::optional<std::vector<std::string>>& choices);

/// A question-only prompt (no document) used to probe whether a task is
/// answerable from the model's own knowledge.
RenderedPrompt make_no_context_prompt(std::string_view question,
                                      const std::optional<std::vector<std::string>>& choices);

/// A manually annotated example for the failure-classification prompt.
/// `answer` is the JSON the model is expected to emit.
struct FailureExample {
  std::string text;
  std::string question;
  std::string answer;
};

/// JSON array of {"text", "question", "answer"} objects.
std::vector<FailureExample> load_failure_examples(const std::filesystem::path& path);

/// The failure-analysis prompt: classification instructions with reason codes
/// A-E, then the few-shot examples, then the retrieved text and the question.
RenderedPrompt make_failure_prompt(std::string_view retrieved_text, std::string_view question,
                                   const std::vector<FailureExample>& few_shot);

/// Maps dataset ids to prompt templates. Ships with built-in templates for
/// the supported benchmark datasets plus generic fallbacks; a directory of
/// <id>.txt files can override or extend them.
class PromptLibrary {
 public:
  static PromptLibrary builtin();

  /// Merge every "<id>.txt" under dir into the library (override on clash).
  void load_dir(const std::filesystem::path& dir);

  /// Write each template to "<id>.txt" under dir.
  void write_dir(const std::filesystem::path& dir) const;

  /// Lookup by dataset id (case- and punctuation-insensitive, prefix
  /// tolerant). Unknown ids fall back to a generic template for the task
  /// kind; *used_fallback reports when that happened.
  const PromptTemplate& for_dataset(std::string_view dataset_id,
                                    TaskKind kind = TaskKind::open_qa,
                                    bool* used_fallback = nullptr) const;

  bool has(std::string_view id) const;
  std::vector<std::string> ids() const;

  bool operator==(const PromptLibrary&) const = default;

 private:
  std::map<std::string, PromptTemplate> templates_;  // key: normalized id
};

}  // namespace selfroute
