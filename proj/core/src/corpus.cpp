#include "selfroute/corpus.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "selfroute/errors.hpp"
#include "selfroute/text.hpp"

namespace selfroute {

using nlohmann::json;

std::string_view to_string(TokenMethod method) {
  return method == TokenMethod::provider_reported ? "provider_reported" : "word_approx";
}

TokenMethod token_method_from_string(std::string_view name) {
  if (name == "provider_reported") return TokenMethod::provider_reported;
  if (name == "word_approx") return TokenMethod::word_approx;
  throw ConfigError("unknown token counting method: " + std::string(name));
}

TokenCount count_tokens(std::string_view text, TokenMethod method) {
  if (method != TokenMethod::word_approx)
    throw std::invalid_argument("count_tokens computes word_approx only");
  return TokenCount{count_words(text), TokenMethod::word_approx};
}

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::open_qa: return "open_qa";
    case TaskKind::multi_choice: return "multi_choice";
    case TaskKind::summarization: return "summarization";
  }
  return "open_qa";
}

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::qa_f1: return "qa_f1";
    case MetricKind::mc_accuracy: return "mc_accuracy";
    case MetricKind::rouge_l: return "rouge_l";
  }
  return "qa_f1";
}

MetricKind metric_for(TaskKind kind) {
  switch (kind) {
    case TaskKind::open_qa: return MetricKind::qa_f1;
    case TaskKind::multi_choice: return MetricKind::mc_accuracy;
    case TaskKind::summarization: return MetricKind::rouge_l;
  }
  return MetricKind::qa_f1;
}

std::string_view to_string(DatasetFormat format) {
  return format == DatasetFormat::longbench_jsonl ? "longbench_jsonl" : "infbench_jsonl";
}

DatasetFormat dataset_format_from_string(std::string_view name) {
  if (name == "longbench_jsonl") return DatasetFormat::longbench_jsonl;
  if (name == "infbench_jsonl") return DatasetFormat::infbench_jsonl;
  throw ConfigError("unknown dataset format: " + std::string(name));
}

TaskKind default_task_kind(std::string_view dataset_name) {
  std::string lowered = to_lower(dataset_name);
  if (lowered.find("qmsum") != std::string::npos || lowered == "sum")
    return TaskKind::summarization;
  return TaskKind::open_qa;
}

namespace {

std::string strip_choice_prefix(std::string_view choice) {
  // "A) foo", "A. foo", "A: foo", "(A) foo" -> "foo"
  std::string t = trim(choice);
  std::size_t i = 0;
  if (i < t.size() && t[i] == '(') ++i;
  if (i < t.size() && t[i] >= 'A' && t[i] <= 'D') {
    std::size_t j = i + 1;
    if (j < t.size() && (t[j] == ')' || t[j] == '.' || t[j] == ':')) ++j;
    if (j < t.size() && (t[j] == ' ' || t[j] == ')')) {
      while (j < t.size() && (t[j] == ')' || t[j] == ' ')) ++j;
      return trim(t.substr(j));
    }
  }
  return t;
}

std::string normalized_key(std::string_view text) {
  return join_words(tokenize_simple(text));
}

std::optional<char> gold_letter_for(const std::string& gold,
                                    const std::vector<std::string>& choices) {
  if (auto letter = extract_answer_letter(gold)) return *letter;
  std::string key = normalized_key(gold);
  if (key.empty()) return std::nullopt;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (normalized_key(strip_choice_prefix(choices[i])) == key ||
        normalized_key(choices[i]) == key) {
      if (auto prefix = extract_answer_letter(choices[i])) return *prefix;
      return static_cast<char>('A' + i);
    }
  }
  return std::nullopt;
}

struct RawRecord {
  std::string context;
  std::string question;
  std::vector<std::string> answers;
  std::optional<std::vector<std::string>> choices;
  std::optional<std::string> id;
};

std::vector<std::string> string_list(const json& value, std::size_t line,
                                     const std::string& field) {
  std::vector<std::string> out;
  if (value.is_string()) {
    out.push_back(value.get<std::string>());
    return out;
  }
  if (!value.is_array())
    throw InvalidFieldError(line, field, "expected a string or an array of strings");
  for (const auto& item : value) {
    if (!item.is_string())
      throw InvalidFieldError(line, field, "array elements must be strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

RawRecord parse_record(const json& rec, DatasetFormat format, std::size_t line) {
  RawRecord raw;
  if (!rec.is_object()) throw MalformedJsonError(line, "record is not a JSON object");

  if (!rec.contains("context")) throw MissingFieldError(line, "context");
  if (!rec.contains("input")) throw MissingFieldError(line, "input");
  raw.context = rec.at("context").get<std::string>();
  raw.question = rec.at("input").get<std::string>();

  if (format == DatasetFormat::longbench_jsonl) {
    if (!rec.contains("answers")) throw MissingFieldError(line, "answers");
    raw.answers = string_list(rec.at("answers"), line, "answers");
    if (rec.contains("all_classes") && !rec.at("all_classes").is_null()) {
      auto classes = string_list(rec.at("all_classes"), line, "all_classes");
      if (!classes.empty()) raw.choices = std::move(classes);
    }
  } else {
    // infbench_jsonl maps "answer"/"options"/"id" onto the same record shape
    const char* answer_field = rec.contains("answers") ? "answers" : "answer";
    if (!rec.contains(answer_field)) throw MissingFieldError(line, "answer");
    raw.answers = string_list(rec.at(answer_field), line, answer_field);
    if (rec.contains("options") && !rec.at("options").is_null()) {
      auto options = string_list(rec.at("options"), line, "options");
      if (!options.empty()) raw.choices = std::move(options);
    }
  }

  for (const char* id_field : {"_id", "id"}) {
    if (rec.contains(id_field) && !rec.at(id_field).is_null()) {
      const auto& v = rec.at(id_field);
      raw.id = v.is_string() ? v.get<std::string>() : v.dump();
      break;
    }
  }
  return raw;
}

QueryTask task_from_record(RawRecord&& raw, const std::string& name, std::size_t line) {
  if (trim(raw.context).empty())
    throw InvalidFieldError(line, "context", "empty after trimming whitespace");
  if (raw.answers.empty()) throw MissingFieldError(line, "answers");
  if (raw.choices && raw.choices->size() != 4)
    throw InvalidFieldError(line, "all_classes",
                            "expected exactly 4 choices, got " +
                                std::to_string(raw.choices->size()));

  QueryTask task;
  task.dataset_id = name;
  task.id = raw.id ? *raw.id : name + ":" + std::to_string(line);
  task.context = std::move(raw.context);
  task.question = std::move(raw.question);
  task.gold_answers = std::move(raw.answers);
  task.choices = std::move(raw.choices);
  task.task_kind = task.choices ? TaskKind::multi_choice : default_task_kind(name);

  if (task.task_kind == TaskKind::multi_choice) {
    for (const auto& gold : task.gold_answers) {
      if (!gold_letter_for(gold, *task.choices))
        throw InvalidFieldError(line, "answers",
                                "gold answer \"" + gold +
                                    "\" does not resolve to a choice letter");
    }
  }
  return task;
}

}  // namespace

char resolve_gold_letter(const QueryTask& task) {
  if (task.task_kind != TaskKind::multi_choice || !task.choices)
    throw Error("task " + task.id + " is not multi-choice");
  for (const auto& gold : task.gold_answers) {
    if (auto letter = gold_letter_for(gold, *task.choices)) return *letter;
  }
  throw Error("task " + task.id + ": no gold answer resolves to a letter");
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  return load_dataset(path, format, path.stem().string());
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const std::string& name) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path.string());

  Dataset dataset;
  dataset.name = name;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw MalformedJsonError(line_no, e.what());
    }
    dataset.tasks.push_back(task_from_record(parse_record(rec, format, line_no), name, line_no));
  }
  if (dataset.tasks.empty()) throw EmptyDatasetError(path.string());

  TaskKind kind = dataset.tasks.front().task_kind;
  for (const auto& task : dataset.tasks) {
    if (task.task_kind != kind) throw MixedTaskKindsError(name);
  }
  dataset.metric_kind = metric_for(kind);
  return dataset;
}

void write_dataset_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file: " + path.string());
  for (const auto& task : dataset.tasks) {
    json rec;
    rec["_id"] = task.id;
    rec["context"] = task.context;
    rec["input"] = task.question;
    rec["answers"] = task.gold_answers;
    if (task.choices) rec["all_classes"] = *task.choices;
    out << rec.dump() << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace selfroute
