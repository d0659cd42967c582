#include "selfroute/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "selfroute/errors.hpp"
#include "selfroute/metrics.hpp"
#include "selfroute/parallel.hpp"
#include "selfroute/text.hpp"

namespace selfroute {

namespace {

std::vector<RunRecord> run_in_memory(const Dataset& dataset, RunMode mode,
                                     const Retriever& retriever, LlmProvider& llm,
                                     const PromptLibrary& prompts,
                                     const RouterConfig& config) {
  std::vector<RunRecord> records(dataset.tasks.size());
  parallel_for(dataset.tasks.size(), llm.max_concurrent(), [&](std::size_t i) {
    try {
      records[i] = run_query(dataset.tasks[i], mode, retriever, llm, prompts, config);
    } catch (const std::exception& e) {
      RunRecord rec;
      rec.query_id = dataset.tasks[i].id;
      rec.mode = mode;
      rec.input_tokens = TokenCount{0, config.counting};
      rec.output_tokens = TokenCount{0, config.counting};
      rec.error = error_tag(e);
      records[i] = std::move(rec);
    }
  });
  return records;
}

double mean_score(const std::vector<RunRecord>& records) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const RunRecord& r : records)
    if (r.score.has_value()) {
      sum += *r.score;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << v;
  return out.str();
}

}  // namespace

std::vector<KSweepRow> sweep_k(const Dataset& dataset, const Retriever& retriever,
                               LlmProvider& llm, const PromptLibrary& prompts,
                               const RouterConfig& base, const std::vector<std::size_t>& ks) {
  if (ks.empty()) throw ConfigError("k sweep needs at least one k");
  for (std::size_t i = 0; i + 1 < ks.size(); ++i)
    if (ks[i] >= ks[i + 1]) throw ConfigError("k sweep values must be strictly ascending");
  if (ks.front() == 0) throw ConfigError("k must be >= 1");

  const std::vector<RunRecord> lc = run_in_memory(dataset, RunMode::lc, retriever, llm,
                                                  prompts, base);

  std::vector<KSweepRow> rows;
  rows.reserve(ks.size());
  for (const std::size_t k : ks) {
    RouterConfig cfg = base;
    cfg.k = k;
    const std::vector<RunRecord> rag =
        run_in_memory(dataset, RunMode::rag, retriever, llm, prompts, cfg);
    const std::vector<RunRecord> route =
        run_in_memory(dataset, RunMode::route, retriever, llm, prompts, cfg);

    KSweepRow row;
    row.k = k;
    row.rag_score = mean_score(rag);
    row.route_score = mean_score(route);
    row.rag_token_pct = token_percentage(rag, lc);
    row.route_token_pct = token_percentage(route, lc);
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(const std::vector<KSweepRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "k,rag_score,route_score,rag_token_pct,route_token_pct\n";
  for (const KSweepRow& r : rows) {
    out << r.k << ',' << format_double(r.rag_score) << ',' << format_double(r.route_score)
        << ',' << format_double(r.rag_token_pct) << ',' << format_double(r.route_token_pct)
        << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

char to_letter(FailureReason reason) {
  switch (reason) {
    case FailureReason::multi_step: return 'A';
    case FailureReason::general_query: return 'B';
    case FailureReason::long_complex: return 'C';
    case FailureReason::implicit: return 'D';
    case FailureReason::other: return 'E';
  }
  return 'E';
}

FailureReason failure_reason_from_letter(char letter) {
  switch (letter) {
    case 'A': return FailureReason::multi_step;
    case 'B': return FailureReason::general_query;
    case 'C': return FailureReason::long_complex;
    case 'D': return FailureReason::implicit;
    case 'E': return FailureReason::other;
    default: throw ConfigError(std::string("unknown failure reason letter: ") + letter);
  }
}

std::string_view to_string(FailureReason reason) {
  switch (reason) {
    case FailureReason::multi_step: return "multi_step";
    case FailureReason::general_query: return "general_query";
    case FailureReason::long_complex: return "long_complex";
    case FailureReason::implicit: return "implicit";
    case FailureReason::other: return "other";
  }
  return "other";
}

namespace {

// Pull the reason letter out of a (hopefully) JSON classifier response.
// Accepts {"reason": "A"}, {"reason": "A. ..."}; anything else is `other`.
FailureReason parse_reason(const std::string& response) {
  const std::size_t open = response.find('{');
  if (open != std::string::npos) {
    int depth = 0;
    for (std::size_t i = open; i < response.size(); ++i) {
      if (response[i] == '{') ++depth;
      if (response[i] == '}' && --depth == 0) {
        try {
          const nlohmann::json doc =
              nlohmann::json::parse(response.substr(open, i - open + 1));
          if (doc.is_object() && doc.contains("reason") && doc["reason"].is_string()) {
            const std::string reason = trim(doc["reason"].get<std::string>());
            if (!reason.empty() && reason[0] >= 'A' && reason[0] <= 'E')
              return failure_reason_from_letter(reason[0]);
          }
        } catch (const nlohmann::json::exception&) {
          // fall through to the bare-letter scan
        }
        break;
      }
    }
  }
  // Bare-letter responses ("B", "Reason: C") still classify; E and anything
  // unrecognizable mean "other".
  if (auto letter = extract_answer_letter(response); letter.has_value())
    return failure_reason_from_letter(*letter);
  return FailureReason::other;
}

}  // namespace

std::vector<FailureLabel> classify_failures(const Dataset& dataset,
                                            const std::vector<RunRecord>& records,
                                            LlmProvider& llm,
                                            const std::vector<FailureExample>& few_shot,
                                            const RouterConfig& config) {
  std::unordered_map<std::string, const QueryTask*> by_id;
  for (const QueryTask& t : dataset.tasks) by_id[t.id] = &t;

  // Only routed records that fell back to the long-context step are failures
  // of retrieval worth explaining.
  std::vector<const RunRecord*> targets;
  for (const RunRecord& r : records)
    if (r.decision.has_value() && r.decision->answered_by == AnsweredBy::lc)
      targets.push_back(&r);

  std::vector<FailureLabel> labels(targets.size());
  parallel_for(targets.size(), llm.max_concurrent(), [&](std::size_t i) {
    const RunRecord& rec = *targets[i];
    FailureLabel label;
    label.query_id = rec.query_id;

    const auto found = by_id.find(rec.query_id);
    if (found == by_id.end())
      throw MismatchedQuerySetsError();
    const QueryTask& task = *found->second;

    const std::vector<Chunk> chunks = chunk_context(task.context, config.chunk_size);
    std::vector<ScoredChunk> selected;
    for (const std::size_t idx : rec.decision->retrieved_indices) {
      if (idx >= chunks.size())
        throw Error("record " + rec.query_id + " references chunk " + std::to_string(idx) +
                    " beyond the document");
      selected.push_back(ScoredChunk{chunks[idx], 0.0});
    }

    const RenderedPrompt prompt =
        make_failure_prompt(render_retrieved(selected), task.question, few_shot);
    try {
      const Completion c = generate(llm, prompt.text);
      label.raw_response = c.text;
      label.reason = parse_reason(c.text);
    } catch (const ContextOverflowError& e) {
      label.raw_response = std::string("error: ") + e.what();
      label.reason = FailureReason::other;
    }
    labels[i] = std::move(label);
  });
  return labels;
}

std::map<FailureReason, double> failure_distribution(const std::vector<FailureLabel>& labels) {
  std::map<FailureReason, double> out;
  if (labels.empty()) return out;
  for (const FailureLabel& l : labels) out[l.reason] += 1.0;
  for (auto& [reason, count] : out) count /= static_cast<double>(labels.size());
  return out;
}

void write_failures_csv(const std::string& dataset_name,
                        const std::vector<FailureLabel>& labels,
                        const std::filesystem::path& path) {
  std::map<FailureReason, std::uint64_t> counts;
  for (const FailureReason r :
       {FailureReason::multi_step, FailureReason::general_query, FailureReason::long_complex,
        FailureReason::implicit, FailureReason::other})
    counts[r] = 0;
  for (const FailureLabel& l : labels) ++counts[l.reason];

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "dataset,reason,count\n";
  for (const auto& [reason, count] : counts)
    out << dataset_name << ',' << to_letter(reason) << ',' << count << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

CommonsenseSplit filter_commonsense(const Dataset& dataset, LlmProvider& llm,
                                    double threshold) {
  std::vector<char> flagged(dataset.tasks.size(), 0);
  parallel_for(dataset.tasks.size(), llm.max_concurrent(), [&](std::size_t i) {
    const QueryTask& task = dataset.tasks[i];
    try {
      const RenderedPrompt probe = make_no_context_prompt(task.question, task.choices);
      const Completion c = generate(llm, probe.text);
      const Score s = score_task(task, c.text);
      const double bar = (task.task_kind == TaskKind::multi_choice) ? 100.0 : threshold;
      flagged[i] = (s.value >= bar) ? 1 : 0;
    } catch (const Error&) {
      flagged[i] = 0;  // when in doubt, keep the task
    }
  });

  CommonsenseSplit split;
  split.filtered.name = dataset.name;
  split.filtered.metric_kind = dataset.metric_kind;
  for (std::size_t i = 0; i < dataset.tasks.size(); ++i) {
    if (flagged[i])
      split.commonsense_ids.push_back(dataset.tasks[i].id);
    else
      split.filtered.tasks.push_back(dataset.tasks[i]);
  }
  return split;
}

}  // namespace selfroute
