#include "selfroute/router.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>
#include <set>
#include <unordered_set>

#include "json.hpp"

#include "selfroute/metrics.hpp"
#include "selfroute/parallel.hpp"
#include "selfroute/text.hpp"

namespace selfroute {

bool is_unanswerable(std::string_view response) {
  const std::vector<std::string> tokens = tokenize_simple(response);
  const std::size_t limit = std::min<std::size_t>(tokens.size(), 10);
  for (std::size_t i = 0; i < limit; ++i)
    if (tokens[i] == "unanswerable") return true;
  return false;
}

std::string canonical_run_key(const RunSpec& spec) {
  nlohmann::json doc{
      {"chunk_order", std::string(to_string(spec.router.chunk_order))},
      {"chunk_size", spec.router.chunk_size},
      {"counting", std::string(to_string(spec.router.counting))},
      {"dataset", spec.dataset_name},
      {"k", spec.router.k},
      {"mode", std::string(to_string(spec.mode))},
      {"model", spec.model_id},
      {"retriever", spec.retriever_id},
  };
  return doc.dump();  // nlohmann objects iterate in sorted key order
}

std::string run_hash(const RunSpec& spec) { return fnv1a64_hex(canonical_run_key(spec)); }

namespace {

TokenCount recount(const TokenCount& reported, const std::string& text,
                   TokenMethod preferred) {
  if (preferred == TokenMethod::word_approx) return count_tokens(text);
  return reported;  // provider_reported when the backend gave one, else approx
}

std::vector<std::size_t> indices_of(const std::vector<ScoredChunk>& selected) {
  std::vector<std::size_t> out;
  out.reserve(selected.size());
  for (const ScoredChunk& s : selected) out.push_back(s.chunk.index);
  return out;
}

}  // namespace

RouteDecision self_route(const QueryTask& task, const Retriever& retriever, LlmProvider& llm,
                         const PromptLibrary& prompts, const RouterConfig& config) {
  const PromptTemplate& tmpl = prompts.for_dataset(task.dataset_id, task.task_kind);

  const std::vector<Chunk> chunks = chunk_context(task.context, config.chunk_size);
  const std::vector<ScoredChunk> selected = reorder_selected(
      retrieve_top_k(task.question, chunks, retriever, config.k), config.chunk_order);
  const std::string retrieved = render_retrieved(selected);

  RouteDecision d;
  d.query_id = task.id;
  d.retrieved_indices = indices_of(selected);

  const RenderedPrompt route_prompt =
      make_route_prompt(tmpl, retrieved, task.question, task.choices);
  const Completion first = generate(llm, route_prompt.text);
  d.rag_response = first.text;
  d.route_input_tokens = recount(first.input_tokens, route_prompt.text, config.counting);
  d.route_output_tokens = recount(first.output_tokens, first.text, config.counting);
  d.lc_input_tokens = TokenCount{0, d.route_input_tokens.method};
  d.lc_output_tokens = TokenCount{0, d.route_output_tokens.method};

  if (!is_unanswerable(first.text)) {
    d.answered_by = AnsweredBy::rag;
    d.final_answer = first.text;
    return d;
  }

  d.answered_by = AnsweredBy::lc;
  const RenderedPrompt lc_prompt =
      render(tmpl, task.context, task.question, task.choices, PromptKind::lc);
  try {
    const Completion second = generate(llm, lc_prompt.text);
    d.final_answer = second.text;
    d.lc_input_tokens = recount(second.input_tokens, lc_prompt.text, config.counting);
    d.lc_output_tokens = recount(second.output_tokens, second.text, config.counting);
  } catch (const ContextOverflowError& e) {
    throw RouteLcOverflowError(e.what(), d);
  }
  return d;
}

RunRecord run_query(const QueryTask& task, RunMode mode, const Retriever& retriever,
                    LlmProvider& llm, const PromptLibrary& prompts,
                    const RouterConfig& config) {
  RunRecord rec;
  rec.query_id = task.id;
  rec.mode = mode;

  const TokenCount zero{0, config.counting};
  rec.input_tokens = zero;
  rec.output_tokens = zero;

  if (mode == RunMode::route) {
    try {
      RouteDecision d = self_route(task, retriever, llm, prompts, config);
      rec.prediction = d.final_answer;
      rec.retrieved_indices = d.retrieved_indices;
      rec.input_tokens = d.route_input_tokens;
      rec.input_tokens.value += d.lc_input_tokens.value;
      rec.output_tokens = d.route_output_tokens;
      rec.output_tokens.value += d.lc_output_tokens.value;
      rec.score = score_task(task, rec.prediction).value;
      rec.decision = std::move(d);
    } catch (const RouteLcOverflowError& e) {
      rec.decision = e.partial();
      rec.retrieved_indices = rec.decision->retrieved_indices;
      rec.input_tokens = rec.decision->route_input_tokens;
      rec.output_tokens = rec.decision->route_output_tokens;
      rec.error = "ContextOverflow";
    } catch (const ContextOverflowError&) {
      rec.error = "ContextOverflow";  // even the retrieval prompt was too long
    }
    return rec;
  }

  const PromptTemplate& tmpl = prompts.for_dataset(task.dataset_id, task.task_kind);
  std::string prompt;
  if (mode == RunMode::lc) {
    prompt = render(tmpl, task.context, task.question, task.choices, PromptKind::lc).text;
  } else {
    const std::vector<Chunk> chunks = chunk_context(task.context, config.chunk_size);
    const std::vector<ScoredChunk> selected = reorder_selected(
        retrieve_top_k(task.question, chunks, retriever, config.k), config.chunk_order);
    rec.retrieved_indices = indices_of(selected);
    prompt = render(tmpl, render_retrieved(selected), task.question, task.choices,
                    PromptKind::rag)
                 .text;
  }

  try {
    const Completion c = generate(llm, prompt);
    rec.prediction = c.text;
    rec.input_tokens = recount(c.input_tokens, prompt, config.counting);
    rec.output_tokens = recount(c.output_tokens, c.text, config.counting);
    rec.score = score_task(task, rec.prediction).value;
  } catch (const ContextOverflowError&) {
    rec.error = "ContextOverflow";
  }
  return rec;
}

bool natural_less(std::string_view a, std::string_view b) {
  std::size_t i = 0, j = 0;
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  while (i < a.size() && j < b.size()) {
    if (digit(a[i]) && digit(b[j])) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && digit(a[ie])) ++ie;
      while (je < b.size() && digit(b[je])) ++je;
      std::string_view da = a.substr(i, ie - i), db = b.substr(j, je - j);
      // compare without leading zeros, longer run of significant digits wins
      std::string_view sa = da.substr(std::min(da.find_first_not_of('0'), da.size()));
      std::string_view sb = db.substr(std::min(db.find_first_not_of('0'), db.size()));
      if (sa.size() != sb.size()) return sa.size() < sb.size();
      if (sa != sb) return sa < sb;
      if (da.size() != db.size()) return da.size() > db.size();  // more zeros first
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return (a.size() - i) < (b.size() - j);
}

std::string error_tag(const std::exception& e) {
  if (dynamic_cast<const ContextOverflowError*>(&e)) return "ContextOverflow";
  if (dynamic_cast<const RateLimitedError*>(&e)) return "RateLimited";
  if (dynamic_cast<const TimeoutError*>(&e)) return "Timeout";
  if (const auto* be = dynamic_cast<const BackendError*>(&e))
    return "Backend:" + std::to_string(be->status());
  if (dynamic_cast<const AmbiguousMatchError*>(&e)) return "AmbiguousMatch";
  return std::string("Error: ") + e.what();
}

namespace {

// Valid leading records of a possibly crash-truncated records.jsonl.
std::vector<RunRecord> read_records_lenient(const std::filesystem::path& path) {
  std::vector<RunRecord> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      out.push_back(run_record_from_json_line(line));
    } catch (const Error&) {
      break;  // torn tail write; everything after it is re-run
    }
  }
  return out;
}

}  // namespace

BenchmarkResult run_benchmark(const Dataset& dataset, RunMode mode, const Retriever& retriever,
                              LlmProvider& llm, const PromptLibrary& prompts,
                              const RouterConfig& config, const std::filesystem::path& out_dir,
                              const std::string& config_echo) {
  RunSpec spec;
  spec.dataset_name = dataset.name;
  spec.mode = mode;
  spec.router = config;
  spec.retriever_id = retriever.id();
  spec.model_id = llm.id();

  BenchmarkResult result;
  result.run_dir = out_dir / run_hash(spec);
  std::error_code ec;
  std::filesystem::create_directories(result.run_dir, ec);
  if (ec) throw IoError("cannot create run directory " + result.run_dir.string());

  const std::filesystem::path records_path = result.run_dir / "records.jsonl";
  const std::filesystem::path config_path = result.run_dir / "config.json";

  if (!std::filesystem::exists(config_path)) {
    std::ofstream cfg(config_path, std::ios::binary);
    if (!cfg) throw IoError("cannot write " + config_path.string());
    cfg << (config_echo.empty() ? canonical_run_key(spec) : config_echo) << "\n";
  }

  // Resume: anything already on disk for this spec is not re-run.
  std::vector<RunRecord> records = read_records_lenient(records_path);
  std::unordered_set<std::string> dataset_ids;
  for (const QueryTask& t : dataset.tasks) dataset_ids.insert(t.id);
  std::erase_if(records,
                [&](const RunRecord& r) { return dataset_ids.count(r.query_id) == 0; });
  std::unordered_set<std::string> done;
  for (const RunRecord& r : records) done.insert(r.query_id);

  std::vector<const QueryTask*> pending;
  for (const QueryTask& t : dataset.tasks)
    if (!done.count(t.id)) pending.push_back(&t);
  result.executed = pending.size();

  if (!pending.empty()) {
    std::ofstream append(records_path, std::ios::binary | std::ios::app);
    if (!append) throw IoError("cannot open " + records_path.string() + " for append");

    std::vector<RunRecord> fresh(pending.size());
    std::mutex io_mu;
    bool io_failed = false;

    parallel_for(pending.size(), llm.max_concurrent(), [&](std::size_t i) {
      RunRecord rec;
      try {
        rec = run_query(*pending[i], mode, retriever, llm, prompts, config);
      } catch (const std::exception& e) {
        rec = RunRecord{};
        rec.query_id = pending[i]->id;
        rec.mode = mode;
        rec.input_tokens = TokenCount{0, config.counting};
        rec.output_tokens = TokenCount{0, config.counting};
        rec.error = error_tag(e);
      }
      {
        std::lock_guard<std::mutex> lock(io_mu);
        append << to_json_line(rec) << "\n";
        append.flush();
        if (!append) io_failed = true;
      }
      fresh[i] = std::move(rec);
    });

    if (io_failed) throw IoError("failed appending to " + records_path.string());
    records.insert(records.end(), std::make_move_iterator(fresh.begin()),
                   std::make_move_iterator(fresh.end()));
  }

  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    return natural_less(a.query_id, b.query_id);
  });

  // Final rewrite: deterministic order, atomic swap into place.
  const std::filesystem::path tmp = result.run_dir / "records.jsonl.tmp";
  write_records_jsonl(records, tmp);
  std::filesystem::rename(tmp, records_path, ec);
  if (ec) throw IoError("cannot replace " + records_path.string());

  result.summary = aggregate(records);
  write_summary(result.summary, result.run_dir / "summary.json");
  result.records = std::move(records);
  return result;
}

}  // namespace selfroute
