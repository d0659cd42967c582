// Command-line front end: benchmark runs, run-comparison reports, k sweeps,
// synthetic dataset generation, failure classification, and the
// commonsense filter. All heavy lifting lives in the core library.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "selfroute/analysis.hpp"
#include "selfroute/corpus.hpp"
#include "selfroute/embedding.hpp"
#include "selfroute/errors.hpp"
#include "selfroute/llm.hpp"
#include "selfroute/llm_http.hpp"
#include "selfroute/metrics.hpp"
#include "selfroute/prompts.hpp"
#include "selfroute/records.hpp"
#include "selfroute/retrieval.hpp"
#include "selfroute/router.hpp"
#include "selfroute/synthetic.hpp"
#include "selfroute/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// run configuration

struct RunConfig {
  std::string dataset_path;
  std::string format = "longbench_jsonl";
  std::string mode = "route";
  std::size_t k = selfroute::kDefaultTopK;
  std::string retriever = "bm25";
  std::size_t chunk_size = selfroute::kDefaultChunkSize;
  std::string chunk_order = "score_desc";
  std::string counting = "word_approx";
  std::string provider_path;
  std::string mock_path;
  std::string out_dir = "out";
  std::string prompts_dir;
  std::uint64_t seed = 0;

  std::string dataset_name() const { return fs::path(dataset_path).stem().string(); }

  json to_json() const {
    return json{
        {"chunk_order", chunk_order},
        {"chunk_size", chunk_size},
        {"counting", counting},
        {"dataset", dataset_name()},
        {"dataset_path", dataset_path},
        {"format", format},
        {"k", k},
        {"mock", mock_path},
        {"mode", mode},
        {"out", out_dir},
        {"prompts", prompts_dir},
        {"provider", provider_path},
        {"retriever", retriever},
        {"seed", seed},
    };
  }

  static RunConfig from_json(const json& doc) {
    RunConfig cfg;
    auto get_str = [&](const char* key, std::string& into) {
      if (doc.contains(key) && doc[key].is_string()) into = doc[key].get<std::string>();
    };
    auto get_num = [&](const char* key, auto& into) {
      if (doc.contains(key) && doc[key].is_number())
        into = doc[key].get<std::decay_t<decltype(into)>>();
    };
    get_str("dataset_path", cfg.dataset_path);
    get_str("format", cfg.format);
    get_str("mode", cfg.mode);
    get_num("k", cfg.k);
    get_str("retriever", cfg.retriever);
    get_num("chunk_size", cfg.chunk_size);
    get_str("chunk_order", cfg.chunk_order);
    get_str("counting", cfg.counting);
    get_str("provider", cfg.provider_path);
    get_str("mock", cfg.mock_path);
    get_str("out", cfg.out_dir);
    get_str("prompts", cfg.prompts_dir);
    get_num("seed", cfg.seed);
    return cfg;
  }

  void validate() const {
    if (dataset_path.empty()) throw selfroute::ConfigError("--dataset is required");
    if (!fs::exists(dataset_path))
      throw selfroute::ConfigError("dataset file not found: " + dataset_path);
    if (provider_path.empty() == mock_path.empty())
      throw selfroute::ConfigError("exactly one of --provider or --mock is required");
    if (!provider_path.empty() && !fs::exists(provider_path))
      throw selfroute::ConfigError("provider config not found: " + provider_path);
    if (!mock_path.empty() && !fs::exists(mock_path))
      throw selfroute::ConfigError("mock fixture not found: " + mock_path);
    if (k == 0) throw selfroute::ConfigError("--k must be >= 1");
    if (chunk_size == 0) throw selfroute::ConfigError("--chunk-size must be >= 1");
    if (retriever != "bm25" && retriever != "embed")
      throw selfroute::ConfigError("--retriever must be bm25 or embed");
    if (retriever == "embed" && provider_path.empty())
      throw selfroute::ConfigError("the embedding retriever needs --provider");
    selfroute::run_mode_from_string(mode);            // throws on junk
    selfroute::dataset_format_from_string(format);    //
    selfroute::chunk_order_from_string(chunk_order);  //
    selfroute::token_method_from_string(counting);    //
  }
};

struct Backends {
  std::unique_ptr<selfroute::LlmProvider> llm;
  std::unique_ptr<selfroute::Retriever> retriever;
};

Backends make_backends(const RunConfig& cfg) {
  Backends b;
  if (!cfg.mock_path.empty()) {
    b.llm = selfroute::ScriptedMockLlm::from_fixture_file(cfg.mock_path);
  } else {
    b.llm = std::make_unique<selfroute::HttpLlmClient>(
        selfroute::ProviderConfig::from_toml_file(cfg.provider_path));
  }
  if (cfg.retriever == "bm25") {
    b.retriever = std::make_unique<selfroute::Bm25Retriever>();
  } else {
    b.retriever = std::make_unique<selfroute::EmbeddingRetriever>(
        std::make_shared<selfroute::HttpEmbeddingProvider>(
            selfroute::ProviderConfig::from_toml_file(cfg.provider_path)));
  }
  return b;
}

selfroute::RouterConfig router_config(const RunConfig& cfg) {
  selfroute::RouterConfig rc;
  rc.k = cfg.k;
  rc.chunk_size = cfg.chunk_size;
  rc.chunk_order = selfroute::chunk_order_from_string(cfg.chunk_order);
  rc.counting = selfroute::token_method_from_string(cfg.counting);
  return rc;
}

selfroute::PromptLibrary make_prompts(const std::string& prompts_dir) {
  selfroute::PromptLibrary lib = selfroute::PromptLibrary::builtin();
  if (!prompts_dir.empty()) lib.load_dir(prompts_dir);
  return lib;
}

selfroute::Dataset load_configured_dataset(const RunConfig& cfg) {
  return selfroute::load_dataset(cfg.dataset_path,
                                 selfroute::dataset_format_from_string(cfg.format));
}

std::string fmt(double v, int precision = 2) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(precision);
  out << v;
  return out.str();
}

// ---------------------------------------------------------------------------
// bench

int cmd_bench(const RunConfig& cfg) {
  cfg.validate();

  const selfroute::Dataset dataset = load_configured_dataset(cfg);
  Backends backends = make_backends(cfg);
  const selfroute::PromptLibrary prompts = make_prompts(cfg.prompts_dir);

  bool fallback = false;
  prompts.for_dataset(dataset.name, dataset.tasks.front().task_kind, &fallback);
  if (fallback)
    std::cerr << "note: no dataset-specific prompt for \"" << dataset.name
              << "\"; using the generic template\n";

  const selfroute::BenchmarkResult result = selfroute::run_benchmark(
      dataset, selfroute::run_mode_from_string(cfg.mode), *backends.retriever, *backends.llm,
      prompts, router_config(cfg), cfg.out_dir, cfg.to_json().dump(2));

  std::size_t errors = 0;
  for (const selfroute::RunRecord& r : result.records)
    if (r.error.has_value()) ++errors;

  const selfroute::Summary& s = result.summary;
  std::cout << "run dir:      " << result.run_dir.string() << "\n"
            << "dataset:      " << dataset.name << " (" << dataset.tasks.size() << " tasks, "
            << selfroute::to_string(dataset.metric_kind) << ")\n"
            << "mode:         " << cfg.mode << "\n"
            << "mean score:   " << fmt(s.mean_score) << "\n";
  if (s.answerable_pct.has_value())
    std::cout << "answerable%:  " << fmt(*s.answerable_pct) << "\n";
  std::cout << "input tokens: " << s.input_tokens << "\n"
            << "output tokens:" << s.output_tokens << "\n"
            << "executed now: " << result.executed << " of " << dataset.tasks.size() << "\n";
  if (errors > 0)
    std::cout << "warning: " << errors << " queries failed; see records.jsonl\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct LoadedRun {
  std::string dataset;
  std::string mode;
  selfroute::Summary summary;
  std::vector<selfroute::RunRecord> records;
  fs::path dir;
};

LoadedRun load_run(const fs::path& dir) {
  const fs::path config_path = dir / "config.json";
  const fs::path summary_path = dir / "summary.json";
  const fs::path records_path = dir / "records.jsonl";
  if (!fs::exists(summary_path))
    throw selfroute::ConfigError("no summary.json in " + dir.string());
  if (!fs::exists(config_path))
    throw selfroute::ConfigError("no config.json in " + dir.string());

  LoadedRun run;
  run.dir = dir;
  std::ifstream in(config_path);
  json cfg = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (cfg.is_discarded() || !cfg.is_object())
    throw selfroute::ConfigError("unreadable config.json in " + dir.string());
  if (cfg.contains("dataset") && cfg["dataset"].is_string())
    run.dataset = cfg["dataset"].get<std::string>();
  if (cfg.contains("mode") && cfg["mode"].is_string())
    run.mode = cfg["mode"].get<std::string>();
  if (run.dataset.empty() || run.mode.empty())
    throw selfroute::ConfigError("config.json in " + dir.string() +
                                 " lacks dataset/mode fields");

  run.summary = selfroute::read_summary(summary_path);
  if (fs::exists(records_path)) run.records = selfroute::read_records_jsonl(records_path);
  return run;
}

std::string svg_scatter(const std::vector<std::tuple<std::string, std::string, double, double>>&
                            points /* dataset, mode, token_pct, score */) {
  const double width = 640, height = 480;
  const double ml = 60, mr = 20, mt = 20, mb = 50;
  double max_x = 110.0;
  for (const auto& [d, m, x, y] : points) max_x = std::max(max_x, x + 10.0);

  auto sx = [&](double x) { return ml + (x / max_x) * (width - ml - mr); };
  auto sy = [&](double y) { return height - mb - (y / 100.0) * (height - mt - mb); };
  auto color = [](const std::string& mode) {
    if (mode == "lc") return "#1f77b4";
    if (mode == "rag") return "#ff7f0e";
    return "#2ca02c";
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
      << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << height - mb << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << (width / 2) << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"14\">input tokens vs LC (%)</text>\n"
      << "<text x=\"16\" y=\"" << (height / 2)
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 16 "
      << (height / 2) << ")\">mean score</text>\n";
  for (double tick = 0; tick <= 100.0; tick += 20.0) {
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << sy(tick) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << static_cast<int>(tick)
        << "</text>\n";
    svg << "<text x=\"" << sx(tick * max_x / 100.0) << "\" y=\"" << height - mb + 16
        << "\" text-anchor=\"middle\" font-size=\"11\">"
        << static_cast<int>(tick * max_x / 100.0) << "</text>\n";
  }
  for (const auto& [dataset, mode, token_pct, score] : points) {
    svg << "<circle cx=\"" << sx(token_pct) << "\" cy=\"" << sy(score)
        << "\" r=\"5\" fill=\"" << color(mode) << "\"><title>" << dataset << " " << mode
        << "</title></circle>\n";
  }
  double ly = mt + 10;
  for (const char* mode : {"lc", "rag", "route"}) {
    svg << "<circle cx=\"" << width - mr - 110 << "\" cy=\"" << ly << "\" r=\"5\" fill=\""
        << color(mode) << "\"/>\n"
        << "<text x=\"" << width - mr - 98 << "\" y=\"" << ly + 4
        << "\" font-size=\"12\">" << mode << "</text>\n";
    ly += 18;
  }
  svg << "</svg>\n";
  return svg.str();
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  if (run_dirs.empty()) throw selfroute::ConfigError("report needs at least one run dir");

  std::vector<LoadedRun> runs;
  for (const std::string& dir : run_dirs) runs.push_back(load_run(dir));

  fs::create_directories(out_dir);

  // dataset -> mode -> run index (later dirs win on duplicates)
  std::map<std::string, std::map<std::string, std::size_t>> by_dataset;
  for (std::size_t i = 0; i < runs.size(); ++i)
    by_dataset[runs[i].dataset][runs[i].mode] = i;

  auto lc_records = [&](const std::string& dataset) -> const std::vector<selfroute::RunRecord>* {
    auto ds = by_dataset.find(dataset);
    if (ds == by_dataset.end()) return nullptr;
    auto lc = ds->second.find("lc");
    if (lc == ds->second.end()) return nullptr;
    return &runs[lc->second].records;
  };

  // --- markdown comparison table -------------------------------------------
  std::ostringstream md;
  md << "# Run comparison\n\n"
     << "| Dataset | LC | RAG | Self-Route | Answerable% | Route token% |\n"
     << "|---|---|---|---|---|---|\n";
  std::vector<double> lc_means, rag_means, route_means;
  std::vector<std::tuple<std::string, std::string, double, double>> points;
  std::ostringstream tradeoff;
  tradeoff << "dataset,method,score,token_pct\n";

  for (const auto& [dataset, modes] : by_dataset) {
    std::string lc = "-", rag = "-", route = "-", answerable = "-", token_pct = "-";
    const std::vector<selfroute::RunRecord>* lc_recs = lc_records(dataset);
    for (const auto& [mode, idx] : modes) {
      const LoadedRun& run = runs[idx];
      const double score = run.summary.mean_score;
      double pct = 100.0;
      if (mode != "lc" && lc_recs != nullptr && !run.records.empty())
        pct = selfroute::token_percentage(run.records, *lc_recs);
      if (mode == "lc") {
        lc = fmt(score);
        lc_means.push_back(score);
      } else if (mode == "rag") {
        rag = fmt(score);
        rag_means.push_back(score);
      } else if (mode == "route") {
        route = fmt(score);
        route_means.push_back(score);
        if (run.summary.answerable_pct.has_value())
          answerable = fmt(*run.summary.answerable_pct, 1);
        if (lc_recs != nullptr && !run.records.empty()) token_pct = fmt(pct, 1);
      }
      if (mode == "lc" || lc_recs != nullptr)
        points.emplace_back(dataset, mode, pct, score);
      tradeoff << dataset << ',' << mode << ',' << fmt(score, 4) << ','
               << ((mode == "lc" || lc_recs != nullptr) ? fmt(pct, 4) : "") << '\n';
    }
    md << "| " << dataset << " | " << lc << " | " << rag << " | " << route << " | "
       << answerable << " | " << token_pct << " |\n";
  }

  auto avg_cell = [](const std::vector<double>& v) {
    return v.empty() ? std::string("-") : fmt(selfroute::unweighted_mean(v));
  };
  md << "| **Average** | " << avg_cell(lc_means) << " | " << avg_cell(rag_means) << " | "
     << avg_cell(route_means) << " | - | - |\n";

  // --- delta histogram (RAG score minus LC score, per query) ----------------
  std::ostringstream hist_csv;
  hist_csv << "dataset,bin_lower,count,mean_avg_score\n";
  std::ostringstream ident;
  for (const auto& [dataset, modes] : by_dataset) {
    auto rag_it = modes.find("rag");
    const std::vector<selfroute::RunRecord>* lc_recs = lc_records(dataset);
    if (rag_it == modes.end() || lc_recs == nullptr) continue;

    std::map<std::string, const selfroute::RunRecord*> lc_by_id;
    for (const selfroute::RunRecord& r : *lc_recs)
      if (r.score.has_value()) lc_by_id[r.query_id] = &r;

    std::vector<selfroute::ScorePair> pairs;
    for (const selfroute::RunRecord& r : runs[rag_it->second].records) {
      if (!r.score.has_value()) continue;
      auto hit = lc_by_id.find(r.query_id);
      if (hit == lc_by_id.end()) continue;
      selfroute::ScorePair p;
      p.rag_score = *r.score;
      p.lc_score = *hit->second->score;
      p.rag_pred = r.prediction;
      p.lc_pred = hit->second->prediction;
      pairs.push_back(std::move(p));
    }
    if (pairs.empty()) continue;
    const selfroute::DeltaHistogram h = selfroute::delta_histogram(pairs);
    for (const auto& [lower, bin] : h.bins)
      hist_csv << dataset << ',' << fmt(lower, 1) << ',' << bin.count << ','
               << fmt(bin.mean_avg_score, 4) << '\n';
    ident << dataset << ": identical predictions in " << fmt(h.identical_fraction * 100.0, 1)
          << "% of " << h.total << " queries\n";
  }

  const std::string markdown = md.str();
  std::ofstream(fs::path(out_dir) / "report.md", std::ios::binary) << markdown;
  std::ofstream(fs::path(out_dir) / "delta_hist.csv", std::ios::binary) << hist_csv.str();
  std::ofstream(fs::path(out_dir) / "tradeoff.csv", std::ios::binary) << tradeoff.str();
  std::ofstream(fs::path(out_dir) / "scatter.svg", std::ios::binary) << svg_scatter(points);

  std::cout << markdown;
  if (!ident.str().empty()) std::cout << "\n" << ident.str();
  std::cout << "\nwrote report.md, delta_hist.csv, tradeoff.csv, scatter.svg to " << out_dir
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep-k

int cmd_sweep_k(const RunConfig& cfg, const std::string& ks_text, const std::string& out_csv) {
  cfg.validate();
  std::vector<std::size_t> ks;
  std::stringstream ss(ks_text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = selfroute::trim(item);
    if (item.empty()) continue;
    try {
      ks.push_back(static_cast<std::size_t>(std::stoull(item)));
    } catch (const std::exception&) {
      throw selfroute::ConfigError("--ks must be a comma-separated list of integers");
    }
  }

  const selfroute::Dataset dataset = load_configured_dataset(cfg);
  Backends backends = make_backends(cfg);
  const selfroute::PromptLibrary prompts = make_prompts(cfg.prompts_dir);

  const std::vector<selfroute::KSweepRow> rows = selfroute::sweep_k(
      dataset, *backends.retriever, *backends.llm, prompts, router_config(cfg), ks);
  selfroute::write_sweep_csv(rows, out_csv);

  std::cout << "k,rag_score,route_score,rag_token_pct,route_token_pct\n";
  for (const selfroute::KSweepRow& r : rows)
    std::cout << r.k << ',' << fmt(r.rag_score) << ',' << fmt(r.route_score) << ','
              << fmt(r.rag_token_pct) << ',' << fmt(r.route_token_pct) << '\n';
  std::cout << "wrote " << out_csv << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// gen-passkey

int cmd_gen_passkey(const std::string& variant, std::size_t n, std::size_t haystack_words,
                    std::size_t digits, double depth, bool depth_set, std::uint64_t seed,
                    std::size_t chunk_size, const std::string& out_path) {
  selfroute::PassKeySpec spec;
  spec.variant = selfroute::passkey_variant_from_string(variant);
  spec.haystack_words = haystack_words;
  spec.passkey_digits = digits;
  spec.chunk_size = chunk_size;
  if (depth_set) spec.needle_depth = depth;

  const selfroute::Dataset dataset = selfroute::gen_passkey_suite(n, spec, seed);
  selfroute::write_dataset_jsonl(dataset, out_path);
  std::cout << "wrote " << dataset.tasks.size() << " tasks to " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// classify-failures

int cmd_classify_failures(const RunConfig& cfg, const std::string& records_path,
                          const std::string& few_shot_path, const std::string& out_csv) {
  cfg.validate();
  if (!fs::exists(records_path))
    throw selfroute::ConfigError("records file not found: " + records_path);
  if (!fs::exists(few_shot_path))
    throw selfroute::ConfigError("few-shot examples not found: " + few_shot_path);

  const selfroute::Dataset dataset = load_configured_dataset(cfg);
  const std::vector<selfroute::RunRecord> records =
      selfroute::read_records_jsonl(records_path);
  const std::vector<selfroute::FailureExample> few_shot =
      selfroute::load_failure_examples(few_shot_path);
  Backends backends = make_backends(cfg);

  const std::vector<selfroute::FailureLabel> labels = selfroute::classify_failures(
      dataset, records, *backends.llm, few_shot, router_config(cfg));
  selfroute::write_failures_csv(dataset.name, labels, out_csv);

  std::cout << "classified " << labels.size() << " declined queries\n";
  for (const auto& [reason, share] : selfroute::failure_distribution(labels))
    std::cout << "  " << selfroute::to_letter(reason) << " (" << selfroute::to_string(reason)
              << "): " << fmt(share * 100.0, 1) << "%\n";
  std::cout << "wrote " << out_csv << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// filter-commonsense

int cmd_filter_commonsense(const RunConfig& cfg, double threshold,
                           const std::string& out_path, const std::string& ids_out) {
  cfg.validate();
  const selfroute::Dataset dataset = load_configured_dataset(cfg);
  Backends backends = make_backends(cfg);

  const selfroute::CommonsenseSplit split =
      selfroute::filter_commonsense(dataset, *backends.llm, threshold);
  selfroute::write_dataset_jsonl(split.filtered, out_path);
  if (!ids_out.empty()) {
    std::ofstream out(ids_out, std::ios::binary);
    if (!out) throw selfroute::IoError("cannot write " + ids_out);
    for (const std::string& id : split.commonsense_ids) out << id << "\n";
  }

  std::cout << split.commonsense_ids.size() << " of " << dataset.tasks.size()
            << " tasks answerable without the document\n"
            << "wrote " << split.filtered.tasks.size() << " remaining tasks to " << out_path
            << "\n";
  return 0;
}

void add_backend_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--provider", cfg.provider_path, "provider settings (TOML)");
  cmd->add_option("--mock", cfg.mock_path, "scripted mock fixture (JSON)");
  cmd->add_option("--prompts", cfg.prompts_dir, "directory of prompt template overrides");
}

void add_dataset_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--dataset", cfg.dataset_path, "dataset JSONL file");
  cmd->add_option("--format", cfg.format, "longbench_jsonl | infbench_jsonl");
  cmd->add_option("--chunk-size", cfg.chunk_size, "words per retrieval chunk");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-context QA runner: pure RAG, pure long-context, and routed inference"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string from_config;

  // bench ---------------------------------------------------------------
  CLI::App* bench = app.add_subcommand("bench", "run a dataset in one mode");
  add_dataset_flags(bench, cfg);
  bench->add_option("--mode", cfg.mode, "rag | lc | route");
  bench->add_option("--k", cfg.k, "retrieved chunks per query");
  bench->add_option("--retriever", cfg.retriever, "bm25 | embed");
  bench->add_option("--chunk-order", cfg.chunk_order, "score_desc | score_asc | document");
  bench->add_option("--counting", cfg.counting, "word_approx | provider_reported");
  add_backend_flags(bench, cfg);
  bench->add_option("--out", cfg.out_dir, "output root (runs land in <out>/<hash>/)");
  bench->add_option("--seed", cfg.seed, "recorded in config.json");
  bench->add_option("--from-config", from_config, "load a previous run's config.json");

  // report --------------------------------------------------------------
  std::vector<std::string> report_dirs;
  std::string report_out = "report";
  CLI::App* report = app.add_subcommand("report", "compare finished runs");
  report->add_option("dirs", report_dirs, "run directories")->expected(-1);
  report->add_option("--out-dir", report_out, "where report artifacts are written");

  // sweep-k ---------------------------------------------------------------
  std::string ks_text = "1,5,10";
  std::string sweep_out = "sweep.csv";
  CLI::App* sweep = app.add_subcommand("sweep-k", "score/cost sweep over k");
  add_dataset_flags(sweep, cfg);
  sweep->add_option("--ks", ks_text, "comma-separated ascending k values");
  sweep->add_option("--retriever", cfg.retriever, "bm25 | embed");
  sweep->add_option("--chunk-order", cfg.chunk_order, "score_desc | score_asc | document");
  add_backend_flags(sweep, cfg);
  sweep->add_option("--out", sweep_out, "CSV output path");

  // gen-passkey ---------------------------------------------------------
  std::string variant = "original";
  std::size_t gen_n = 100, haystack = 10000, digits = 6, gen_chunk = 300;
  double depth = 0.0;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "passkey.jsonl";
  CLI::App* gen = app.add_subcommand("gen-passkey", "generate a needle-retrieval dataset");
  gen->add_option("--variant", variant, "original | special_token | two_keys_compare");
  gen->add_option("--n", gen_n, "number of tasks");
  gen->add_option("--haystack-words", haystack, "filler words per document");
  gen->add_option("--digits", digits, "pass key length");
  CLI::Option* depth_opt = gen->add_option("--depth", depth, "fixed needle depth in [0,1]");
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("--chunk-size", gen_chunk, "chunk grid used for needle placement");
  gen->add_option("--out", gen_out, "dataset JSONL output path");

  // classify-failures -----------------------------------------------------
  std::string records_path, few_shot_path, failures_out = "failures.csv";
  CLI::App* classify = app.add_subcommand("classify-failures",
                                          "explain why declined queries failed retrieval");
  add_dataset_flags(classify, cfg);
  classify->add_option("--records", records_path, "records.jsonl of a routed run");
  classify->add_option("--few-shot", few_shot_path, "few-shot examples (JSON)");
  add_backend_flags(classify, cfg);
  classify->add_option("--out", failures_out, "CSV output path");

  // filter-commonsense ----------------------------------------------------
  double threshold = 80.0;
  std::string filtered_out = "filtered.jsonl", ids_out;
  CLI::App* filter = app.add_subcommand("filter-commonsense",
                                        "drop tasks answerable without the document");
  add_dataset_flags(filter, cfg);
  filter->add_option("--threshold", threshold, "open-QA F1 bar for commonsense");
  add_backend_flags(filter, cfg);
  filter->add_option("--out", filtered_out, "filtered dataset JSONL path");
  filter->add_option("--ids-out", ids_out, "write flagged task ids here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems are config errors
  }

  try {
    if (bench->parsed()) {
      if (!from_config.empty()) {
        std::ifstream in(from_config);
        if (!in)
          throw selfroute::ConfigError("cannot open config file: " + from_config);
        json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
        if (doc.is_discarded())
          throw selfroute::ConfigError("config file is not valid JSON: " + from_config);
        RunConfig loaded = RunConfig::from_json(doc);
        // explicit flags override file values
        auto keep = [&](const char* flag, auto member, auto value) {
          if (bench->count(flag) > 0) loaded.*member = value;
        };
        keep("--dataset", &RunConfig::dataset_path, cfg.dataset_path);
        keep("--format", &RunConfig::format, cfg.format);
        keep("--mode", &RunConfig::mode, cfg.mode);
        keep("--k", &RunConfig::k, cfg.k);
        keep("--retriever", &RunConfig::retriever, cfg.retriever);
        keep("--chunk-size", &RunConfig::chunk_size, cfg.chunk_size);
        keep("--chunk-order", &RunConfig::chunk_order, cfg.chunk_order);
        keep("--counting", &RunConfig::counting, cfg.counting);
        keep("--provider", &RunConfig::provider_path, cfg.provider_path);
        keep("--mock", &RunConfig::mock_path, cfg.mock_path);
        keep("--out", &RunConfig::out_dir, cfg.out_dir);
        keep("--prompts", &RunConfig::prompts_dir, cfg.prompts_dir);
        keep("--seed", &RunConfig::seed, cfg.seed);
        cfg = loaded;
      }
      return cmd_bench(cfg);
    }
    if (report->parsed()) return cmd_report(report_dirs, report_out);
    if (sweep->parsed()) return cmd_sweep_k(cfg, ks_text, sweep_out);
    if (gen->parsed())
      return cmd_gen_passkey(variant, gen_n, haystack, digits, depth,
                             depth_opt->count() > 0, gen_seed, gen_chunk, gen_out);
    if (classify->parsed())
      return cmd_classify_failures(cfg, records_path, few_shot_path, failures_out);
    if (filter->parsed()) return cmd_filter_commonsense(cfg, threshold, filtered_out, ids_out);
  } catch (const selfroute::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const selfroute::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
