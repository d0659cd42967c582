#include "selfroute/records.hpp"

#include <fstream>

#include "json.hpp"
#include "selfroute/errors.hpp"

namespace selfroute {

using nlohmann::json;

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::rag: return "rag";
    case RunMode::lc: return "lc";
    case RunMode::route: return "route";
  }
  return "lc";
}

RunMode run_mode_from_string(std::string_view name) {
  if (name == "rag") return RunMode::rag;
  if (name == "lc") return RunMode::lc;
  if (name == "route") return RunMode::route;
  throw ConfigError("unknown mode: " + std::string(name));
}

std::string_view to_string(AnsweredBy by) {
  return by == AnsweredBy::rag ? "rag" : "lc";
}

TokenCount RouteDecision::total_tokens() const {
  return TokenCount{route_input_tokens.value + route_output_tokens.value +
                        lc_input_tokens.value + lc_output_tokens.value,
                    route_input_tokens.method};
}

namespace {

json token_to_json(const TokenCount& tc) {
  return json{{"value", tc.value}, {"method", std::string(to_string(tc.method))}};
}

TokenCount token_from_json(const json& j) {
  return TokenCount{j.at("value").get<std::uint64_t>(),
                    token_method_from_string(j.at("method").get<std::string>())};
}

json decision_to_json(const RouteDecision& d) {
  json j;
  j["query_id"] = d.query_id;
  j["answered_by"] = std::string(to_string(d.answered_by));
  j["rag_response"] = d.rag_response;
  j["final_answer"] = d.final_answer;
  j["route_input_tokens"] = token_to_json(d.route_input_tokens);
  j["route_output_tokens"] = token_to_json(d.route_output_tokens);
  j["lc_input_tokens"] = token_to_json(d.lc_input_tokens);
  j["lc_output_tokens"] = token_to_json(d.lc_output_tokens);
  j["retrieved_indices"] = d.retrieved_indices;
  return j;
}

RouteDecision decision_from_json(const json& j) {
  RouteDecision d;
  d.query_id = j.at("query_id").get<std::string>();
  d.answered_by =
      j.at("answered_by").get<std::string>() == "rag" ? AnsweredBy::rag : AnsweredBy::lc;
  d.rag_response = j.at("rag_response").get<std::string>();
  d.final_answer = j.at("final_answer").get<std::string>();
  d.route_input_tokens = token_from_json(j.at("route_input_tokens"));
  d.route_output_tokens = token_from_json(j.at("route_output_tokens"));
  d.lc_input_tokens = token_from_json(j.at("lc_input_tokens"));
  d.lc_output_tokens = token_from_json(j.at("lc_output_tokens"));
  d.retrieved_indices = j.at("retrieved_indices").get<std::vector<std::size_t>>();
  return d;
}

}  // namespace

std::string to_json_line(const RunRecord& record) {
  json j;
  j["query_id"] = record.query_id;
  j["mode"] = std::string(to_string(record.mode));
  j["prediction"] = record.prediction;
  if (record.score) j["score"] = *record.score;
  j["input_tokens"] = token_to_json(record.input_tokens);
  j["output_tokens"] = token_to_json(record.output_tokens);
  if (!record.retrieved_indices.empty()) j["retrieved_indices"] = record.retrieved_indices;
  if (record.decision) j["decision"] = decision_to_json(*record.decision);
  if (record.error) j["error"] = *record.error;
  return j.dump();
}

RunRecord run_record_from_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("bad record line: ") + e.what());
  }
  RunRecord r;
  r.query_id = j.at("query_id").get<std::string>();
  r.mode = run_mode_from_string(j.at("mode").get<std::string>());
  r.prediction = j.at("prediction").get<std::string>();
  if (j.contains("score")) r.score = j.at("score").get<double>();
  r.input_tokens = token_from_json(j.at("input_tokens"));
  r.output_tokens = token_from_json(j.at("output_tokens"));
  if (j.contains("retrieved_indices"))
    r.retrieved_indices = j.at("retrieved_indices").get<std::vector<std::size_t>>();
  if (j.contains("decision")) r.decision = decision_from_json(j.at("decision"));
  if (j.contains("error")) r.error = j.at("error").get<std::string>();
  return r;
}

std::vector<RunRecord> read_records_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open records file: " + path.string());
  std::vector<RunRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(run_record_from_json_line(line));
  }
  return records;
}

void write_records_jsonl(const std::vector<RunRecord>& records,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write records file: " + path.string());
  for (const auto& record : records) out << to_json_line(record) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

std::string summary_to_json(const Summary& summary) {
  json j;
  j["mean_score"] = summary.mean_score;
  j["n"] = summary.n;
  if (summary.answerable_pct) j["answerable_pct"] = *summary.answerable_pct;
  j["input_tokens"] = summary.input_tokens;
  j["output_tokens"] = summary.output_tokens;
  if (summary.token_pct_vs_lc) j["token_pct_vs_lc"] = *summary.token_pct_vs_lc;
  return j.dump(2);
}

Summary summary_from_json(const std::string& text) {
  json j = json::parse(text);
  Summary s;
  s.mean_score = j.at("mean_score").get<double>();
  s.n = j.at("n").get<std::size_t>();
  if (j.contains("answerable_pct")) s.answerable_pct = j.at("answerable_pct").get<double>();
  s.input_tokens = j.at("input_tokens").get<std::uint64_t>();
  s.output_tokens = j.at("output_tokens").get<std::uint64_t>();
  if (j.contains("token_pct_vs_lc"))
    s.token_pct_vs_lc = j.at("token_pct_vs_lc").get<double>();
  return s;
}

void write_summary(const Summary& summary, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write summary file: " + path.string());
  out << summary_to_json(summary) << "\n";
}

Summary read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open summary file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return summary_from_json(text);
  } catch (const json::exception& e) {
    throw IoError("bad summary file " + path.string() + ": " + e.what());
  }
}

}  // namespace selfroute
