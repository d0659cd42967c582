#include "selfroute/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "selfroute/errors.hpp"
#include "selfroute/text.hpp"

namespace selfroute {

std::vector<std::string> normalize_answer(std::string_view text) {
  std::vector<std::string> tokens = tokenize_simple(text);
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (auto& t : tokens) {
    if (t == "a" || t == "an" || t == "the") continue;
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

double f1_from_overlap(double overlap, double pred_len, double gold_len) {
  if (overlap <= 0.0 || pred_len <= 0.0 || gold_len <= 0.0) return 0.0;
  double p = overlap / pred_len;
  double r = overlap / gold_len;
  return 2.0 * p * r / (p + r);
}

double bag_overlap(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  std::unordered_map<std::string, int> counts;
  for (const auto& t : pred) ++counts[t];
  double overlap = 0.0;
  for (const auto& t : gold) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      overlap += 1.0;
    }
  }
  return overlap;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

Score qa_f1(std::string_view prediction, const std::vector<std::string>& golds) {
  std::vector<std::string> pred = tokenize_simple(prediction);
  double best = 0.0;
  for (const auto& gold_text : golds) {
    std::vector<std::string> gold = tokenize_simple(gold_text);
    double o = bag_overlap(pred, gold);
    best = std::max(best, f1_from_overlap(o, static_cast<double>(pred.size()),
                                          static_cast<double>(gold.size())));
  }
  return Score{100.0 * best, MetricKind::qa_f1};
}

Score mc_accuracy(std::string_view prediction, char gold_letter) {
  auto letter = extract_answer_letter(trim(prediction));
  double value = (letter && *letter == gold_letter) ? 100.0 : 0.0;
  return Score{value, MetricKind::mc_accuracy};
}

Score rouge_l(std::string_view prediction, const std::vector<std::string>& golds) {
  std::vector<std::string> pred = tokenize_simple(prediction);
  double best = 0.0;
  for (const auto& gold_text : golds) {
    std::vector<std::string> gold = tokenize_simple(gold_text);
    double lcs = static_cast<double>(lcs_length(pred, gold));
    best = std::max(best, f1_from_overlap(lcs, static_cast<double>(pred.size()),
                                          static_cast<double>(gold.size())));
  }
  return Score{100.0 * best, MetricKind::rouge_l};
}

Score score_task(const QueryTask& task, std::string_view prediction) {
  switch (task.task_kind) {
    case TaskKind::open_qa:
      return qa_f1(prediction, task.gold_answers);
    case TaskKind::multi_choice:
      return mc_accuracy(prediction, resolve_gold_letter(task));
    case TaskKind::summarization:
      return rouge_l(prediction, task.gold_answers);
  }
  return qa_f1(prediction, task.gold_answers);
}

double token_percentage(const std::vector<RunRecord>& method_records,
                        const std::vector<RunRecord>& lc_records, bool include_output) {
  std::set<std::string> method_ids, lc_ids;
  for (const auto& r : method_records) method_ids.insert(r.query_id);
  for (const auto& r : lc_records) lc_ids.insert(r.query_id);
  if (method_ids != lc_ids) throw MismatchedQuerySetsError();
  if (method_records.empty()) throw MismatchedQuerySetsError();

  TokenMethod method = method_records.front().input_tokens.method;
  auto check = [&](const RunRecord& r) {
    if (r.input_tokens.method != method) throw MixedCountingMethodsError();
    if (include_output && r.output_tokens.method != method)
      throw MixedCountingMethodsError();
  };

  std::uint64_t method_sum = 0, lc_sum = 0;
  for (const auto& r : method_records) {
    check(r);
    method_sum += r.input_tokens.value;
    if (include_output) method_sum += r.output_tokens.value;
  }
  for (const auto& r : lc_records) {
    check(r);
    lc_sum += r.input_tokens.value;
    if (include_output) lc_sum += r.output_tokens.value;
  }
  if (lc_sum == 0) throw Error("LC token total is zero; token percentage undefined");
  return 100.0 * static_cast<double>(method_sum) / static_cast<double>(lc_sum);
}

DeltaHistogram delta_histogram(const std::vector<ScorePair>& pairs, double bin_width) {
  DeltaHistogram hist;
  hist.bin_width = bin_width;
  hist.total = pairs.size();

  std::map<double, double> avg_sums;
  std::uint64_t identical = 0;
  for (const auto& pair : pairs) {
    double delta = pair.rag_score - pair.lc_score;
    double edge = std::floor(delta / bin_width) * bin_width;
    if (edge == 0.0) edge = 0.0;  // normalize -0.0
    auto& bin = hist.bins[edge];
    ++bin.count;
    avg_sums[edge] += (pair.rag_score + pair.lc_score) / 2.0;
    if (pair.rag_pred == pair.lc_pred) ++identical;
  }
  for (auto& [edge, bin] : hist.bins)
    bin.mean_avg_score = avg_sums[edge] / static_cast<double>(bin.count);
  hist.identical_fraction =
      pairs.empty() ? 0.0 : static_cast<double>(identical) / static_cast<double>(pairs.size());
  return hist;
}

Summary aggregate(const std::vector<RunRecord>& records) {
  Summary summary;
  summary.n = records.size();

  double score_sum = 0.0;
  std::size_t scored = 0;
  std::size_t decisions = 0, rag_answered = 0;
  for (const auto& r : records) {
    if (r.score) {
      score_sum += *r.score;
      ++scored;
    }
    summary.input_tokens += r.input_tokens.value;
    summary.output_tokens += r.output_tokens.value;
    if (r.decision) {
      ++decisions;
      if (r.decision->answered_by == AnsweredBy::rag) ++rag_answered;
    }
  }
  summary.mean_score = scored ? score_sum / static_cast<double>(scored) : 0.0;
  if (decisions)
    summary.answerable_pct =
        100.0 * static_cast<double>(rag_answered) / static_cast<double>(decisions);
  return summary;
}

double unweighted_mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace selfroute
