#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "selfroute/corpus.hpp"
#include "selfroute/records.hpp"

namespace selfroute {

/// A prediction score on the 0-100 scale.
struct Score {
  double value = 0.0;
  MetricKind metric = MetricKind::qa_f1;
};

/// SQuAD-style answer normalization: lowercase, strip punctuation, drop the
/// articles {a, an, the}, split on whitespace.
std::vector<std::string> normalize_answer(std::string_view text);

/// Token-level F1 over lowercased, punctuation-stripped words (articles
/// kept); bag-of-tokens overlap, max over golds, scaled to 0-100.
Score qa_f1(std::string_view prediction, const std::vector<std::string>& golds);

/// 100 if the first standalone capital A-D in the prediction equals the gold
/// letter, 0 otherwise (including when no letter is extractable).
Score mc_accuracy(std::string_view prediction, char gold_letter);

/// ROUGE-L F-measure over lowercased, punctuation-stripped words; LCS-based,
/// max over golds, scaled to 0-100.
Score rouge_l(std::string_view prediction, const std::vector<std::string>& golds);

/// Dispatch on the task kind: open_qa -> qa_f1, multi_choice -> mc_accuracy,
/// summarization -> rouge_l.
Score score_task(const QueryTask& task, std::string_view prediction);

/// 100 * sum(method input tokens) / sum(LC input tokens) over the same query
/// set. include_output folds output tokens into both sums.
double token_percentage(const std::vector<RunRecord>& method_records,
                        const std::vector<RunRecord>& lc_records,
                        bool include_output = false);

struct DeltaBin {
  std::uint64_t count = 0;
  double mean_avg_score = 0.0;  // mean of (S_RAG + S_LC) / 2 within the bin
};

struct ScorePair {
  double rag_score = 0.0;
  double lc_score = 0.0;
  std::string rag_pred;
  std::string lc_pred;
};

/// Distribution of S_RAG - S_LC. Bin edges are [k*w, (k+1)*w) for integer k,
/// so a zero difference lands in [0, w).
struct DeltaHistogram {
  double bin_width = 10.0;
  std::map<double, DeltaBin> bins;  // keyed by bin lower edge
  double identical_fraction = 0.0;  // byte-identical prediction pairs
  std::uint64_t total = 0;
};

DeltaHistogram delta_histogram(const std::vector<ScorePair>& pairs, double bin_width = 10.0);

/// Mean score over scored records, answerable% over route decisions, and
/// token totals.
Summary aggregate(const std::vector<RunRecord>& records);

/// Table-1 style cross-dataset average: unweighted mean of per-dataset means.
double unweighted_mean(const std::vector<double>& values);

}  // namespace selfroute
