#include "selfroute/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "selfroute/errors.hpp"
#include "selfroute/text.hpp"

namespace selfroute {

std::vector<Chunk> chunk_context(std::string_view context, std::size_t chunk_size) {
  if (chunk_size == 0) throw std::invalid_argument("chunk_size must be >= 1");
  const std::vector<std::string> words = split_words(context);
  if (words.empty()) throw EmptyContextError();

  std::vector<Chunk> chunks;
  chunks.reserve(words.size() / chunk_size + 1);
  for (std::size_t start = 0; start < words.size(); start += chunk_size) {
    const std::size_t end = std::min(start + chunk_size, words.size());
    Chunk c;
    c.index = chunks.size();
    c.word_count = end - start;
    c.text = join_words(words, start, end);
    chunks.push_back(std::move(c));
  }
  return chunks;
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.values.size() != v.values.size())
    throw DimensionMismatchError(u.values.size(), v.values.size());
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    dot += u.values[i] * v.values[i];
    nu += u.values[i] * u.values[i];
    nv += v.values[i] * v.values[i];
  }
  if (nu == 0.0 || nv == 0.0) throw ZeroVectorError();
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

std::vector<ScoredChunk> score_bm25(std::string_view question,
                                    const std::vector<Chunk>& chunks,
                                    Bm25Params params) {
  if (chunks.empty()) throw EmptyChunksError();

  const std::vector<std::string> query_terms = tokenize_simple(question);

  // Term frequencies per chunk, plus collection stats.
  std::vector<std::unordered_map<std::string, std::size_t>> tf(chunks.size());
  std::vector<std::size_t> doc_len(chunks.size(), 0);
  double total_len = 0.0;
  for (std::size_t d = 0; d < chunks.size(); ++d) {
    const std::vector<std::string> terms = tokenize_simple(chunks[d].text);
    doc_len[d] = terms.size();
    total_len += static_cast<double>(terms.size());
    for (const std::string& t : terms) ++tf[d][t];
  }
  const double avg_len = total_len / static_cast<double>(chunks.size());
  const double n_docs = static_cast<double>(chunks.size());

  // Document frequency and IDF per distinct query term.
  std::unordered_map<std::string, double> idf;
  for (const std::string& t : query_terms) {
    if (idf.count(t)) continue;
    std::size_t df = 0;
    for (std::size_t d = 0; d < chunks.size(); ++d)
      if (tf[d].count(t)) ++df;
    const double dfd = static_cast<double>(df);
    idf[t] = std::log(1.0 + (n_docs - dfd + 0.5) / (dfd + 0.5));
  }

  std::vector<ScoredChunk> out;
  out.reserve(chunks.size());
  for (std::size_t d = 0; d < chunks.size(); ++d) {
    double score = 0.0;
    const double norm =
        params.k1 * (1.0 - params.b +
                     params.b * static_cast<double>(doc_len[d]) / avg_len);
    for (const std::string& t : query_terms) {
      auto it = tf[d].find(t);
      if (it == tf[d].end()) continue;
      const double f = static_cast<double>(it->second);
      score += idf[t] * f * (params.k1 + 1.0) / (f + norm);
    }
    out.push_back(ScoredChunk{chunks[d], score});
  }
  return out;
}

std::vector<ScoredChunk> retrieve_top_k(const std::string& question,
                                        const std::vector<Chunk>& chunks,
                                        const Retriever& scorer,
                                        std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  std::vector<ScoredChunk> scored = scorer.score(question, chunks);
  std::sort(scored.begin(), scored.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk.index < b.chunk.index;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

std::string_view to_string(ChunkOrder order) {
  switch (order) {
    case ChunkOrder::score_desc: return "score_desc";
    case ChunkOrder::score_asc: return "score_asc";
    case ChunkOrder::document: return "document";
  }
  return "score_desc";
}

ChunkOrder chunk_order_from_string(std::string_view name) {
  if (name == "score_desc") return ChunkOrder::score_desc;
  if (name == "score_asc") return ChunkOrder::score_asc;
  if (name == "document") return ChunkOrder::document;
  throw ConfigError("unknown chunk order: " + std::string(name));
}

std::vector<ScoredChunk> reorder_selected(std::vector<ScoredChunk> selected, ChunkOrder order) {
  switch (order) {
    case ChunkOrder::score_desc:
      // retrieve_top_k already yields this order; re-sort for safety.
      std::sort(selected.begin(), selected.end(),
                [](const ScoredChunk& a, const ScoredChunk& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.chunk.index < b.chunk.index;
                });
      break;
    case ChunkOrder::score_asc:
      std::sort(selected.begin(), selected.end(),
                [](const ScoredChunk& a, const ScoredChunk& b) {
                  if (a.score != b.score) return a.score < b.score;
                  return a.chunk.index < b.chunk.index;
                });
      break;
    case ChunkOrder::document:
      std::sort(selected.begin(), selected.end(),
                [](const ScoredChunk& a, const ScoredChunk& b) {
                  return a.chunk.index < b.chunk.index;
                });
      break;
  }
  return selected;
}

std::string render_retrieved(const std::vector<ScoredChunk>& selected) {
  if (selected.empty()) throw EmptySelectionError();
  std::string out;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += "[chunk " + std::to_string(selected[i].chunk.index) + "]\n";
    out += selected[i].chunk.text;
  }
  return out;
}

}  // namespace selfroute
