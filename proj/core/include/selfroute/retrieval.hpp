#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace selfroute {

inline constexpr std::size_t kDefaultChunkSize = 300;  // words per chunk
inline constexpr std::size_t kDefaultTopK = 5;

/// A contiguous word-slice of a document, the unit of retrieval.
struct Chunk {
  std::size_t index = 0;  // 0-based position in the original document
  std::string text;
  std::size_t word_count = 0;

  bool operator==(const Chunk&) const = default;
};

struct ScoredChunk {
  Chunk chunk;
  double score = 0.0;
};

struct EmbeddingVector {
  std::vector<double> values;
};

/// Split a document into chunks of chunk_size words; only the last chunk may
/// be shorter. Chunk texts are whitespace-normalized (single spaces).
std::vector<Chunk> chunk_context(std::string_view context,
                                 std::size_t chunk_size = kDefaultChunkSize);

/// dot(u, v) / (|u| * |v|); throws DimensionMismatch / ZeroVector.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Okapi BM25 over the given chunk collection. Document frequencies and the
/// average length are computed over these chunks only; terms are lowercased
/// whitespace words with punctuation stripped. IDF uses the nonnegative
/// ln(1 + (N - df + 0.5)/(df + 0.5)) form. One score per chunk, input order.
std::vector<ScoredChunk> score_bm25(std::string_view question,
                                    const std::vector<Chunk>& chunks,
                                    Bm25Params params = {});

/// Read-only chunk scorer; implementations must be safe for concurrent use.
class Retriever {
 public:
  virtual ~Retriever() = default;
  virtual std::vector<ScoredChunk> score(const std::string& question,
                                         const std::vector<Chunk>& chunks) const = 0;
  virtual std::string id() const = 0;
};

class Bm25Retriever final : public Retriever {
 public:
  explicit Bm25Retriever(Bm25Params params = {}) : params_(params) {}
  std::vector<ScoredChunk> score(const std::string& question,
                                 const std::vector<Chunk>& chunks) const override {
    return score_bm25(question, chunks, params_);
  }
  std::string id() const override { return "bm25"; }

 private:
  Bm25Params params_;
};

/// The k highest-scoring chunks (all of them when k > n), sorted by
/// descending score; ties broken by ascending chunk index.
std::vector<ScoredChunk> retrieve_top_k(const std::string& question,
                                        const std::vector<Chunk>& chunks,
                                        const Retriever& scorer,
                                        std::size_t k = kDefaultTopK);

/// Order of selected chunks in the assembled prompt.
enum class ChunkOrder { score_desc, score_asc, document };

std::string_view to_string(ChunkOrder order);
ChunkOrder chunk_order_from_string(std::string_view name);

std::vector<ScoredChunk> reorder_selected(std::vector<ScoredChunk> selected, ChunkOrder order);

/// Concatenate selected chunks in the given order, each prefixed with the
/// line "[chunk <index>]" (original document index), blocks separated by
/// blank lines.
std::string render_retrieved(const std::vector<ScoredChunk>& selected);

}  // namespace selfroute
