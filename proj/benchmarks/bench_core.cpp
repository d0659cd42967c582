// Microbenchmarks for the hot paths: chunking, BM25 scoring, top-k
// selection, and the two string metrics.

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "selfroute/metrics.hpp"
#include "selfroute/retrieval.hpp"
#include "selfroute/text.hpp"

using namespace selfroute;

namespace {

std::string random_words(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::string> vocab = {
      "the",  "of",    "and",  "to",    "in",   "that", "was", "he",
      "for",  "it",    "with", "as",    "his",  "on",   "be",  "at",
      "by",   "had",   "not",  "are",   "but",  "from", "or",  "have",
      "an",   "they",  "which", "one",  "you",  "were", "her", "all"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += vocab[pick(rng)];
  }
  return out;
}

const std::string& document_100k() {
  static const std::string doc = random_words(100000, 1);
  return doc;
}

const std::vector<Chunk>& chunks_100k() {
  static const std::vector<Chunk> chunks = chunk_context(document_100k(), 300);
  return chunks;
}

void bm_chunk_context(benchmark::State& state) {
  const std::string& doc = document_100k();
  for (auto _ : state) benchmark::DoNotOptimize(chunk_context(doc, 300));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_chunk_context)->Unit(benchmark::kMillisecond);

void bm_bm25_score(benchmark::State& state) {
  const std::vector<Chunk>& chunks = chunks_100k();
  const std::string question = "which one of them had not been there before";
  for (auto _ : state) benchmark::DoNotOptimize(score_bm25(question, chunks));
  state.SetItemsProcessed(state.iterations() * chunks.size());
}
BENCHMARK(bm_bm25_score)->Unit(benchmark::kMillisecond);

void bm_retrieve_top_k(benchmark::State& state) {
  const std::vector<Chunk>& chunks = chunks_100k();
  const Bm25Retriever bm25;
  const std::string question = "which one of them had not been there before";
  for (auto _ : state)
    benchmark::DoNotOptimize(
        retrieve_top_k(question, chunks, bm25, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(bm_retrieve_top_k)->Arg(1)->Arg(5)->Arg(25)->Unit(benchmark::kMillisecond);

void bm_qa_f1(benchmark::State& state) {
  const std::string pred = random_words(40, 2);
  const std::vector<std::string> golds = {random_words(40, 3)};
  for (auto _ : state) benchmark::DoNotOptimize(qa_f1(pred, golds));
}
BENCHMARK(bm_qa_f1);

void bm_rouge_l(benchmark::State& state) {
  const std::string pred = random_words(80, 4);
  const std::vector<std::string> golds = {random_words(80, 5)};
  for (auto _ : state) benchmark::DoNotOptimize(rouge_l(pred, golds));
}
BENCHMARK(bm_rouge_l);

void bm_tokenize_simple(benchmark::State& state) {
  const std::string text = random_words(300, 6);
  for (auto _ : state) benchmark::DoNotOptimize(tokenize_simple(text));
}
BENCHMARK(bm_tokenize_simple);

}  // namespace

BENCHMARK_MAIN();
