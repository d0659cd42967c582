#include "selfroute/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "selfroute/errors.hpp"
#include "selfroute/text.hpp"

namespace selfroute {

std::string_view to_string(PassKeyVariant variant) {
  switch (variant) {
    case PassKeyVariant::original: return "original";
    case PassKeyVariant::special_token: return "special_token";
    case PassKeyVariant::two_keys_compare: return "two_keys_compare";
  }
  return "original";
}

PassKeyVariant passkey_variant_from_string(std::string_view name) {
  if (name == "original") return PassKeyVariant::original;
  if (name == "special_token") return PassKeyVariant::special_token;
  if (name == "two_keys_compare") return PassKeyVariant::two_keys_compare;
  throw ConfigError("unknown passkey variant: " + std::string(name));
}

void PassKeySpec::validate() const {
  if (chunk_size == 0) throw InvalidSpecError("chunk_size must be >= 1");
  if (haystack_words < 2 * chunk_size)
    throw InvalidSpecError("haystack_words must be at least two chunks (" +
                           std::to_string(2 * chunk_size) + ")");
  if (passkey_digits < 1) throw InvalidSpecError("passkey_digits must be >= 1");
  if (needle_depth.has_value() && (*needle_depth < 0.0 || *needle_depth > 1.0))
    throw InvalidSpecError("needle_depth must be in [0, 1]");
}

namespace {

// Frequency-weighted filler vocabulary, roughly Zipfian: function words are
// common so filler reads like ordinary prose and the needle's own function
// words ("the", "is") give its chunk no retrieval advantage. Deliberately
// absent: "pass", "key", and anything containing a digit.
struct WeightedWord {
  const char* word;
  unsigned weight;
};

const WeightedWord kFillerWords[] = {
    {"the", 60}, {"of", 30},   {"and", 28},  {"a", 26},    {"to", 24},   {"in", 20},
    {"is", 18},  {"was", 12},  {"that", 11}, {"it", 10},   {"for", 9},   {"on", 9},
    {"with", 8}, {"as", 8},    {"at", 6},    {"by", 6},    {"be", 6},    {"this", 5},
    {"had", 5},  {"from", 5},  {"are", 5},   {"or", 4},    {"an", 4},    {"were", 4},
    {"but", 4},  {"not", 4},   {"they", 3},  {"his", 3},   {"her", 3},   {"she", 3},
    {"he", 3},   {"its", 2},   {"their", 2}, {"there", 2}, {"then", 2},  {"when", 2},
    {"while", 2},
    // content words
    {"time", 2},    {"people", 2},  {"water", 2},   {"house", 2},   {"river", 2},
    {"mountain", 1}, {"garden", 1},  {"window", 1},  {"story", 1},   {"music", 1},
    {"light", 2},   {"morning", 1}, {"evening", 1}, {"paper", 1},   {"letter", 1},
    {"winter", 1},  {"summer", 1},  {"road", 2},    {"city", 2},    {"village", 1},
    {"forest", 1},  {"field", 2},   {"stone", 1},   {"bridge", 1},  {"market", 1},
    {"harbor", 1},  {"castle", 1},  {"tower", 1},   {"cloud", 1},   {"rain", 1},
    {"snow", 1},    {"wind", 1},    {"fire", 1},    {"earth", 1},   {"tree", 2},
    {"flower", 1},  {"bird", 1},    {"horse", 1},   {"journey", 1}, {"voyage", 1},
    {"dream", 1},   {"silence", 1}, {"color", 1},   {"sound", 1},   {"voice", 1},
    {"table", 1},   {"chair", 1},   {"door", 2},    {"wall", 1},    {"floor", 1},
    {"roof", 1},    {"street", 2},  {"corner", 1},  {"square", 1},  {"church", 1},
    {"school", 2},  {"library", 1}, {"museum", 1},  {"station", 1}, {"train", 1},
    {"boat", 1},    {"night", 2},   {"day", 3},     {"year", 2},    {"hand", 2},
    {"eye", 1},     {"face", 1},    {"word", 1},    {"work", 2},    {"life", 2},
    {"world", 2},   {"way", 2},     {"man", 2},     {"woman", 2},   {"child", 1},
    {"friend", 1},  {"family", 1},  {"name", 1},    {"place", 2},   {"land", 1},
    {"sea", 1},     {"sky", 1},     {"sun", 1},     {"moon", 1},    {"star", 1},
    {"hill", 1},    {"lake", 1},    {"island", 1},  {"shore", 1},   {"path", 1},
    {"special", 2}, {"hidden", 1},  {"inside", 2},  {"old", 3},     {"new", 3},
    {"long", 2},    {"small", 2},   {"great", 2},   {"quiet", 1},   {"dark", 1},
};

constexpr std::size_t kFillerCount = sizeof(kFillerWords) / sizeof(kFillerWords[0]);

// Unbiased integer in [0, n) via rejection; uniform_int_distribution's
// algorithm is implementation-defined, and generated corpora must be
// byte-identical across toolchains.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % n;
}

double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

class FillerSampler {
 public:
  FillerSampler() {
    cumulative_.reserve(kFillerCount);
    unsigned total = 0;
    for (const WeightedWord& w : kFillerWords) {
      total += w.weight;
      cumulative_.push_back(total);
    }
    total_ = total;
  }

  const char* draw(std::mt19937_64& rng) const {
    const std::uint64_t x = uniform_below(rng, total_);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(),
                                     static_cast<unsigned>(x));
    return kFillerWords[static_cast<std::size_t>(it - cumulative_.begin())].word;
  }

 private:
  std::vector<unsigned> cumulative_;
  unsigned total_ = 0;
};

std::string draw_digits(std::mt19937_64& rng, std::size_t n) {
  std::string out;
  out.reserve(n);
  out += static_cast<char>('1' + uniform_below(rng, 9));
  for (std::size_t i = 1; i < n; ++i)
    out += static_cast<char>('0' + uniform_below(rng, 10));
  return out;
}

std::vector<std::string> needle_words(const std::string& digits) {
  return {"The", "pass", "key", "is", digits + "."};
}

// Word position for a needle of nw words at the given depth, moved to a
// chunk start whenever it would straddle a chunk boundary.
std::size_t placement(double depth, std::size_t haystack, std::size_t nw,
                      std::size_t chunk_size) {
  std::size_t p = static_cast<std::size_t>(std::llround(depth * static_cast<double>(haystack)));
  if (p > haystack) p = haystack;
  if (chunk_size < nw) return p;  // cannot avoid straddling tiny chunks
  const std::size_t first = p / chunk_size;
  const std::size_t last = (p + nw - 1) / chunk_size;
  if (first == last) return p;
  const std::size_t ahead = last * chunk_size;
  if (ahead <= haystack) return ahead;
  return first * chunk_size;
}

void insert_words(std::vector<std::string>& words, std::size_t pos,
                  const std::vector<std::string>& needle) {
  words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), needle.begin(),
               needle.end());
}

}  // namespace

QueryTask gen_passkey(const PassKeySpec& spec) {
  spec.validate();

  static const FillerSampler sampler;
  std::mt19937_64 rng(spec.seed);

  const std::string key = draw_digits(rng, spec.passkey_digits);
  std::string second_key;
  if (spec.variant == PassKeyVariant::two_keys_compare) {
    do {
      second_key = draw_digits(rng, spec.passkey_digits);
    } while (second_key == key);
  }
  const double depth = spec.needle_depth.has_value() ? *spec.needle_depth : uniform_unit(rng);

  std::vector<std::string> words;
  words.reserve(spec.haystack_words + 10);
  for (std::size_t i = 0; i < spec.haystack_words; ++i) words.emplace_back(sampler.draw(rng));

  QueryTask task;
  task.dataset_id = "passkey_" + std::string(to_string(spec.variant));
  task.id = task.dataset_id + ":" + std::to_string(spec.seed);
  task.task_kind = TaskKind::open_qa;

  const std::vector<std::string> first_needle = needle_words(key);
  const std::size_t nw = first_needle.size();

  if (spec.variant == PassKeyVariant::two_keys_compare) {
    // Two needles half a document apart; the earlier one is "the first key".
    const double d2 = std::fmod(depth + 0.5, 1.0);
    const double d_lo = std::min(depth, d2);
    const double d_hi = std::max(depth, d2);
    const std::string& lo_key = (d_lo == depth) ? key : second_key;
    const std::string& hi_key = (d_lo == depth) ? second_key : key;

    const std::size_t p_lo = placement(d_lo, spec.haystack_words, nw, spec.chunk_size);
    insert_words(words, p_lo, needle_words(lo_key));
    std::size_t p_hi =
        placement(d_hi, spec.haystack_words, nw, spec.chunk_size) + nw;
    // Keep document order: snapping on short haystacks must not let the
    // second needle land before (or inside) the first.
    if (p_hi < p_lo + nw) p_hi = p_lo + nw;
    if (p_hi > words.size()) p_hi = words.size();
    insert_words(words, p_hi, needle_words(hi_key));

    const long long lo = std::stoll(lo_key), hi = std::stoll(hi_key);
    task.question = "Which passkey is larger? First or second?";
    task.gold_answers = {lo > hi ? "first" : "second"};
  } else {
    const std::size_t p = placement(depth, spec.haystack_words, nw, spec.chunk_size);
    insert_words(words, p, first_needle);
    task.question = (spec.variant == PassKeyVariant::original)
                        ? "What is the pass key?"
                        : "What is the special token hidden inside the texts?";
    task.gold_answers = {key};
  }

  task.context = join_words(words);
  return task;
}

Dataset gen_passkey_suite(std::size_t n, PassKeySpec spec, std::uint64_t seed) {
  if (n == 0) throw InvalidSpecError("suite size must be >= 1");
  spec.validate();

  Dataset out;
  out.name = "passkey_" + std::string(to_string(spec.variant));
  out.metric_kind = MetricKind::qa_f1;

  std::mt19937_64 depth_rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    PassKeySpec one = spec;
    one.seed = seed + i;
    // Stratified depths: one draw per length-1/n slice of [0, 1).
    one.needle_depth =
        (static_cast<double>(i) + uniform_unit(depth_rng)) / static_cast<double>(n);
    QueryTask task = gen_passkey(one);
    task.dataset_id = out.name;
    task.id = out.name + ":" + std::to_string(i + 1);
    out.tasks.push_back(std::move(task));
  }
  return out;
}

}  // namespace selfroute
