#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "selfroute/corpus.hpp"
#include "selfroute/retrieval.hpp"

namespace selfroute {

/// Needle-in-a-haystack task flavors. `original` asks for the pass key
/// verbatim; `special_token` hides the same needle behind an indirect
/// question with no lexical overlap with it; `two_keys_compare` plants two
/// keys and asks which is larger.
enum class PassKeyVariant { original, special_token, two_keys_compare };

std::string_view to_string(PassKeyVariant variant);
PassKeyVariant passkey_variant_from_string(std::string_view name);

struct PassKeySpec {
  std::size_t haystack_words = 10000;  // filler words, >= 2 * chunk_size
  std::size_t passkey_digits = 6;     // >= 1, first digit never 0
  PassKeyVariant variant = PassKeyVariant::original;
  std::optional<double> needle_depth;  // [0, 1]; drawn from the seed if absent
  std::uint64_t seed = 0;
  std::size_t chunk_size = kDefaultChunkSize;  // boundary grid for placement

  void validate() const;  // throws InvalidSpec
};

/// One synthetic task. Filler is sampled from a fixed frequency-weighted
/// common-word list that never contains "pass", "key" or digits; the needle
/// sentence "The pass key is <digits>." is inserted at the requested depth,
/// nudged to the nearest chunk start when it would straddle a chunk
/// boundary. Fully deterministic for a given PassKeySpec.
QueryTask gen_passkey(const PassKeySpec& spec);

/// n tasks with depths stratified over [0, 1): task i draws its depth from
/// the i-th length-1/n slice. Task i uses seed + i; ids are "<name>:<i+1>".
Dataset gen_passkey_suite(std::size_t n, PassKeySpec spec, std::uint64_t seed);

}  // namespace selfroute
