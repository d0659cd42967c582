#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace selfroute {

/// Maximal whitespace-separated runs of non-whitespace characters.
std::vector<std::string> split_words(std::string_view text);

/// Number of whitespace-separated words; the library-wide notion of "word".
std::size_t count_words(std::string_view text);

std::string join_words(const std::vector<std::string>& words);

/// Join words[first, last) with single spaces.
std::string join_words(const std::vector<std::string>& words, std::size_t first,
                       std::size_t last);

std::string to_lower(std::string_view text);

/// Remove ASCII punctuation characters, keeping everything else in place.
std::string strip_punct(std::string_view text);

/// Lowercase, strip punctuation, split on whitespace; empty tokens dropped.
/// Shared by BM25 term extraction and the QA overlap metrics.
std::vector<std::string> tokenize_simple(std::string_view text);

std::string trim(std::string_view text);

/// First standalone capital letter in {A,B,C,D}, i.e. one not adjacent to an
/// alphanumeric character on either side.
std::optional<char> extract_answer_letter(std::string_view text);

std::uint64_t fnv1a64(std::string_view data);

/// 16-char lowercase hex of fnv1a64; used for run directories and cache keys.
std::string fnv1a64_hex(std::string_view data);

}  // namespace selfroute
