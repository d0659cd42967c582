#include "selfroute/text.hpp"

#include <cctype>

namespace selfroute {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < n && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

std::size_t count_words(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

std::string join_words(const std::vector<std::string>& words) {
  return join_words(words, 0, words.size());
}

std::string join_words(const std::vector<std::string>& words, std::size_t first,
                       std::size_t last) {
  std::string out;
  for (std::size_t i = first; i < last && i < words.size(); ++i) {
    if (i > first) out += ' ';
    out += words[i];
  }
  return out;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string strip_punct(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (std::ispunct(static_cast<unsigned char>(c)) == 0) out += c;
  }
  return out;
}

std::vector<std::string> tokenize_simple(std::string_view text) {
  std::vector<std::string> tokens;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      tokens.push_back(word);
      word.clear();
    }
  };
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c) == 0) {
      word += static_cast<char>(std::tolower(c));
    }
    // punctuation is dropped; it does not split the word ("can't" -> "cant")
  }
  flush();
  return tokens;
}

std::string trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

std::optional<char> extract_answer_letter(std::string_view text) {
  auto alnum = [](unsigned char c) { return std::isalnum(c) != 0; };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c < 'A' || c > 'D') continue;
    bool left_ok = (i == 0) || !alnum(static_cast<unsigned char>(text[i - 1]));
    bool right_ok = (i + 1 == text.size()) || !alnum(static_cast<unsigned char>(text[i + 1]));
    if (left_ok && right_ok) return c;
  }
  return std::nullopt;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string fnv1a64_hex(std::string_view data) {
  static const char digits[] = "0123456789abcdef";
  std::uint64_t h = fnv1a64(data);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace selfroute
