#pragma once

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace diegesis::text {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

// Collapses every whitespace run to one space and trims both ends.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
    } else {
      if (pending) out.push_back(' ');
      pending = false;
      out.push_back(c);
    }
  }
  return out;
}

// Case-insensitive, whitespace-trimmed comparison key.
inline std::string fold_key(std::string_view s) {
  return to_lower(collapse_whitespace(s));
}

inline bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || u >= 0x80;
}

// Maximal runs of alphanumeric (or non-ASCII) bytes.
inline std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && !is_word_char(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && is_word_char(s[j])) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool contains_folded(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

// True when `needle` occurs in `haystack` case-insensitively on word
// boundaries.
inline bool contains_word(std::string_view haystack, std::string_view needle) {
  const std::string h = to_lower(haystack);
  const std::string n = to_lower(needle);
  if (n.empty()) return false;
  std::size_t pos = h.find(n);
  while (pos != std::string::npos) {
    const bool left_ok = pos == 0 || !is_word_char(h[pos - 1]);
    const std::size_t end = pos + n.size();
    const bool right_ok = end == h.size() || !is_word_char(h[end]);
    if (left_ok && right_ok) return true;
    pos = h.find(n, pos + 1);
  }
  return false;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

inline std::string capitalize(std::string_view s) {
  std::string out(s);
  if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') {
    out[0] = static_cast<char>(out[0] - 'a' + 'A');
  }
  return out;
}

// Lowercase ASCII slug: runs of non-alphanumerics become one '-'.
inline std::string slug(std::string_view s) {
  std::string out;
  bool dash = false;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::isalnum(u)) {
      if (dash && !out.empty()) out.push_back('-');
      dash = false;
      out.push_back(static_cast<char>(std::tolower(u)));
    } else {
      dash = true;
    }
  }
  return out;
}

inline const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> kWords = {
      "a",       "about",  "above", "after",  "again",  "against", "all",   "am",
      "an",      "and",    "any",   "are",    "as",     "at",      "be",    "because",
      "been",    "before", "being", "below",  "between", "both",   "but",   "by",
      "can",     "could",  "did",   "do",     "does",   "doing",   "down",  "during",
      "each",    "few",    "for",   "from",   "further", "had",    "has",   "have",
      "having",  "he",     "her",   "here",   "hers",   "herself", "him",   "himself",
      "his",     "how",    "i",     "if",     "in",     "into",    "is",    "it",
      "its",     "itself", "just",  "me",     "more",   "most",    "my",    "myself",
      "no",      "nor",    "not",   "now",    "of",     "off",     "on",    "once",
      "only",    "or",     "other", "our",    "ours",   "out",     "over",  "own",
      "same",    "she",    "should", "so",    "some",   "such",    "than",  "that",
      "the",     "their",  "them",  "then",   "there",  "these",   "they",  "this",
      "those",   "through", "to",   "too",    "under",  "until",   "up",    "very",
      "was",     "we",     "were",  "what",   "when",   "where",   "which", "while",
      "who",     "whom",   "why",   "will",   "with",   "would",   "you",   "your",
      "yours",   "yourself", "tell", "know",  "did",    "us",      "let",   "shall",
      "may",     "might",  "must",  "ever",   "also",   "yet",     "still", "one",
  };
  return kWords;
}

inline bool is_stopword(std::string_view lowered) {
  return stopwords().find(lowered) != stopwords().end();
}

// Splits on '.', '!' or '?' followed by whitespace. Terminal punctuation
// stays with its sentence; results are trimmed and never empty.
inline std::vector<std::string_view> sentences(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == s.size() || is_space(s[i + 1]))) {
      auto piece = trim(s.substr(start, i + 1 - start));
      if (!piece.empty()) out.push_back(piece);
      start = i + 1;
    }
  }
  auto tail = trim(s.substr(std::min(start, s.size())));
  if (!tail.empty()) out.push_back(tail);
  return out;
}

}  // namespace diegesis::text
