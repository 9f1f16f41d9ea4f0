#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "diegesis/core/utf8.hpp"
#include "diegesis/retrieval/embedder.hpp"

namespace diegesis {

// Unit-cost insert/delete/substitute distance over Unicode scalars.
inline std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(utf8::decode(a), utf8::decode(b));
}

// 1 - distance / max length, with form("", "") = 1.
inline double form_similarity(std::string_view a, std::string_view b) {
  const auto ua = utf8::decode(a);
  const auto ub = utf8::decode(b);
  const std::size_t longest = std::max(ua.size(), ub.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(ua, ub)) / static_cast<double>(longest);
}

// Embedding cosine clamped to [0,1]. Equal strings score exactly 1 so that
// reward identities hold without rounding noise.
inline double semantic_similarity(std::string_view a, std::string_view b, const Embedder& embedder) {
  if (a == b) return 1.0;
  return unit_cosine_score(embedder.embed(a), embedder.embed(b));
}

}  // namespace diegesis
