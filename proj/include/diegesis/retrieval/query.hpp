#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "diegesis/assets.hpp"
#include "diegesis/core/error.hpp"
#include "diegesis/core/text.hpp"
#include "diegesis/ingest/types.hpp"
#include "diegesis/remote/client.hpp"

namespace diegesis {

struct QueryDecomposition {
  std::vector<std::string> low_keywords;   // local detail cues, searched over nodes
  std::vector<std::string> high_keywords;  // relational cues, searched over edges
  bool analyzer_fallback = false;          // remote analyzer failed; heuristic used

  bool operator==(const QueryDecomposition&) const = default;
};

inline void to_json(nlohmann::json& j, const QueryDecomposition& q) {
  j = {{"low_keywords", q.low_keywords}, {"high_keywords", q.high_keywords}};
  if (q.analyzer_fallback) j["analyzer_fallback"] = true;
}

// Remote query analyzer. Implementations return both lists as the model gave
// them; errors propagate as diegesis::Error.
class AnalyzerClient {
 public:
  virtual ~AnalyzerClient() = default;
  virtual QueryDecomposition analyze(std::string_view query) = 0;
};

namespace detail {

inline const std::set<std::string, std::less<>>& relationship_verbs() {
  static const std::set<std::string, std::less<>> kVerbs = {
      "admire",   "admires",   "argue",    "argues",   "betray",   "betrays",  "betrayed",
      "capture",  "captured",  "command",  "commands", "commanded", "distrust", "enemy",
      "enemies",  "escape",    "escapes",  "escaped",  "fear",     "fears",    "feared",
      "fight",    "fights",    "fought",   "follow",   "follows",  "followed", "friend",
      "friends",  "hate",      "hates",    "hated",    "help",     "helps",    "helped",
      "imprison", "imprisons", "imprisoned", "kill",   "kills",    "killed",   "love",
      "loves",    "loved",     "marry",    "married",  "meet",     "meets",    "met",
      "obey",     "obeys",     "protect",  "protects", "protected", "quarrel", "quarrels",
      "rescue",   "rescues",   "rescued",  "resent",   "resents",  "rival",    "save",
      "saves",    "saved",     "serve",    "serves",   "served",   "trust",    "trusts",
      "trusted",  "ally",      "allies",   "respect",  "respects", "defy",     "defies",
  };
  return kVerbs;
}

inline void push_unique(std::vector<std::string>& out, std::string value) {
  if (std::find(out.begin(), out.end(), value) == out.end()) out.push_back(std::move(value));
}

}  // namespace detail

// Deterministic decomposition:
//   low  = non-stopword unigrams, in order of appearance;
//   high = bigrams of adjacent content tokens, relationship verbs, then the
//          canonical names of profiles mentioned by name or alias.
// All keywords are lowercase and unique within their list. If both lists end
// up empty the low list falls back to every token, then to the whole query.
inline QueryDecomposition heuristic_decompose(std::string_view query,
                                              const std::vector<CharacterProfile>& profiles = {}) {
  const std::string_view trimmed = text::trim(query);
  if (trimmed.empty()) fail(ErrorKind::invalid_argument, "empty query");
  const std::string lowered = text::to_lower(trimmed);

  std::vector<std::string> tokens;
  std::vector<std::string> content;
  for (auto w : text::words(lowered)) {
    tokens.emplace_back(w);
    if (w.size() > 1 && !text::is_stopword(w)) content.emplace_back(w);
  }

  QueryDecomposition q;
  for (const auto& w : content) detail::push_unique(q.low_keywords, w);
  for (std::size_t i = 0; i + 1 < content.size(); ++i) {
    detail::push_unique(q.high_keywords, content[i] + " " + content[i + 1]);
  }
  for (const auto& w : content) {
    if (detail::relationship_verbs().count(w)) detail::push_unique(q.high_keywords, w);
  }
  for (const auto& p : profiles) {
    bool mentioned = text::contains_word(lowered, p.canonical_name);
    for (const auto& a : p.aliases) mentioned = mentioned || text::contains_word(lowered, a);
    if (mentioned) detail::push_unique(q.high_keywords, text::fold_key(p.canonical_name));
  }

  if (q.low_keywords.empty() && q.high_keywords.empty()) {
    for (const auto& t : tokens) detail::push_unique(q.low_keywords, t);
    if (q.low_keywords.empty()) q.low_keywords.push_back(text::collapse_whitespace(lowered));
  }
  return q;
}

// Remote analyzer: asks a chat model for the two keyword lists as JSON.
class RemoteAnalyzer : public AnalyzerClient {
 public:
  explicit RemoteAnalyzer(remote::Endpoint endpoint) : client_(std::move(endpoint)) {}

  QueryDecomposition analyze(std::string_view query) override {
    const std::string reply =
        client_.complete({{"system", std::string(assets::decompose_query_v1_txt)}, {"user", std::string(query)}});
    const auto j = nlohmann::json::parse(remote::strip_code_fence(reply), nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorKind::remote, "analyzer reply is not a JSON object");
    QueryDecomposition q;
    try {
      q.low_keywords = j.at("low_keywords").get<std::vector<std::string>>();
      q.high_keywords = j.at("high_keywords").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::remote, std::string("analyzer reply has wrong shape: ") + e.what());
    }
    return q;
  }

 private:
  remote::ChatClient client_;
};

// With an analyzer its lists pass through unchanged; if it fails, the
// heuristic result is returned with analyzer_fallback set.
inline QueryDecomposition decompose_query(std::string_view query, AnalyzerClient* analyzer = nullptr,
                                          const std::vector<CharacterProfile>& profiles = {}) {
  if (text::trim(query).empty()) fail(ErrorKind::invalid_argument, "empty query");
  if (analyzer) {
    try {
      auto q = analyzer->analyze(query);
      q.analyzer_fallback = false;
      return q;
    } catch (const Error&) {
      auto q = heuristic_decompose(query, profiles);
      q.analyzer_fallback = true;
      return q;
    }
  }
  return heuristic_decompose(query, profiles);
}

}  // namespace diegesis
