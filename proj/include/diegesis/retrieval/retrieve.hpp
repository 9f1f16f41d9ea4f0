#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "diegesis/core/error.hpp"
#include "diegesis/core/text.hpp"
#include "diegesis/graph/graph.hpp"
#include "diegesis/retrieval/embedder.hpp"
#include "diegesis/retrieval/query.hpp"

namespace diegesis {

enum class RetrievalLevel { node, edge };

NLOHMANN_JSON_SERIALIZE_ENUM(RetrievalLevel, {
                                                 {RetrievalLevel::node, "node"},
                                                 {RetrievalLevel::edge, "edge"},
                                             })

// A facet is retrieved as its own node-level item ("<node>#<n>") so the gate
// sees its individual anchor.
struct ScoredItem {
  std::string item_id;
  RetrievalLevel level = RetrievalLevel::node;
  double score = 0.0;  // in [0,1]
  Ordinal anchor = 0;
  std::string text;

  bool operator==(const ScoredItem&) const = default;
};

inline void to_json(nlohmann::json& j, const ScoredItem& s) {
  j = {{"item_id", s.item_id}, {"level", s.level}, {"score", s.score}, {"anchor", s.anchor}, {"text", s.text}};
}

inline void from_json(const nlohmann::json& j, ScoredItem& s) {
  j.at("item_id").get_to(s.item_id);
  j.at("level").get_to(s.level);
  j.at("score").get_to(s.score);
  j.at("anchor").get_to(s.anchor);
  j.at("text").get_to(s.text);
}

struct ContextBundle {
  std::vector<ScoredItem> items;  // ranked, length <= k, every anchor <= t_star
  Ordinal t_star = 0;
  std::string query;
  std::string character;
  QueryDecomposition decomposition;

  bool operator==(const ContextBundle&) const = default;
};

inline void to_json(nlohmann::json& j, const ContextBundle& b) {
  j = {{"items", b.items},
       {"t_star", b.t_star},
       {"query", b.query},
       {"character", b.character},
       {"decomposition", b.decomposition}};
}

inline void from_json(const nlohmann::json& j, ContextBundle& b) {
  j.at("items").get_to(b.items);
  j.at("t_star").get_to(b.t_star);
  j.at("query").get_to(b.query);
  j.at("character").get_to(b.character);
  if (j.contains("decomposition")) {
    const auto& d = j.at("decomposition");
    d.at("low_keywords").get_to(b.decomposition.low_keywords);
    d.at("high_keywords").get_to(b.decomposition.high_keywords);
    b.decomposition.analyzer_fallback = d.value("analyzer_fallback", false);
  }
}

struct RetrievalConfig {
  std::size_t k = 8;
  std::size_t pool = 32;  // candidates per level before gating
  // Test hook only: skips the narrative-present gate so audits can prove they
  // detect leaks. Never set outside tests.
  bool gate_bypass_for_testing = false;
};

// Rank order: score desc, anchor asc, item_id asc.
inline bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.anchor != b.anchor) return a.anchor < b.anchor;
  return a.item_id < b.item_id;
}

namespace detail {

inline std::vector<ScoredItem> top_pool(std::vector<ScoredItem> items, std::size_t pool) {
  if (pool == 0) fail(ErrorKind::invalid_argument, "pool must be at least 1");
  std::sort(items.begin(), items.end(), ranks_before);
  if (items.size() > pool) items.resize(pool);
  return items;
}

inline std::string keyword_string(const std::vector<std::string>& keywords) {
  return text::join(keywords, " ");
}

}  // namespace detail

// Scores every non-temporal node's primary record and each of its facets
// against the joined keywords; returns the top `pool`, ungated.
inline std::vector<ScoredItem> search_nodes(const DiegeticGraph& graph, const std::vector<std::string>& keywords,
                                            const Embedder& embedder, std::size_t pool) {
  if (pool == 0) fail(ErrorKind::invalid_argument, "pool must be at least 1");
  if (keywords.empty()) return {};
  const Vector q = embedder.embed(detail::keyword_string(keywords));
  std::vector<ScoredItem> items;
  for (const auto& n : graph.nodes()) {
    if (n.kind == NodeKind::temporal) continue;
    items.push_back({n.node_id, RetrievalLevel::node, unit_cosine_score(q, embedder.embed(n.embedding_key)),
                     n.anchor.value_or(0), n.embedding_key});
    for (const auto& f : n.facets) {
      items.push_back({f.facet_id, RetrievalLevel::node, unit_cosine_score(q, embedder.embed(f.embedding_key)),
                       f.anchor, f.embedding_key});
    }
  }
  return detail::top_pool(std::move(items), pool);
}

// Same as search_nodes over relation and participation edge descriptions.
inline std::vector<ScoredItem> search_edges(const DiegeticGraph& graph, const std::vector<std::string>& keywords,
                                            const Embedder& embedder, std::size_t pool) {
  if (pool == 0) fail(ErrorKind::invalid_argument, "pool must be at least 1");
  if (keywords.empty()) return {};
  const Vector q = embedder.embed(detail::keyword_string(keywords));
  std::vector<ScoredItem> items;
  items.reserve(graph.edges().size());
  for (const auto& e : graph.edges()) {
    items.push_back({e.edge_id, RetrievalLevel::edge, unit_cosine_score(q, embedder.embed(e.description)),
                     e.anchor, e.description});
  }
  return detail::top_pool(std::move(items), pool);
}

// The narrative-present gate: keeps items anchored at or before t_star.
inline std::vector<ScoredItem> apply_gate(const std::vector<ScoredItem>& items, Ordinal t_star) {
  std::vector<ScoredItem> out;
  std::copy_if(items.begin(), items.end(), std::back_inserter(out),
               [&](const ScoredItem& s) { return s.anchor <= t_star; });
  return out;
}

// Union by item_id keeping the highest score, ranked, truncated to k.
inline std::vector<ScoredItem> merge_rank(const std::vector<ScoredItem>& node_items,
                                          const std::vector<ScoredItem>& edge_items, std::size_t k) {
  std::map<std::string, ScoredItem> best;
  for (const auto* list : {&node_items, &edge_items}) {
    for (const auto& s : *list) {
      auto [it, inserted] = best.emplace(s.item_id, s);
      if (!inserted && s.score > it->second.score) it->second = s;
    }
  }
  std::vector<ScoredItem> out;
  out.reserve(best.size());
  for (auto& [id, s] : best) out.push_back(std::move(s));
  std::sort(out.begin(), out.end(), ranks_before);
  if (out.size() > k) out.resize(k);
  return out;
}

// decompose -> search nodes (low) and edges (high) -> gate each -> merge.
inline ContextBundle retrieve(const DiegeticGraph& graph, std::string_view query, Ordinal t_star,
                              std::string_view character, const Embedder& embedder,
                              AnalyzerClient* analyzer = nullptr, const RetrievalConfig& config = {}) {
  if (!graph.valid_time(t_star)) {
    fail(ErrorKind::invalid_argument, "story time " + std::to_string(t_star) + " is not on the timeline");
  }
  ContextBundle bundle;
  bundle.query = std::string(query);
  bundle.t_star = t_star;
  bundle.character = std::string(character);
  bundle.decomposition = decompose_query(query, analyzer, graph.profiles());

  auto nodes = search_nodes(graph, bundle.decomposition.low_keywords, embedder, config.pool);
  auto edges = search_edges(graph, bundle.decomposition.high_keywords, embedder, config.pool);
  if (!config.gate_bypass_for_testing) {
    nodes = apply_gate(nodes, t_star);
    edges = apply_gate(edges, t_star);
  }
  bundle.items = merge_rank(nodes, edges, config.k);
  return bundle;
}

}  // namespace diegesis
