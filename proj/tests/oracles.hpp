#pragma once

// Brute-force reference implementations used to check the production code.
// They share no code with the pipeline beyond the embedder and decomposition.

#include <algorithm>
#include <set>
#include <tuple>
#include <vector>

#include "diegesis/retrieval/retrieve.hpp"

namespace diegesis::testing {

inline double oracle_dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return std::min(1.0, std::max(0.0, s));
}

inline bool oracle_less(const ScoredItem& a, const ScoredItem& b) {
  return std::make_tuple(-a.score, a.anchor, a.item_id) < std::make_tuple(-b.score, b.anchor, b.item_id);
}

inline std::vector<ScoredItem> oracle_filter(const std::vector<ScoredItem>& items, Ordinal t_star) {
  std::vector<ScoredItem> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!(items[i].anchor > t_star)) out.push_back(items[i]);
  }
  return out;
}

// Dedupe by id (max score wins; ties keep the better-ranked record), full sort,
// truncate.
inline std::vector<ScoredItem> oracle_merge(std::vector<ScoredItem> all, std::size_t k) {
  std::stable_sort(all.begin(), all.end(), oracle_less);
  std::vector<ScoredItem> out;
  std::set<std::string> seen;
  for (const auto& s : all) {
    if (seen.insert(s.item_id).second) out.push_back(s);
  }
  if (out.size() > k) out.erase(out.begin() + static_cast<std::ptrdiff_t>(k), out.end());
  return out;
}

inline std::vector<ScoredItem> oracle_candidates(const DiegeticGraph& g, const std::vector<std::string>& kw,
                                                 const Embedder& emb, bool edges) {
  std::vector<ScoredItem> out;
  if (kw.empty()) return out;
  std::string joined;
  for (const auto& w : kw) joined += (joined.empty() ? "" : " ") + w;
  const Vector q = emb.embed(joined);
  if (edges) {
    for (const auto& e : g.edges()) {
      out.push_back({e.edge_id, RetrievalLevel::edge, oracle_dot(q, emb.embed(e.description)), e.anchor,
                     e.description});
    }
  } else {
    for (const auto& n : g.nodes()) {
      if (n.kind == NodeKind::temporal) continue;
      out.push_back({n.node_id, RetrievalLevel::node, oracle_dot(q, emb.embed(n.embedding_key)),
                     n.anchor ? *n.anchor : 0, n.embedding_key});
      for (const auto& f : n.facets) {
        out.push_back({f.facet_id, RetrievalLevel::node, oracle_dot(q, emb.embed(f.embedding_key)), f.anchor,
                       f.embedding_key});
      }
    }
  }
  std::sort(out.begin(), out.end(), oracle_less);
  return out;
}

// Full pipeline oracle: per-level top-pool, filter, union, sort, truncate.
inline std::vector<ScoredItem> oracle_retrieve(const DiegeticGraph& g, const QueryDecomposition& q, Ordinal t_star,
                                               const Embedder& emb, std::size_t k, std::size_t pool) {
  auto nodes = oracle_candidates(g, q.low_keywords, emb, false);
  auto edges = oracle_candidates(g, q.high_keywords, emb, true);
  if (nodes.size() > pool) nodes.resize(pool);
  if (edges.size() > pool) edges.resize(pool);
  auto all = oracle_filter(nodes, t_star);
  const auto ge = oracle_filter(edges, t_star);
  all.insert(all.end(), ge.begin(), ge.end());
  return oracle_merge(all, k);
}

}  // namespace diegesis::testing
