#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "diegesis/graph/graph.hpp"

namespace diegesis {

struct AnchoredFact {
  std::string fact_id;  // node id, facet id or edge id
  ItemLevel level = ItemLevel::node;
  Ordinal anchor = 0;
  std::string text;

  bool operator==(const AnchoredFact&) const = default;
};

// Everything known about one node at story time t_star: its primary record,
// facets and incident edges anchored at or before t_star, ordered by anchor
// then id.
inline std::vector<AnchoredFact> facts_at(const DiegeticGraph& graph, std::string_view node_id,
                                          Ordinal t_star) {
  const GraphNode* node = graph.find_node(node_id);
  if (!node) fail(ErrorKind::not_found, "unknown node '" + std::string(node_id) + "'");
  std::vector<AnchoredFact> out;
  if (node->kind == NodeKind::temporal) {
    // A temporal node is its own anchor; its name is the timeline label.
    for (const auto& st : graph.timeline()) {
      if (st.label == node->name && st.ordinal <= t_star) {
        out.push_back({node->node_id, ItemLevel::node, st.ordinal, node->name});
      }
    }
    return out;
  }
  if (*node->anchor <= t_star) {
    out.push_back({node->node_id, ItemLevel::node, *node->anchor, node->embedding_key});
  }
  for (const auto& f : node->facets) {
    if (f.anchor <= t_star) out.push_back({f.facet_id, ItemLevel::facet, f.anchor, f.embedding_key});
  }
  for (const auto& e : graph.edges()) {
    if ((e.subject_id == node_id || e.object_id == node_id) && e.anchor <= t_star) {
      out.push_back({e.edge_id, ItemLevel::edge, e.anchor, e.description});
    }
  }
  std::sort(out.begin(), out.end(), [](const AnchoredFact& a, const AnchoredFact& b) {
    return a.anchor != b.anchor ? a.anchor < b.anchor : a.fact_id < b.fact_id;
  });
  return out;
}

}  // namespace diegesis
