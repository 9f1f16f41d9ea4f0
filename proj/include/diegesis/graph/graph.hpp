#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "diegesis/core/error.hpp"
#include "diegesis/core/story_time.hpp"
#include "diegesis/ingest/types.hpp"

namespace diegesis {

enum class NodeKind { entity, event, background, temporal };

NLOHMANN_JSON_SERIALIZE_ENUM(NodeKind, {
                                           {NodeKind::entity, "entity"},
                                           {NodeKind::event, "event"},
                                           {NodeKind::background, "background"},
                                           {NodeKind::temporal, "temporal"},
                                       })

// A later mention of a deduplicated node. Each facet carries its own anchor
// so a description first given at t=9 stays hidden at t*=2.
struct Facet {
  std::string facet_id;  // "<node_id>#<n>"
  std::string description;
  std::string embedding_key;
  Ordinal anchor = 0;

  bool operator==(const Facet&) const = default;
};

struct GraphNode {
  std::string node_id;
  NodeKind kind = NodeKind::entity;
  std::string name;
  std::string description;
  std::string embedding_key;
  std::optional<Ordinal> anchor;  // absent only for temporal nodes
  std::optional<EntityKind> entity_kind;
  std::vector<Facet> facets;

  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  std::string edge_id;
  std::string subject_id;
  std::string object_id;
  std::string description;
  Ordinal anchor = 0;

  bool operator==(const GraphEdge&) const = default;
};

// Where an id points inside a graph: a node's primary record, one of its
// facets, or an edge.
enum class ItemLevel { node, facet, edge };

// Immutable knowledge graph anchored in story time. Built by build_graph or
// load_graph; both check referential integrity, so every instance satisfies
// the graph invariants. Safe to share across threads.
class DiegeticGraph {
 public:
  struct Parts {
    std::vector<StoryTime> timeline;
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
    std::vector<CharacterProfile> profiles;
    std::vector<std::string> background_ids;
  };

  DiegeticGraph() = default;

  // Sorts nodes and edges by id and checks every invariant; throws
  // ErrorKind::build on violation.
  static DiegeticGraph from_parts(Parts parts) {
    DiegeticGraph g;
    g.parts_ = std::move(parts);
    auto by_node = [](const GraphNode& a, const GraphNode& b) { return a.node_id < b.node_id; };
    auto by_edge = [](const GraphEdge& a, const GraphEdge& b) { return a.edge_id < b.edge_id; };
    std::sort(g.parts_.nodes.begin(), g.parts_.nodes.end(), by_node);
    std::sort(g.parts_.edges.begin(), g.parts_.edges.end(), by_edge);
    std::sort(g.parts_.background_ids.begin(), g.parts_.background_ids.end());
    g.index();
    g.check();
    return g;
  }

  const std::vector<StoryTime>& timeline() const { return parts_.timeline; }
  const std::vector<GraphNode>& nodes() const { return parts_.nodes; }
  const std::vector<GraphEdge>& edges() const { return parts_.edges; }
  const std::vector<CharacterProfile>& profiles() const { return parts_.profiles; }
  const std::vector<std::string>& background_ids() const { return parts_.background_ids; }

  std::size_t time_count() const { return parts_.timeline.size(); }
  bool valid_time(Ordinal t) const { return t < parts_.timeline.size(); }

  const StoryTime& story_time(Ordinal t) const {
    if (!valid_time(t)) {
      fail(ErrorKind::invalid_argument, "story time " + std::to_string(t) + " is outside 0.." +
                                            std::to_string(time_count()) + "-1");
    }
    return parts_.timeline[t];
  }

  const GraphNode* find_node(std::string_view id) const {
    const auto it = node_index_.find(std::string(id));
    return it == node_index_.end() ? nullptr : &parts_.nodes[it->second];
  }

  const GraphEdge* find_edge(std::string_view id) const {
    const auto it = edge_index_.find(std::string(id));
    return it == edge_index_.end() ? nullptr : &parts_.edges[it->second];
  }

  const CharacterProfile* find_profile(std::string_view canonical_name) const {
    for (const auto& p : parts_.profiles) {
      if (p.canonical_name == canonical_name) return &p;
    }
    return nullptr;
  }

  // Anchor of any retrievable item id (node, facet or edge), looked up from
  // the graph itself rather than from a retrieval result.
  std::optional<Ordinal> anchor_of(std::string_view item_id) const {
    if (const auto* n = find_node(item_id)) return n->anchor;
    if (const auto* e = find_edge(item_id)) return e->anchor;
    const auto hash = item_id.find('#');
    if (hash != std::string_view::npos) {
      if (const auto* n = find_node(item_id.substr(0, hash))) {
        for (const auto& f : n->facets) {
          if (f.facet_id == item_id) return f.anchor;
        }
      }
    }
    return std::nullopt;
  }

  const Parts& parts() const { return parts_; }

  bool operator==(const DiegeticGraph& o) const {
    return parts_.timeline == o.parts_.timeline && parts_.nodes == o.parts_.nodes &&
           parts_.edges == o.parts_.edges && parts_.profiles == o.parts_.profiles &&
           parts_.background_ids == o.parts_.background_ids;
  }

 private:
  void index() {
    node_index_.clear();
    edge_index_.clear();
    for (std::size_t i = 0; i < parts_.nodes.size(); ++i) {
      if (!node_index_.emplace(parts_.nodes[i].node_id, i).second) {
        fail(ErrorKind::build, "duplicate node id '" + parts_.nodes[i].node_id + "'");
      }
    }
    for (std::size_t i = 0; i < parts_.edges.size(); ++i) {
      if (!edge_index_.emplace(parts_.edges[i].edge_id, i).second) {
        fail(ErrorKind::build, "duplicate edge id '" + parts_.edges[i].edge_id + "'");
      }
    }
  }

  void check() const {
    const auto T = parts_.timeline.size();
    for (std::size_t i = 0; i < T; ++i) {
      if (parts_.timeline[i].ordinal != i) {
        fail(ErrorKind::build, "timeline ordinal " + std::to_string(parts_.timeline[i].ordinal) +
                                   " at position " + std::to_string(i) + " is not dense");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (parts_.timeline[j].label == parts_.timeline[i].label) {
          fail(ErrorKind::build, "timeline label '" + parts_.timeline[i].label + "' repeats");
        }
      }
    }
    for (const auto& n : parts_.nodes) {
      if (n.kind == NodeKind::temporal) {
        if (n.anchor) fail(ErrorKind::build, "temporal node '" + n.node_id + "' has an anchor");
        continue;
      }
      if (!n.anchor) fail(ErrorKind::build, "node '" + n.node_id + "' has no anchor");
      if (*n.anchor >= T) fail(ErrorKind::build, "node '" + n.node_id + "' anchor is past the timeline");
      for (const auto& f : n.facets) {
        if (f.anchor >= T) fail(ErrorKind::build, "facet '" + f.facet_id + "' anchor is past the timeline");
      }
    }
    for (const auto& e : parts_.edges) {
      const auto* s = find_node(e.subject_id);
      const auto* o = find_node(e.object_id);
      if (!s || !o) fail(ErrorKind::build, "edge '" + e.edge_id + "' references a missing node");
      if (s->kind == NodeKind::temporal || o->kind == NodeKind::temporal) {
        fail(ErrorKind::build, "edge '" + e.edge_id + "' touches a temporal node");
      }
      if (e.subject_id == e.object_id) fail(ErrorKind::build, "edge '" + e.edge_id + "' is a self loop");
      if (e.anchor >= T) fail(ErrorKind::build, "edge '" + e.edge_id + "' anchor is past the timeline");
    }
    for (const auto& id : parts_.background_ids) {
      const auto* n = find_node(id);
      if (!n || n->kind != NodeKind::background) {
        fail(ErrorKind::build, "background id '" + id + "' is not a background node");
      }
    }
  }

  Parts parts_;
  std::unordered_map<std::string, std::size_t> node_index_;
  std::unordered_map<std::string, std::size_t> edge_index_;
};

}  // namespace diegesis
