#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "diegesis/core/error.hpp"
#include "diegesis/core/text.hpp"
#include "diegesis/graph/graph.hpp"
#include "diegesis/ingest/types.hpp"

namespace diegesis {

namespace detail {

inline std::string make_id(const char* prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%04zu", prefix, n);
  return buf;
}

inline std::string key_text(const std::string& name, const std::string& description) {
  return description.empty() ? name : name + ": " + description;
}

// Groups records by folded name. The earliest-anchored record (bundle order
// breaks ties) becomes the node; later distinct descriptions become facets.
template <typename Record, typename NameFn, typename DescFn, typename TimeFn>
std::vector<GraphNode> dedupe(const std::vector<Record>& records, NodeKind kind, const char* prefix,
                              NameFn name_of, DescFn desc_of, TimeFn time_of,
                              std::map<std::string, std::string>* name_to_id) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return time_of(records[a]) < time_of(records[b]); });
  std::vector<GraphNode> nodes;
  std::map<std::string, std::size_t> by_key;
  for (std::size_t idx : order) {
    const auto& rec = records[idx];
    const std::string name = text::collapse_whitespace(name_of(rec));
    const std::string desc = desc_of(rec);
    const Ordinal t = time_of(rec);
    const auto key = text::fold_key(name);
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      GraphNode n;
      n.node_id = make_id(prefix, nodes.size());
      n.kind = kind;
      n.name = name;
      n.description = desc;
      n.embedding_key = key_text(name, desc);
      n.anchor = t;
      by_key.emplace(key, nodes.size());
      if (name_to_id) (*name_to_id)[key] = n.node_id;
      nodes.push_back(std::move(n));
      continue;
    }
    auto& node = nodes[it->second];
    const bool same_as_primary = desc == node.description;
    const bool seen = std::any_of(node.facets.begin(), node.facets.end(),
                                  [&](const Facet& f) { return f.description == desc; });
    if (same_as_primary || seen || desc.empty()) continue;
    Facet f;
    f.facet_id = node.node_id + "#" + std::to_string(node.facets.size() + 1);
    f.description = desc;
    f.embedding_key = key_text(node.name, desc);
    f.anchor = t;
    node.facets.push_back(std::move(f));
  }
  return nodes;
}

}  // namespace detail

// Builds the story-time anchored graph: one temporal node per timeline entry,
// deduplicated entity / event / background nodes, one edge per relation and
// one participation edge per (event, participant). Every content node, facet
// and edge carries an anchor ordinal.
inline DiegeticGraph build_graph(const ExtractionBundle& bundle) {
  const std::size_t T = bundle.timeline.size();
  for (std::size_t i = 0; i < T; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (bundle.timeline[j].ordinal == bundle.timeline[i].ordinal) {
        fail(ErrorKind::build, "duplicate timeline ordinal " + std::to_string(bundle.timeline[i].ordinal));
      }
    }
  }
  DiegeticGraph::Parts parts;
  parts.timeline = bundle.timeline;
  std::sort(parts.timeline.begin(), parts.timeline.end());
  parts.profiles = bundle.profiles;

  for (const auto& st : parts.timeline) {
    GraphNode n;
    n.node_id = detail::make_id("time", st.ordinal);
    n.kind = NodeKind::temporal;
    n.name = st.label;
    n.embedding_key = st.label;
    parts.nodes.push_back(std::move(n));
  }

  std::map<std::string, std::string> entity_ids;
  std::map<std::string, std::string> event_ids;
  auto entities = detail::dedupe(
      bundle.entities, NodeKind::entity, "ent", [](const EntityRecord& r) { return r.name; },
      [](const EntityRecord& r) { return r.description; },
      [](const EntityRecord& r) { return r.story_time; }, &entity_ids);
  // Sub-kind comes from the record that became the primary.
  for (auto& n : entities) {
    Ordinal best = *n.anchor;
    for (const auto& r : bundle.entities) {
      if (text::fold_key(r.name) == text::fold_key(n.name) && r.story_time == best) {
        n.entity_kind = r.kind;
        break;
      }
    }
  }
  auto events = detail::dedupe(
      bundle.events, NodeKind::event, "evt", [](const EventRecord& r) { return r.title; },
      [](const EventRecord& r) { return r.summary; }, [](const EventRecord& r) { return r.story_time; },
      &event_ids);
  auto background = detail::dedupe(
      bundle.background, NodeKind::background, "bg", [](const BackgroundRecord& r) { return r.topic; },
      [](const BackgroundRecord& r) { return r.description; },
      [](const BackgroundRecord& r) { return r.story_time.value_or(0); }, nullptr);

  for (auto* group : {&entities, &events, &background}) {
    for (auto& n : *group) {
      if (n.kind == NodeKind::background) parts.background_ids.push_back(n.node_id);
      parts.nodes.push_back(std::move(n));
    }
  }

  auto entity_id = [&](const std::string& name, const std::string& what) {
    const auto it = entity_ids.find(text::fold_key(name));
    if (it == entity_ids.end()) fail(ErrorKind::build, what + " references unknown entity '" + name + "'");
    return it->second;
  };

  for (std::size_t i = 0; i < bundle.relations.size(); ++i) {
    const auto& r = bundle.relations[i];
    const std::string what = "relations[" + std::to_string(i) + "]";
    if (!r.is_binary()) fail(ErrorKind::build, what + " is not binary");
    GraphEdge e;
    e.edge_id = detail::make_id("rel", i);
    e.subject_id = entity_id(r.subject(), what);
    e.object_id = entity_id(r.object(), what);
    e.description = r.description;
    e.anchor = r.story_time;
    parts.edges.push_back(std::move(e));
  }

  std::size_t part_n = 0;
  for (std::size_t i = 0; i < bundle.events.size(); ++i) {
    const auto& ev = bundle.events[i];
    const std::string what = "events[" + std::to_string(i) + "]";
    const std::string event_id = event_ids.at(text::fold_key(text::collapse_whitespace(ev.title)));
    for (const auto& p : ev.participants) {
      GraphEdge e;
      e.edge_id = detail::make_id("part", part_n++);
      e.subject_id = entity_id(p, what);
      e.object_id = event_id;
      e.description = p + " takes part in: " + text::collapse_whitespace(ev.title);
      e.anchor = ev.story_time;
      parts.edges.push_back(std::move(e));
    }
  }
  return DiegeticGraph::from_parts(std::move(parts));
}

}  // namespace diegesis
