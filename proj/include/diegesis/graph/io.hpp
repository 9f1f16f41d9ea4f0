#pragma once

#include <filesystem>
#include <string>

#include "diegesis/core/json_io.hpp"
#include "diegesis/graph/graph.hpp"

namespace diegesis {

inline constexpr int kGraphFormatMajor = 1;
inline constexpr int kGraphFormatMinor = 0;

inline void to_json(nlohmann::json& j, const Facet& f) {
  j = {{"facet_id", f.facet_id},
       {"description", f.description},
       {"embedding_key", f.embedding_key},
       {"anchor", f.anchor}};
}
inline void from_json(const nlohmann::json& j, Facet& f) {
  j.at("facet_id").get_to(f.facet_id);
  j.at("description").get_to(f.description);
  j.at("embedding_key").get_to(f.embedding_key);
  j.at("anchor").get_to(f.anchor);
}

inline void to_json(nlohmann::json& j, const GraphNode& n) {
  j = {{"node_id", n.node_id},         {"kind", n.kind},
       {"name", n.name},               {"description", n.description},
       {"embedding_key", n.embedding_key}, {"facets", n.facets}};
  j["anchor"] = n.anchor ? nlohmann::json(*n.anchor) : nlohmann::json(nullptr);
  if (n.entity_kind) j["entity_kind"] = *n.entity_kind;
}
inline void from_json(const nlohmann::json& j, GraphNode& n) {
  j.at("node_id").get_to(n.node_id);
  j.at("kind").get_to(n.kind);
  j.at("name").get_to(n.name);
  j.at("description").get_to(n.description);
  j.at("embedding_key").get_to(n.embedding_key);
  n.facets = j.value("facets", std::vector<Facet>{});
  const auto& a = j.at("anchor");
  n.anchor = a.is_null() ? std::nullopt : std::optional<Ordinal>(a.get<Ordinal>());
  if (j.contains("entity_kind")) {
    n.entity_kind = j.at("entity_kind").get<EntityKind>();
  } else {
    n.entity_kind.reset();
  }
}

inline void to_json(nlohmann::json& j, const GraphEdge& e) {
  j = {{"edge_id", e.edge_id},
       {"subject_id", e.subject_id},
       {"object_id", e.object_id},
       {"description", e.description},
       {"anchor", e.anchor}};
}
inline void from_json(const nlohmann::json& j, GraphEdge& e) {
  j.at("edge_id").get_to(e.edge_id);
  j.at("subject_id").get_to(e.subject_id);
  j.at("object_id").get_to(e.object_id);
  j.at("description").get_to(e.description);
  j.at("anchor").get_to(e.anchor);
}

inline nlohmann::json graph_to_json(const DiegeticGraph& g) {
  return {{"version", std::to_string(kGraphFormatMajor) + "." + std::to_string(kGraphFormatMinor)},
          {"timeline", g.timeline()},
          {"nodes", g.nodes()},
          {"edges", g.edges()},
          {"profiles", g.profiles()},
          {"background_ids", g.background_ids()}};
}

// Canonical serialization: sorted keys, nodes and edges sorted by id. Equal
// graphs serialize to identical bytes.
inline std::string serialize_graph(const DiegeticGraph& g) { return canonical_dump(graph_to_json(g)); }

inline bool looks_like_graph(const nlohmann::json& j) {
  return j.is_object() && j.contains("version") && j.contains("nodes");
}

inline DiegeticGraph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("version")) fail(ErrorKind::parse, "graph: missing version");
  const auto& v = j.at("version");
  std::string version = v.is_string() ? v.get<std::string>() : v.dump();
  int major = 0;
  try {
    major = std::stoi(version.substr(0, version.find('.')));
  } catch (const std::exception&) {
    fail(ErrorKind::parse, "graph: unreadable version '" + version + "'");
  }
  if (major != kGraphFormatMajor) {
    fail(ErrorKind::version, "graph: unsupported format major version " + std::to_string(major) +
                                 " (this build reads " + std::to_string(kGraphFormatMajor) + ".x)");
  }
  DiegeticGraph::Parts parts;
  try {
    j.at("timeline").get_to(parts.timeline);
    j.at("nodes").get_to(parts.nodes);
    j.at("edges").get_to(parts.edges);
    parts.profiles = j.value("profiles", std::vector<CharacterProfile>{});
    parts.background_ids = j.value("background_ids", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("graph: schema mismatch: ") + e.what());
  }
  try {
    return DiegeticGraph::from_parts(std::move(parts));
  } catch (const Error& e) {
    fail(ErrorKind::parse, std::string("graph: ") + e.what());
  }
}

inline DiegeticGraph parse_graph(std::string_view text) { return graph_from_json(parse_json(text, "graph")); }

inline void save_graph(const DiegeticGraph& g, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_graph(g));
}

inline DiegeticGraph load_graph(const std::filesystem::path& path) { return parse_graph(read_file(path)); }

}  // namespace diegesis
