#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "diegesis/core/error.hpp"
#include "diegesis/core/story_time.hpp"

namespace diegesis {

struct CharRange {
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const CharRange&) const = default;
};

// A paragraph-aligned slice of one chapter. char_range holds byte offsets
// into the source document; text is exactly document[start, end).
struct Span {
  std::string span_id;
  std::size_t chapter_index = 0;
  std::string text;
  CharRange char_range;

  bool operator==(const Span&) const = default;
};

struct Drive {
  std::string description;
  Ordinal valid_from = 0;

  bool operator==(const Drive&) const = default;
};

struct Relationship {
  std::string other_canonical_name;
  std::string nature;
  std::string dynamics;

  bool operator==(const Relationship&) const = default;
};

// Four-layer persona record: basics, core attributes, drives over time and
// relationship dynamics.
struct CharacterProfile {
  std::string canonical_name;
  std::vector<std::string> aliases;
  std::string origin;
  std::vector<std::string> core_attributes;
  std::vector<Drive> drives;  // sorted by valid_from
  std::vector<Relationship> relationships;

  bool operator==(const CharacterProfile&) const = default;

  // Latest drive whose valid_from is at or before t.
  const Drive* drive_at(Ordinal t) const {
    const Drive* best = nullptr;
    for (const auto& d : drives) {
      if (d.valid_from <= t) best = &d;
    }
    return best;
  }
};

enum class EntityKind { character, location, object };

NLOHMANN_JSON_SERIALIZE_ENUM(EntityKind, {
                                             {EntityKind::character, "character"},
                                             {EntityKind::location, "location"},
                                             {EntityKind::object, "object"},
                                         })

inline const char* to_string(EntityKind k) {
  switch (k) {
    case EntityKind::character: return "character";
    case EntityKind::location: return "location";
    case EntityKind::object: return "object";
  }
  return "object";
}

struct EntityRecord {
  std::string name;
  EntityKind kind = EntityKind::object;
  std::string description;
  std::string span_id;
  Ordinal story_time = 0;

  bool operator==(const EntityRecord&) const = default;
};

// Raw relation as produced by an extractor. Subjects and objects are lists so
// that a non-binary record can be represented and rejected by validation;
// a valid record has exactly one of each.
struct RelationRecord {
  std::vector<std::string> subjects;
  std::vector<std::string> objects;
  std::string description;
  std::string span_id;
  Ordinal story_time = 0;

  bool operator==(const RelationRecord&) const = default;

  bool is_binary() const { return subjects.size() == 1 && objects.size() == 1; }
  const std::string& subject() const { return subjects.at(0); }
  const std::string& object() const { return objects.at(0); }
};

struct EventRecord {
  std::string title;
  std::string summary;
  std::vector<std::string> participants;
  Ordinal story_time = 0;
  std::string span_id;

  bool operator==(const EventRecord&) const = default;
};

// Macro-level world fact. Without an explicit story_time it is anchored at
// the start of the timeline.
struct BackgroundRecord {
  std::string topic;
  std::string description;
  std::optional<Ordinal> story_time;

  bool operator==(const BackgroundRecord&) const = default;
};

struct ExtractionBundle {
  std::vector<CharacterProfile> profiles;
  std::vector<EntityRecord> entities;
  std::vector<RelationRecord> relations;
  std::vector<EventRecord> events;
  std::vector<BackgroundRecord> background;
  std::vector<StoryTime> timeline;

  bool operator==(const ExtractionBundle&) const = default;
};

// ---- JSON ---------------------------------------------------------------

inline void to_json(nlohmann::json& j, const Span& s) {
  j = {{"span_id", s.span_id},
       {"chapter_index", s.chapter_index},
       {"text", s.text},
       {"char_range", {s.char_range.start, s.char_range.end}}};
}

inline void from_json(const nlohmann::json& j, Span& s) {
  j.at("span_id").get_to(s.span_id);
  j.at("chapter_index").get_to(s.chapter_index);
  j.at("text").get_to(s.text);
  const auto& r = j.at("char_range");
  if (!r.is_array() || r.size() != 2) {
    throw nlohmann::json::type_error::create(302, "char_range must be [start, end]", &j);
  }
  s.char_range = {r[0].get<std::size_t>(), r[1].get<std::size_t>()};
}

inline void to_json(nlohmann::json& j, const Drive& d) {
  j = {{"description", d.description}, {"valid_from", d.valid_from}};
}
inline void from_json(const nlohmann::json& j, Drive& d) {
  j.at("description").get_to(d.description);
  j.at("valid_from").get_to(d.valid_from);
}

inline void to_json(nlohmann::json& j, const Relationship& r) {
  j = {{"other_canonical_name", r.other_canonical_name},
       {"nature", r.nature},
       {"dynamics", r.dynamics}};
}
inline void from_json(const nlohmann::json& j, Relationship& r) {
  j.at("other_canonical_name").get_to(r.other_canonical_name);
  r.nature = j.value("nature", std::string{});
  r.dynamics = j.value("dynamics", std::string{});
}

inline void to_json(nlohmann::json& j, const CharacterProfile& p) {
  j = {{"canonical_name", p.canonical_name}, {"aliases", p.aliases},
       {"origin", p.origin},                 {"core_attributes", p.core_attributes},
       {"drives", p.drives},                 {"relationships", p.relationships}};
}
inline void from_json(const nlohmann::json& j, CharacterProfile& p) {
  j.at("canonical_name").get_to(p.canonical_name);
  p.aliases = j.value("aliases", std::vector<std::string>{});
  p.origin = j.value("origin", std::string{});
  p.core_attributes = j.value("core_attributes", std::vector<std::string>{});
  p.drives = j.value("drives", std::vector<Drive>{});
  p.relationships = j.value("relationships", std::vector<Relationship>{});
}

inline void to_json(nlohmann::json& j, const EntityRecord& e) {
  j = {{"name", e.name},       {"kind", e.kind},           {"description", e.description},
       {"span_id", e.span_id}, {"story_time", e.story_time}};
}
inline void from_json(const nlohmann::json& j, EntityRecord& e) {
  j.at("name").get_to(e.name);
  j.at("kind").get_to(e.kind);
  if (!j.at("kind").is_string() ||
      (j.at("kind") != "character" && j.at("kind") != "location" && j.at("kind") != "object")) {
    throw nlohmann::json::type_error::create(302, "unknown entity kind", &j);
  }
  e.description = j.value("description", std::string{});
  j.at("span_id").get_to(e.span_id);
  j.at("story_time").get_to(e.story_time);
}

namespace detail {
inline nlohmann::json names_to_json(const std::vector<std::string>& names) {
  if (names.size() == 1) return names.front();
  return names;
}
inline std::vector<std::string> names_from_json(const nlohmann::json& j) {
  if (j.is_string()) return {j.get<std::string>()};
  return j.get<std::vector<std::string>>();
}
}  // namespace detail

inline void to_json(nlohmann::json& j, const RelationRecord& r) {
  j = {{"subject", detail::names_to_json(r.subjects)},
       {"object", detail::names_to_json(r.objects)},
       {"description", r.description},
       {"span_id", r.span_id},
       {"story_time", r.story_time}};
}
inline void from_json(const nlohmann::json& j, RelationRecord& r) {
  r.subjects = detail::names_from_json(j.at("subject"));
  r.objects = detail::names_from_json(j.at("object"));
  r.description = j.value("description", std::string{});
  j.at("span_id").get_to(r.span_id);
  j.at("story_time").get_to(r.story_time);
}

inline void to_json(nlohmann::json& j, const EventRecord& e) {
  j = {{"title", e.title},
       {"summary", e.summary},
       {"participants", e.participants},
       {"story_time", e.story_time},
       {"span_id", e.span_id}};
}
inline void from_json(const nlohmann::json& j, EventRecord& e) {
  j.at("title").get_to(e.title);
  e.summary = j.value("summary", std::string{});
  e.participants = j.value("participants", std::vector<std::string>{});
  j.at("story_time").get_to(e.story_time);
  j.at("span_id").get_to(e.span_id);
}

inline void to_json(nlohmann::json& j, const BackgroundRecord& b) {
  j = {{"topic", b.topic}, {"description", b.description}};
  if (b.story_time) j["story_time"] = *b.story_time;
}
inline void from_json(const nlohmann::json& j, BackgroundRecord& b) {
  j.at("topic").get_to(b.topic);
  b.description = j.value("description", std::string{});
  if (j.contains("story_time") && !j.at("story_time").is_null()) {
    b.story_time = j.at("story_time").get<Ordinal>();
  } else {
    b.story_time.reset();
  }
}

inline void to_json(nlohmann::json& j, const ExtractionBundle& b) {
  j = {{"profiles", b.profiles}, {"entities", b.entities},     {"relations", b.relations},
       {"events", b.events},     {"background", b.background}, {"timeline", b.timeline}};
}
inline void from_json(const nlohmann::json& j, ExtractionBundle& b) {
  b.profiles = j.value("profiles", std::vector<CharacterProfile>{});
  b.entities = j.value("entities", std::vector<EntityRecord>{});
  b.relations = j.value("relations", std::vector<RelationRecord>{});
  b.events = j.value("events", std::vector<EventRecord>{});
  b.background = j.value("background", std::vector<BackgroundRecord>{});
  j.at("timeline").get_to(b.timeline);
}

}  // namespace diegesis
