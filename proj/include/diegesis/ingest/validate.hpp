#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "diegesis/core/text.hpp"
#include "diegesis/ingest/report.hpp"
#include "diegesis/ingest/types.hpp"

namespace diegesis {

namespace detail {

inline std::string locator(const char* kind, std::size_t index) {
  return std::string(kind) + "[" + std::to_string(index) + "]";
}

}  // namespace detail

// Checks every bundle invariant. Issues are ordered by record kind
// (profiles, timeline, entities, relations, events, background) and then by
// index. When span_ids is given, record span references are checked too.
inline ValidationReport validate_bundle(const ExtractionBundle& bundle,
                                        const std::optional<std::set<std::string>>& span_ids = std::nullopt) {
  ValidationReport report;
  auto error = [&](std::string loc, std::string rule, std::string msg) {
    report.errors.push_back({std::move(loc), std::move(rule), std::move(msg)});
  };
  auto warn = [&](std::string loc, std::string rule, std::string msg) {
    report.warnings.push_back({std::move(loc), std::move(rule), std::move(msg)});
  };
  const std::size_t T = bundle.timeline.size();
  auto time_ok = [&](Ordinal t) { return t < T; };

  // profiles
  std::map<std::string, std::size_t> owner;  // folded alias or name -> profile index
  std::set<std::string> canonical;
  for (std::size_t i = 0; i < bundle.profiles.size(); ++i) {
    const auto& p = bundle.profiles[i];
    const auto loc = detail::locator("profiles", i);
    const auto name_key = text::fold_key(p.canonical_name);
    if (name_key.empty()) error(loc, "empty_name", "profile has an empty canonical_name");
    if (!canonical.insert(name_key).second) {
      error(loc, "duplicate_profile", "canonical_name '" + p.canonical_name + "' appears twice");
    }
    for (const auto& a : p.aliases) {
      if (text::fold_key(a) == name_key) {
        error(loc, "alias_is_canonical", "alias '" + a + "' equals the canonical_name");
      }
    }
  }
  for (std::size_t i = 0; i < bundle.profiles.size(); ++i) {
    const auto& p = bundle.profiles[i];
    const auto loc = detail::locator("profiles", i);
    std::set<std::string> keys{text::fold_key(p.canonical_name)};
    for (const auto& a : p.aliases) keys.insert(text::fold_key(a));
    for (const auto& k : keys) {
      auto [it, inserted] = owner.emplace(k, i);
      if (!inserted && it->second != i) {
        error(loc, "alias_conflict",
              "name or alias '" + k + "' is also claimed by profiles[" + std::to_string(it->second) + "]");
      }
    }
    for (std::size_t d = 0; d < p.drives.size(); ++d) {
      if (!time_ok(p.drives[d].valid_from)) {
        error(loc, "unknown_story_time", "drive " + std::to_string(d) + " has valid_from " +
                                             std::to_string(p.drives[d].valid_from) + " outside the timeline");
      }
      if (d > 0 && p.drives[d].valid_from < p.drives[d - 1].valid_from) {
        error(loc, "drives_unsorted", "drives are not sorted by valid_from");
      }
    }
  }
  for (std::size_t i = 0; i < bundle.profiles.size(); ++i) {
    for (const auto& r : bundle.profiles[i].relationships) {
      if (!canonical.count(text::fold_key(r.other_canonical_name))) {
        error(detail::locator("profiles", i), "dangling_relationship",
              "relationship names unknown character '" + r.other_canonical_name + "'");
      }
    }
    if (bundle.profiles[i].core_attributes.empty()) {
      warn(detail::locator("profiles", i), "no_attributes", "profile lists no core attributes");
    }
  }

  // timeline
  std::set<std::string> labels;
  for (std::size_t i = 0; i < T; ++i) {
    const auto& st = bundle.timeline[i];
    const auto loc = detail::locator("timeline", i);
    if (st.ordinal != i) {
      error(loc, "timeline_not_dense",
            "ordinal " + std::to_string(st.ordinal) + " at position " + std::to_string(i));
    }
    if (!labels.insert(st.label).second) error(loc, "duplicate_label", "label '" + st.label + "' repeats");
  }

  auto span_ok = [&](const std::string& id) { return !span_ids || span_ids->count(id) > 0; };

  // entities
  std::set<std::string> entity_names;
  for (std::size_t i = 0; i < bundle.entities.size(); ++i) {
    const auto& e = bundle.entities[i];
    const auto loc = detail::locator("entities", i);
    if (text::trim(e.name).empty()) error(loc, "empty_name", "entity has an empty name");
    if (!time_ok(e.story_time)) {
      error(loc, "unknown_story_time", "story_time " + std::to_string(e.story_time) + " is not on the timeline");
    }
    if (!span_ok(e.span_id)) error(loc, "unknown_span", "span_id '" + e.span_id + "' was not ingested");
    entity_names.insert(text::fold_key(e.name));
  }

  // relations
  for (std::size_t i = 0; i < bundle.relations.size(); ++i) {
    const auto& r = bundle.relations[i];
    const auto loc = detail::locator("relations", i);
    if (!r.is_binary()) {
      error(loc, "relation_not_binary",
            "relation not binary: " + std::to_string(r.subjects.size()) + " subject(s), " +
                std::to_string(r.objects.size()) + " object(s)");
    } else {
      for (const auto* end : {&r.subject(), &r.object()}) {
        if (!entity_names.count(text::fold_key(*end))) {
          error(loc, "dangling_reference", "relation endpoint '" + *end + "' is not an entity");
        }
      }
      if (text::fold_key(r.subject()) == text::fold_key(r.object())) {
        error(loc, "self_relation", "relation links '" + r.subject() + "' to itself");
      }
    }
    if (!time_ok(r.story_time)) {
      error(loc, "unknown_story_time", "story_time " + std::to_string(r.story_time) + " is not on the timeline");
    }
    if (!span_ok(r.span_id)) error(loc, "unknown_span", "span_id '" + r.span_id + "' was not ingested");
  }

  // events
  for (std::size_t i = 0; i < bundle.events.size(); ++i) {
    const auto& ev = bundle.events[i];
    const auto loc = detail::locator("events", i);
    if (text::trim(ev.title).empty()) error(loc, "empty_title", "event has an empty title");
    for (const auto& p : ev.participants) {
      if (!entity_names.count(text::fold_key(p))) {
        error(loc, "dangling_reference", "participant '" + p + "' is not an entity");
      }
    }
    if (!time_ok(ev.story_time)) {
      error(loc, "unknown_story_time", "story_time " + std::to_string(ev.story_time) + " is not on the timeline");
    }
    if (!span_ok(ev.span_id)) error(loc, "unknown_span", "span_id '" + ev.span_id + "' was not ingested");
    if (ev.participants.empty()) warn(loc, "no_participants", "event lists no participants");
  }

  // background
  for (std::size_t i = 0; i < bundle.background.size(); ++i) {
    const auto& b = bundle.background[i];
    const auto loc = detail::locator("background", i);
    if (text::trim(b.topic).empty()) error(loc, "empty_topic", "background fact has an empty topic");
    if (b.story_time && !time_ok(*b.story_time)) {
      error(loc, "unknown_story_time", "story_time " + std::to_string(*b.story_time) + " is not on the timeline");
    }
    if (!b.story_time && T == 0) {
      error(loc, "unknown_story_time", "background needs a timeline to anchor to");
    }
  }
  return report;
}

}  // namespace diegesis
