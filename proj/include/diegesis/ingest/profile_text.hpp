#pragma once

#include <string>

#include "diegesis/core/text.hpp"
#include "diegesis/ingest/types.hpp"

namespace diegesis {

// Plain-text persona card as seen at story time t. Only the drive in force at
// t is shown, so later character development never leaks into a prompt.
inline std::string render_profile(const CharacterProfile& p, Ordinal t) {
  std::string out = "Name: " + p.canonical_name + "\n";
  if (!p.aliases.empty()) out += "Also called: " + text::join(p.aliases, ", ") + "\n";
  if (!p.origin.empty()) out += "Origin: " + p.origin + "\n";
  if (!p.core_attributes.empty()) out += "Traits: " + text::join(p.core_attributes, ", ") + "\n";
  if (const Drive* d = p.drive_at(t)) out += "Current drive: " + d->description + "\n";
  for (const auto& r : p.relationships) {
    out += "Relationship with " + r.other_canonical_name + ": " + r.nature;
    if (!r.dynamics.empty()) out += " (" + r.dynamics + ")";
    out += "\n";
  }
  return out;
}

}  // namespace diegesis
