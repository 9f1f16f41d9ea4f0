#pragma once

#include <map>
#include <set>
#include <string>

#include "diegesis/core/error.hpp"
#include "diegesis/core/text.hpp"
#include "diegesis/ingest/types.hpp"

namespace diegesis {

// Folded alias (or canonical name) -> owning canonical names. More than one
// owner means the profiles violate alias disjointness.
using AliasIndex = std::map<std::string, std::set<std::string>>;

inline AliasIndex build_alias_index(const std::vector<CharacterProfile>& profiles) {
  AliasIndex index;
  for (const auto& p : profiles) {
    index[text::fold_key(p.canonical_name)].insert(p.canonical_name);
    for (const auto& a : p.aliases) index[text::fold_key(a)].insert(p.canonical_name);
  }
  return index;
}

// Canonical name for a mention, or the mention unchanged when it is not an
// alias. Matching is case-insensitive on the whitespace-normalized string.
inline std::string resolve_alias(const AliasIndex& index, const std::string& mention) {
  const auto it = index.find(text::fold_key(mention));
  if (it == index.end()) return mention;
  if (it->second.size() > 1) {
    std::string owners;
    for (const auto& o : it->second) owners += (owners.empty() ? "" : ", ") + o;
    fail(ErrorKind::invalid_argument,
         "alias conflict: '" + mention + "' belongs to several profiles: " + owners);
  }
  return *it->second.begin();
}

// Rewrites every entity, relation, event and relationship mention to its
// canonical name. Idempotent; record counts are unchanged.
inline ExtractionBundle normalize_aliases(ExtractionBundle bundle) {
  const AliasIndex index = build_alias_index(bundle.profiles);
  for (auto& e : bundle.entities) e.name = resolve_alias(index, e.name);
  for (auto& r : bundle.relations) {
    for (auto& s : r.subjects) s = resolve_alias(index, s);
    for (auto& o : r.objects) o = resolve_alias(index, o);
  }
  for (auto& ev : bundle.events) {
    for (auto& p : ev.participants) p = resolve_alias(index, p);
  }
  for (auto& p : bundle.profiles) {
    for (auto& rel : p.relationships) {
      rel.other_canonical_name = resolve_alias(index, rel.other_canonical_name);
    }
  }
  return bundle;
}

}  // namespace diegesis
