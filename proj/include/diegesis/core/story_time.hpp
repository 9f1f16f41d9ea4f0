#pragma once

#include <cstddef>
#include <string>

#include <json.hpp>

namespace diegesis {

// Index into a novel's ordered timeline. Ordinals are dense 0..T-1.
using Ordinal = std::size_t;

// A point on the diegetic timeline. Ordering is by ordinal only.
struct StoryTime {
  Ordinal ordinal = 0;
  std::string label;

  bool operator==(const StoryTime&) const = default;
  auto operator<=>(const StoryTime& other) const { return ordinal <=> other.ordinal; }
};

inline void to_json(nlohmann::json& j, const StoryTime& t) {
  j = nlohmann::json{{"ordinal", t.ordinal}, {"label", t.label}};
}

inline void from_json(const nlohmann::json& j, StoryTime& t) {
  j.at("ordinal").get_to(t.ordinal);
  j.at("label").get_to(t.label);
}

}  // namespace diegesis
