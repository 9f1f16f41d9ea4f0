#pragma once

#include <string>
#include <vector>

#include "diegesis/core/json_io.hpp"
#include "diegesis/ingest/types.hpp"

namespace diegesis::testing {

inline std::string samples_path(const std::string& name) {
  return std::string(DIEGESIS_SAMPLES_DIR) + "/" + name;
}

inline std::vector<CharacterProfile> sample_profiles() {
  return parse_json(read_file(samples_path("nautilus_profiles.json")), "profiles")
      .get<std::vector<CharacterProfile>>();
}

// Three timeline points, two entities, one relation.
inline ExtractionBundle tiny_bundle() {
  ExtractionBundle b;
  b.timeline = {{0, "departure"}, {1, "collision"}, {2, "capture"}};
  b.entities = {
      {"Professor Aronnax", EntityKind::character, "a naturalist", "c000-s000", 0},
      {"Nautilus", EntityKind::object, "a submarine vessel", "c001-s000", 1},
  };
  b.relations = {{{"Professor Aronnax"}, {"Nautilus"}, "Aronnax is taken aboard the Nautilus", "c002-s000", 2}};
  return b;
}

// Ten-point timeline with profiles, parallel Nemo edges at t = 0, 1, 2, an
// entity whose later facets appear at t = 2 and t = 9, and one event per
// anchor in {1, 3, 5, 7, 9}.
inline ExtractionBundle verne_bundle() {
  ExtractionBundle b;
  b.profiles = sample_profiles();
  for (Ordinal t = 0; t < 10; ++t) b.timeline.push_back({t, "moment " + std::to_string(t)});
  b.entities = {
      {"Captain Nemo", EntityKind::character, "commander of the Nautilus", "s0", 0},
      {"Professor Aronnax", EntityKind::character, "a naturalist from Paris", "s0", 0},
      {"Conseil", EntityKind::character, "servant to the professor", "s0", 0},
      {"Ned Land", EntityKind::character, "a Canadian harpooner", "s1", 1},
      {"Nautilus", EntityKind::object, "an electric submarine", "s1", 1},
      {"Captain Nemo", EntityKind::character, "buries his crewman in a coral cemetery", "s2", 2},
      {"Captain Nemo", EntityKind::character, "vanishes into the maelstrom", "s9", 9},
      {"Vanikoro", EntityKind::location, "reef island where the Nautilus runs aground", "s5", 5},
  };
  b.relations = {
      {{"Captain Nemo"}, {"Professor Aronnax"}, "Nemo imprisons the professor aboard his ship", "s0", 0},
      {{"Captain Nemo"}, {"Nautilus"}, "Nemo commands the Nautilus", "s1", 1},
      {{"Captain Nemo"}, {"Ned Land"}, "Nemo and Ned Land quarrel bitterly", "s2", 2},
      {{"Conseil"}, {"Professor Aronnax"}, "Conseil serves the professor loyally", "s0", 0},
      {{"Ned Land"}, {"Nautilus"}, "Ned Land escapes from the Nautilus", "s9", 9},
  };
  b.events = {
      {"The frigate hunts the monster", "The Abraham Lincoln chases a glowing sea creature", {"Ned Land"}, 1, "s1"},
      {"The coral cemetery", "Nemo buries a fallen sailor beneath the coral", {"Captain Nemo", "Conseil"}, 3, "s3"},
      {"Aground at Vanikoro", "The Nautilus runs aground at Vanikoro and islanders attack", {"Captain Nemo"}, 5, "s5"},
      {"The South Pole flag", "Nemo plants a black flag at the South Pole", {"Captain Nemo", "Professor Aronnax"}, 7, "s7"},
      {"Escape in the maelstrom", "The prisoners flee as the Nautilus sinks into the maelstrom", {"Ned Land", "Conseil"}, 9, "s9"},
  };
  b.background = {
      {"Electricity", "The Nautilus runs entirely on electricity drawn from the sea", std::nullopt},
      {"The sea creature rumours", "Ships report a glowing monster", Ordinal{1}},
  };
  return b;
}

}  // namespace diegesis::testing
