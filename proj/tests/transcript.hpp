#pragma once

#include <optional>
#include <string>
#include <vector>

#include "diegesis/graph/build.hpp"
#include "diegesis/retrieval/embedder.hpp"
#include "diegesis/service/service.hpp"
#include "fixtures.hpp"

namespace diegesis::testing {

struct Transcript {
  std::string prompts;  // every assembled prompt, rendered, in audit order
  std::string history;  // canonical JSON of the final session
  std::string events;   // every stream event, one JSON line each
  std::vector<AuditEntry> audit;
  std::vector<AssembledPrompt> replayed;
};

// Offline scripted session on the Verne fixture: Nemo and Aronnax selected
// at t=0, slider moved to 5, then three messages, the second a group turn.
inline Transcript run_scripted_transcript(std::optional<std::filesystem::path> store_dir = std::nullopt) {
  const HashTrigramEmbedder embedder;
  EchoGenerator generator;
  ManualClock clock(1767225600000);  // 2026-01-01T00:00:00Z
  Service service(embedder, nullptr, generator, clock, SessionStore(store_dir));
  const std::string novel = service.add_novel(build_graph(verne_bundle()));
  const Session s = service.create_session(novel, {"Captain Nemo", "Professor Aronnax"}, 0);
  clock.advance(1000);
  service.set_timeline(s.session_id, 5);

  Transcript out;
  auto record = [&](const StreamEvent& ev) {
    out.events += nlohmann::json{{"event", ev.event}, {"data", ev.data}}.dump() + "\n";
  };
  const std::vector<TurnRequest> turns = {
      {s.session_id, "What happened aground at Vanikoro?", std::nullopt, "Captain Nemo"},
      {s.session_id, "Tell me about the coral cemetery and Ned Land.", std::nullopt, kGroupTarget},
      {s.session_id, "Where is the South Pole flag?", Ordinal{3}, "Captain Nemo"},
  };
  for (const auto& t : turns) {
    clock.advance(1000);
    service.post_message(t, record);
  }
  out.audit = service.audit_log();
  for (const auto& e : out.audit) {
    out.prompts += "=== " + e.character + " @ t=" + std::to_string(e.t_current) + "\n" + e.prompt.render();
    out.replayed.push_back(service.replay(e));
  }
  out.history = canonical_dump(nlohmann::json(service.get_session(s.session_id))) + "\n";
  return out;
}

}  // namespace diegesis::testing
