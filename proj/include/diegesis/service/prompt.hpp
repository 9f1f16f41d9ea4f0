#pragma once

#include <string>

#include "diegesis/assets.hpp"
#include "diegesis/core/hash.hpp"
#include "diegesis/core/template.hpp"
#include "diegesis/graph/graph.hpp"
#include "diegesis/ingest/profile_text.hpp"
#include "diegesis/retrieval/retrieve.hpp"
#include "diegesis/service/types.hpp"

namespace diegesis {

inline constexpr std::size_t kPromptHistoryTurns = 12;

// Stable per (novel, character); the serving backend maps it to an adapter.
inline std::string adapter_id(std::string_view novel_id, std::string_view character) {
  std::string key(novel_id);
  key += '\x1f';
  key += character;
  return "adapter-" + to_hex(fnv1a64(key), 12);
}

// Context lines look like "[t=3 CHAPTER IV] node text".
inline std::string context_block(const ContextBundle& context, const DiegeticGraph& graph) {
  std::string out;
  for (const auto& item : context.items) {
    out += "[t=" + std::to_string(item.anchor);
    if (graph.valid_time(item.anchor)) out += " " + graph.story_time(item.anchor).label;
    out += "] " + item.text + "\n";
  }
  return out;
}

inline AssembledPrompt assemble_prompt(const Session& session, const CharacterProfile& profile,
                                       const ContextBundle& context, std::string_view message,
                                       const DiegeticGraph& graph) {
  if (context.t_star != session.t_current) {
    fail(ErrorKind::invalid_argument, "context was retrieved for a different story time");
  }
  AssembledPrompt p;
  p.character = profile.canonical_name;
  p.adapter_id = adapter_id(session.novel_id, profile.canonical_name);
  const std::string label = graph.valid_time(session.t_current) ? graph.story_time(session.t_current).label : "";
  p.system_block = fill_template(assets::generator_system_v1_txt,
                                 {{"character", profile.canonical_name}, {"time_label", label}});
  p.system_block += "\n" + render_profile(profile, session.t_current) + "Adapter: " + p.adapter_id + "\n";
  p.context_block = context_block(context, graph);
  const std::size_t n = session.history.size();
  const std::size_t first = n > kPromptHistoryTurns ? n - kPromptHistoryTurns : 0;
  for (std::size_t i = first; i < n; ++i) {
    p.history_block += session.history[i].speaker + ": " + session.history[i].text + "\n";
  }
  p.user_block = std::string(message) + "\n";
  return p;
}

}  // namespace diegesis
