#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "diegesis/core/story_time.hpp"

namespace diegesis {

inline constexpr const char* kUserSpeaker = "user";
inline constexpr const char* kGroupTarget = "group";

struct Turn {
  std::string speaker;  // "user" or a selected character
  std::string text;
  Ordinal t_at_send = 0;

  bool operator==(const Turn&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Turn, speaker, text, t_at_send)

struct Session {
  std::string session_id;
  std::string novel_id;
  std::vector<std::string> selected_characters;
  Ordinal t_current = 0;
  std::vector<Turn> history;  // append-only
  std::string created_at;
  std::string updated_at;

  bool operator==(const Session&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Session, session_id, novel_id, selected_characters, t_current, history,
                                   created_at, updated_at)

struct TurnRequest {
  std::string session_id;
  std::string text;
  std::optional<Ordinal> t_current;  // slider position; session's own when absent
  std::string target = kGroupTarget;  // a selected character or "group"
};

inline void from_json(const nlohmann::json& j, TurnRequest& r) {
  if (j.contains("session_id")) j.at("session_id").get_to(r.session_id);
  j.at("text").get_to(r.text);
  if (j.contains("t_current") && !j.at("t_current").is_null()) r.t_current = j.at("t_current").get<Ordinal>();
  r.target = j.value("target", std::string(kGroupTarget));
}

// Fixed block order: system, context, history, user.
struct AssembledPrompt {
  std::string character;
  std::string adapter_id;
  std::string system_block;
  std::string context_block;
  std::string history_block;
  std::string user_block;

  bool operator==(const AssembledPrompt&) const = default;

  std::string render() const {
    return "### system\n" + system_block + "\n### context\n" + context_block + "\n### history\n" + history_block +
           "\n### user\n" + user_block + "\n";
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(AssembledPrompt, character, adapter_id, system_block, context_block,
                                   history_block, user_block)

struct HistoryPage {
  std::vector<Turn> turns;
  std::size_t page = 0;
  std::size_t page_size = 0;
  std::size_t total = 0;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(HistoryPage, turns, page, page_size, total)

}  // namespace diegesis
