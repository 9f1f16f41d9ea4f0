#pragma once

#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "diegesis/core/clock.hpp"
#include "diegesis/core/error.hpp"
#include "diegesis/graph/io.hpp"
#include "diegesis/retrieval/retrieve.hpp"
#include "diegesis/service/generator.hpp"
#include "diegesis/service/prompt.hpp"
#include "diegesis/service/store.hpp"
#include "diegesis/service/types.hpp"

namespace diegesis {

// One SSE-style event of a turn: "delta", "done" or "error".
struct StreamEvent {
  std::string event;
  nlohmann::json data;
};

using EventSink = std::function<void(const StreamEvent&)>;

// Everything needed to replay one reply's prompt. history_length is the size
// of the session history before the turn's user message was appended.
struct AuditEntry {
  std::string session_id;
  std::string novel_id;
  std::string character;
  Ordinal t_current = 0;
  std::size_t history_length = 0;
  std::string user_text;
  ContextBundle context;
  AssembledPrompt prompt;
  std::string reply;
  std::int64_t latency_ms = 0;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(AuditEntry, session_id, novel_id, character, t_current, history_length,
                                   user_text, context, prompt, reply, latency_ms)

struct TurnOutcome {
  bool committed = false;
  std::vector<Turn> appended;
};

struct ServiceOptions {
  RetrievalConfig retrieval;
  std::size_t default_page_size = 50;
};

inline std::string novel_id_for(const DiegeticGraph& graph) {
  return "novel-" + to_hex(fnv1a64(serialize_graph(graph)), 12);
}

// Session management and turn orchestration. Graphs are immutable once
// registered and shared between sessions. Turns within one session are
// serialized: a second turn arriving while one is in flight is a conflict.
class Service {
 public:
  Service(const Embedder& embedder, AnalyzerClient* analyzer, GeneratorClient& generator, const Clock& clock,
          SessionStore store = SessionStore{}, ServiceOptions options = {})
      : embedder_(embedder),
        analyzer_(analyzer),
        generator_(generator),
        clock_(clock),
        store_(std::move(store)),
        options_(options) {}

  // Reloads novels and sessions persisted by an earlier process.
  void recover() {
    std::unique_lock lock(mu_);
    for (auto& [id, g] : store_.load_novels()) {
      novels_[id] = std::make_shared<const DiegeticGraph>(std::move(g));
    }
    for (auto& [id, s] : store_.recover()) {
      auto slot = std::make_shared<Slot>();
      slot->session = std::move(s);
      next_session_ = std::max(next_session_, session_number(id) + 1);
      sessions_[id] = std::move(slot);
    }
  }

  // Idempotent: the id is a content hash of the serialized graph.
  std::string add_novel(DiegeticGraph graph) {
    const std::string id = novel_id_for(graph);
    std::unique_lock lock(mu_);
    if (!novels_.count(id)) {
      store_.save_novel(id, graph);
      novels_[id] = std::make_shared<const DiegeticGraph>(std::move(graph));
    }
    return id;
  }

  std::vector<std::string> novel_ids() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, g] : novels_) out.push_back(id);
    return out;
  }

  std::shared_ptr<const DiegeticGraph> novel(const std::string& novel_id) const {
    std::shared_lock lock(mu_);
    auto it = novels_.find(novel_id);
    if (it == novels_.end()) fail(ErrorKind::not_found, "unknown novel '" + novel_id + "'");
    return it->second;
  }

  Session create_session(const std::string& novel_id, const std::vector<std::string>& characters, Ordinal t0) {
    const auto graph = novel(novel_id);
    if (characters.empty()) fail(ErrorKind::invalid_argument, "at least one character must be selected");
    for (std::size_t i = 0; i < characters.size(); ++i) {
      if (!graph->find_profile(characters[i])) {
        fail(ErrorKind::not_found, "unknown character '" + characters[i] + "'");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (characters[j] == characters[i]) {
          fail(ErrorKind::invalid_argument, "character '" + characters[i] + "' selected twice");
        }
      }
    }
    check_time(*graph, t0);
    auto slot = std::make_shared<Slot>();
    Session& s = slot->session;
    s.novel_id = novel_id;
    s.selected_characters = characters;
    s.t_current = t0;
    s.created_at = s.updated_at = iso8601_utc(clock_.wall_ms());
    {
      std::unique_lock lock(mu_);
      char buf[16];
      std::snprintf(buf, sizeof buf, "s-%06zu", next_session_++);
      s.session_id = buf;
      store_.record_create(s);
      sessions_[s.session_id] = slot;
    }
    return s;
  }

  Session get_session(const std::string& session_id) const {
    auto slot = find(session_id);
    std::lock_guard data(slot->data);
    return slot->session;
  }

  // Waits for an in-flight turn on the session to finish first.
  Session set_timeline(const std::string& session_id, Ordinal t_new) {
    auto slot = find(session_id);
    std::lock_guard turn(slot->turn);
    const auto graph = novel(get_session(session_id).novel_id);
    check_time(*graph, t_new);
    std::lock_guard data(slot->data);
    slot->session.t_current = t_new;
    slot->session.updated_at = iso8601_utc(clock_.wall_ms());
    store_.record_timeline(slot->session);
    return slot->session;
  }

  // Zero-based pages by turn index. A page past the end is empty.
  HistoryPage get_history(const std::string& session_id, std::size_t page, std::size_t page_size = 0) const {
    if (page_size == 0) page_size = options_.default_page_size;
    auto slot = find(session_id);
    std::lock_guard data(slot->data);
    const auto& h = slot->session.history;
    HistoryPage out;
    out.page = page;
    out.page_size = page_size;
    out.total = h.size();
    if (page < (h.size() + page_size - 1) / page_size) {
      const std::size_t first = page * page_size;
      const std::size_t last = std::min(h.size(), first + page_size);
      out.turns.assign(h.begin() + static_cast<std::ptrdiff_t>(first), h.begin() + static_cast<std::ptrdiff_t>(last));
    }
    return out;
  }

  // Everything that can be rejected without side effects: session, text,
  // story time and target. Returns the characters that will reply, in order.
  std::vector<std::string> validate_turn(const TurnRequest& request) const {
    const Session s = get_session(request.session_id);
    if (text::trim(request.text).empty()) fail(ErrorKind::invalid_argument, "message text is empty");
    const auto graph = novel(s.novel_id);
    check_time(*graph, request.t_current.value_or(s.t_current));
    if (request.target == kGroupTarget) return s.selected_characters;
    for (const auto& c : s.selected_characters) {
      if (c == request.target) return {c};
    }
    fail(ErrorKind::invalid_argument, "target '" + request.target + "' is not a selected character");
  }

  // Runs one turn: for each replying character, retrieve at the turn's story
  // time, assemble its prompt and stream the generator's reply. Characters
  // reply in selection order and all see the same pre-turn history. The turn
  // commits (user message plus every reply, and the request's story time)
  // only if every reply succeeds; the last "done" event follows the commit.
  // Validation failures throw before any event; a busy session throws
  // conflict; retrieval or generator failures end the stream with "error".
  TurnOutcome post_message(const TurnRequest& request, const EventSink& on_event) {
    const auto targets = validate_turn(request);
    auto slot = find(request.session_id);
    std::unique_lock turn(slot->turn, std::try_to_lock);
    if (!turn.owns_lock()) fail(ErrorKind::conflict, "a turn is already in flight for " + request.session_id);

    Session before = get_session(request.session_id);
    before.t_current = request.t_current.value_or(before.t_current);
    const auto graph = novel(before.novel_id);

    std::vector<AuditEntry> entries;
    std::vector<StreamEvent> held;  // "done" events not yet sent
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const std::string& character = targets[i];
      AuditEntry entry;
      entry.session_id = before.session_id;
      entry.novel_id = before.novel_id;
      entry.character = character;
      entry.t_current = before.t_current;
      entry.history_length = before.history.size();
      entry.user_text = request.text;
      const std::int64_t started = clock_.steady_ms();
      try {
        entry.context =
            retrieve(*graph, request.text, before.t_current, character, embedder_, analyzer_, options_.retrieval);
        entry.prompt = assemble_prompt(before, *graph->find_profile(character), entry.context, request.text, *graph);
      } catch (const std::exception& e) {
        send_error(on_event, character, "retrieval", e);
        return {};
      }
      try {
        GenerationRequest g{entry.prompt, before.t_current, entry.context.items.size(), request.text};
        entry.reply = generator_.generate(g, [&](std::string_view chunk) {
          on_event({"delta", {{"character", character}, {"text", std::string(chunk)}}});
        });
      } catch (const std::exception& e) {
        send_error(on_event, character, "generator", e);
        return {};
      }
      entry.latency_ms = clock_.steady_ms() - started;
      StreamEvent done{"done",
                       {{"character", character},
                        {"text", entry.reply},
                        {"latency_ms", entry.latency_ms},
                        {"t_current", before.t_current},
                        {"context_items", entry.context.items.size()},
                        {"reply_index", i},
                        {"reply_count", targets.size()}}};
      entries.push_back(std::move(entry));
      if (i + 1 < targets.size()) {
        on_event(done);
      } else {
        held.push_back(std::move(done));
      }
    }

    TurnOutcome outcome;
    outcome.committed = true;
    outcome.appended.push_back({kUserSpeaker, request.text, before.t_current});
    for (const auto& e : entries) outcome.appended.push_back({e.character, e.reply, before.t_current});
    {
      std::lock_guard data(slot->data);
      Session& s = slot->session;
      s.t_current = before.t_current;
      s.history.insert(s.history.end(), outcome.appended.begin(), outcome.appended.end());
      s.updated_at = iso8601_utc(clock_.wall_ms());
      store_.record_turns(s, outcome.appended);
    }
    {
      std::lock_guard lock(audit_mu_);
      for (auto& e : entries) audit_.push_back(std::move(e));
    }
    for (const auto& ev : held) on_event(ev);
    return outcome;
  }

  std::vector<AuditEntry> audit_log() const {
    std::lock_guard lock(audit_mu_);
    return audit_;
  }

  // Rebuilds the prompt an audit entry recorded, from the session's current
  // history (which only ever grows) and a fresh retrieval.
  AssembledPrompt replay(const AuditEntry& entry) const {
    Session s = get_session(entry.session_id);
    if (entry.history_length > s.history.size()) fail(ErrorKind::conflict, "audit entry is ahead of history");
    s.history.resize(entry.history_length);
    s.t_current = entry.t_current;
    const auto graph = novel(s.novel_id);
    const auto context =
        retrieve(*graph, entry.user_text, entry.t_current, entry.character, embedder_, analyzer_, options_.retrieval);
    return assemble_prompt(s, *graph->find_profile(entry.character), context, entry.user_text, *graph);
  }

  const RetrievalConfig& retrieval_config() const { return options_.retrieval; }

 private:
  struct Slot {
    std::mutex turn;          // held for a whole turn
    mutable std::mutex data;  // guards session
    Session session;
  };

  static void check_time(const DiegeticGraph& graph, Ordinal t) {
    if (!graph.valid_time(t)) {
      fail(ErrorKind::invalid_argument, "story time " + std::to_string(t) + " is outside 0.." +
                                            std::to_string(graph.time_count()) + "-1");
    }
  }

  static std::size_t session_number(const std::string& id) {
    if (id.size() > 2 && id.compare(0, 2, "s-") == 0) {
      try {
        return std::stoul(id.substr(2));
      } catch (const std::exception&) {
      }
    }
    return 0;
  }

  static void send_error(const EventSink& on_event, const std::string& character, const char* stage,
                         const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    on_event({"error",
              {{"character", character},
               {"stage", stage},
               {"kind", err ? to_string(err->kind()) : "remote"},
               {"message", e.what()}}});
  }

  std::shared_ptr<Slot> find(const std::string& session_id) const {
    std::shared_lock lock(mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) fail(ErrorKind::not_found, "unknown session '" + session_id + "'");
    return it->second;
  }

  const Embedder& embedder_;
  AnalyzerClient* analyzer_;
  GeneratorClient& generator_;
  const Clock& clock_;
  SessionStore store_;
  ServiceOptions options_;

  mutable std::shared_mutex mu_;  // guards novels_, sessions_, next_session_
  std::map<std::string, std::shared_ptr<const DiegeticGraph>> novels_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::size_t next_session_ = 1;

  mutable std::mutex audit_mu_;
  std::vector<AuditEntry> audit_;
};

}  // namespace diegesis
