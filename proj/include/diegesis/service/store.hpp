#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "diegesis/core/json_io.hpp"
#include "diegesis/graph/io.hpp"
#include "diegesis/service/types.hpp"

namespace diegesis {

// Session persistence. Each session has an append-only operation log
// "<id>.log" (one JSON object per line) and a snapshot "<id>.snapshot.json"
// recording the session after its first `ops` log lines. Recovery loads the
// snapshot and replays the remaining lines; a torn final line is ignored.
// Without a directory the store is memory-only.
class SessionStore {
 public:
  static constexpr std::size_t kSnapshotEvery = 16;

  explicit SessionStore(std::optional<std::filesystem::path> dir = std::nullopt) : dir_(std::move(dir)) {
    if (dir_) std::filesystem::create_directories(*dir_);
  }

  const std::optional<std::filesystem::path>& directory() const { return dir_; }

  // Graphs live under "novels/<novel_id>.json".
  void save_novel(const std::string& novel_id, const DiegeticGraph& graph) const {
    if (!dir_) return;
    std::filesystem::create_directories(*dir_ / "novels");
    save_graph(graph, *dir_ / "novels" / (novel_id + ".json"));
  }

  std::map<std::string, DiegeticGraph> load_novels() const {
    std::map<std::string, DiegeticGraph> out;
    if (!dir_ || !std::filesystem::exists(*dir_ / "novels")) return out;
    for (const auto& entry : std::filesystem::directory_iterator(*dir_ / "novels")) {
      if (entry.path().extension() != ".json") continue;
      out.emplace(entry.path().stem().string(), load_graph(entry.path()));
    }
    return out;
  }

  void record_create(const Session& s) { append(s, {{"op", "create"}, {"session", s}}); }

  void record_timeline(const Session& s) {
    append(s, {{"op", "timeline"}, {"t", s.t_current}, {"updated_at", s.updated_at}});
  }

  // `turns` are the entries just appended to s.history.
  void record_turns(const Session& s, const std::vector<Turn>& turns) {
    append(s, {{"op", "turns"}, {"turns", turns}, {"t", s.t_current}, {"updated_at", s.updated_at}});
  }

  // Every session found on disk, keyed by id.
  std::map<std::string, Session> recover() const {
    std::map<std::string, Session> out;
    if (!dir_) return out;
    for (const auto& entry : std::filesystem::directory_iterator(*dir_)) {
      const auto& path = entry.path();
      if (path.extension() != ".log") continue;
      const std::string id = path.stem().string();
      if (auto s = recover_one(id)) out.emplace(id, std::move(*s));
    }
    return out;
  }

  std::optional<Session> recover_one(const std::string& id) const {
    if (!dir_) return std::nullopt;
    std::optional<Session> session;
    std::size_t applied = 0;
    const auto snap = *dir_ / (id + ".snapshot.json");
    if (std::filesystem::exists(snap)) {
      const auto j = parse_json(read_file(snap), snap.string());
      session = j.at("session").get<Session>();
      applied = j.at("ops").get<std::size_t>();
    }
    const auto log = *dir_ / (id + ".log");
    if (!std::filesystem::exists(log)) return session;
    const std::string text = read_file(log);
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
      const std::size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) break;  // torn write
      const std::string_view line(text.data() + pos, nl - pos);
      pos = nl + 1;
      if (line_no++ < applied) continue;
      const auto op = nlohmann::json::parse(line, nullptr, false);
      if (op.is_discarded()) fail(ErrorKind::parse, log.string() + ": corrupt line " + std::to_string(line_no));
      apply(session, op);
    }
    return session;
  }

 private:
  static void apply(std::optional<Session>& s, const nlohmann::json& op) {
    const std::string kind = op.at("op").get<std::string>();
    if (kind == "create") {
      s = op.at("session").get<Session>();
      return;
    }
    if (!s) fail(ErrorKind::parse, "session log starts without a create record");
    s->t_current = op.at("t").get<Ordinal>();
    s->updated_at = op.at("updated_at").get<std::string>();
    if (kind == "turns") {
      for (const auto& t : op.at("turns")) s->history.push_back(t.get<Turn>());
    }
  }

  void append(const Session& s, const nlohmann::json& op) {
    if (!dir_) return;
    std::lock_guard lock(*mu_);
    const auto log = *dir_ / (s.session_id + ".log");
    {
      std::ofstream out(log, std::ios::app | std::ios::binary);
      if (!out) fail(ErrorKind::io, "cannot append to " + log.string());
      out << op.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
      out.flush();
      if (!out) fail(ErrorKind::io, "write failed for " + log.string());
    }
    const std::size_t ops = ++op_counts_[s.session_id] + base_counts(s.session_id);
    if (ops % kSnapshotEvery == 0) {
      const nlohmann::json snap = {{"ops", ops}, {"session", s}};
      write_file_atomic(*dir_ / (s.session_id + ".snapshot.json"), canonical_dump(snap));
    }
  }

  // Lines already in the log when this process first touched the session.
  std::size_t base_counts(const std::string& id) {
    auto it = base_.find(id);
    if (it != base_.end()) return it->second;
    std::size_t lines = 0;
    const std::string text = read_file(*dir_ / (id + ".log"));
    for (char c : text) lines += c == '\n';
    // The line just written is counted by op_counts_.
    base_[id] = lines - 1;
    return lines - 1;
  }

  std::optional<std::filesystem::path> dir_;
  std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
  std::map<std::string, std::size_t> op_counts_;
  std::map<std::string, std::size_t> base_;
};

}  // namespace diegesis
