#pragma once

#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "diegesis/core/parallel.hpp"
#include "diegesis/eval/judge.hpp"
#include "diegesis/eval/suite.hpp"
#include "diegesis/remote/client.hpp"
#include "diegesis/service/service.hpp"

namespace diegesis {

// The system under evaluation: answers one question as `character` at story
// time t, each call in a fresh conversation. Throws on failure. Must be safe
// for concurrent use.
class EvalSystem {
 public:
  virtual ~EvalSystem() = default;
  virtual std::string answer(const std::string& question, Ordinal t, const std::string& character) = 0;
};

// Drives an in-process Service through its session API.
class ServiceSystem : public EvalSystem {
 public:
  ServiceSystem(Service& service, std::string novel_id) : service_(service), novel_id_(std::move(novel_id)) {}

  std::string answer(const std::string& question, Ordinal t, const std::string& character) override {
    const Session s = service_.create_session(novel_id_, {character}, t);
    std::string error;
    const auto out = service_.post_message({s.session_id, question, std::nullopt, character},
                                           [&](const StreamEvent& e) {
                                             if (e.event == "error") error = e.data.value("message", "error");
                                           });
    if (!out.committed) fail(ErrorKind::remote, error.empty() ? "turn failed" : error);
    return out.appended.back().text;
  }

 private:
  Service& service_;
  std::string novel_id_;
};

// Drives a running server over its HTTP API. With an empty novel id the
// server must host exactly one novel.
class HttpSystem : public EvalSystem {
 public:
  HttpSystem(std::string base_url, std::string novel_id, std::chrono::seconds timeout = std::chrono::seconds(120))
      : novel_id_(std::move(novel_id)), timeout_(timeout) {
    if (remote::is_offline() && base_url.find("://127.0.0.1") == std::string::npos &&
        base_url.find("://localhost") == std::string::npos) {
      fail(ErrorKind::config, "offline runs may only evaluate a loopback server");
    }
    const auto split = remote::detail::split_url(base_url);
    origin_ = split.origin;
    prefix_ = split.prefix;
  }

  std::string answer(const std::string& question, Ordinal t, const std::string& character) override {
    const std::string novel = resolve_novel();
    const auto session =
        call("POST", "/api/sessions", {{"novel_id", novel}, {"characters", {character}}, {"t0", t}}, 201);
    const std::string sid = session.at("session_id");
    auto client = make_client();
    httplib::Request req;
    req.method = "POST";
    req.path = prefix_ + "/api/sessions/" + sid + "/messages";
    req.body = nlohmann::json{{"text", question}, {"target", character}}.dump();
    req.set_header("Content-Type", "application/json");
    remote::SseParser parser;
    std::string done, error;
    req.content_receiver = [&](const char* data, std::size_t len, std::uint64_t, std::uint64_t) {
      for (const auto& ev : parser.feed(std::string_view(data, len))) {
        const auto j = nlohmann::json::parse(ev.data, nullptr, false);
        if (ev.event == "done" && j.is_object()) done = j.value("text", "");
        if (ev.event == "error") error = j.is_object() ? j.value("message", ev.data) : ev.data;
      }
      return true;
    };
    auto res = client.send(req);
    if (!res) fail(ErrorKind::remote, "request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) fail(ErrorKind::remote, "server returned HTTP " + std::to_string(res->status));
    if (!error.empty()) fail(ErrorKind::remote, error);
    return done;
  }

 private:
  httplib::Client make_client() const {
    httplib::Client c(origin_);
    c.set_connection_timeout(timeout_);
    c.set_read_timeout(timeout_);
    return c;
  }

  nlohmann::json call(const std::string& method, const std::string& path, const nlohmann::json& body,
                      int expect) const {
    auto client = make_client();
    auto res = method == "GET" ? client.Get(prefix_ + path)
                               : client.Post(prefix_ + path, body.dump(), "application/json");
    if (!res) fail(ErrorKind::remote, "request failed: " + httplib::to_string(res.error()));
    if (res->status != expect) {
      fail(ErrorKind::remote, method + " " + path + " returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    return parse_json(res->body, "server reply");
  }

  std::string resolve_novel() {
    std::lock_guard lock(mu_);
    if (novel_id_.empty()) {
      const auto novels = call("GET", "/api/novels", {}, 200).at("novels");
      if (novels.size() != 1) fail(ErrorKind::config, "server hosts " + std::to_string(novels.size()) + " novels; pass one");
      novel_id_ = novels[0].get<std::string>();
    }
    return novel_id_;
  }

  std::string origin_, prefix_;
  std::string novel_id_;
  std::chrono::seconds timeout_;
  std::mutex mu_;
};

struct ItemResult {
  std::size_t index = 0;
  std::string question;
  Ordinal t = 0;
  std::string reply;
  Verdict verdict;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ItemResult, index, question, t, reply, verdict)

struct EvalReport {
  EvalKind kind = EvalKind::rt;
  std::string system;
  std::string character;
  std::string judge;
  std::vector<ItemResult> items;
  std::size_t correct = 0;
  double score = 0;  // 100 * correct / size; equals correct when size is 100
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EvalReport, kind, system, character, judge, items, correct, score)

inline std::string serialize_report(const EvalReport& r) { return canonical_dump(nlohmann::json(r)) + "\n"; }

inline constexpr const char* kSystemError = "system_error";

// Asks every item (at most `parallelism` at once) and judges the replies.
// Results keep item order. A failing system scores the item 0 with rationale
// "system_error"; a failing judge does the same with "judge_error".
inline EvalReport run_suite(const EvalSuite& suite, EvalSystem& system, const std::string& character,
                            JudgeClient& judge, const std::string& system_label, std::size_t parallelism = 1) {
  if (suite.items.empty()) fail(ErrorKind::invalid_argument, "empty suite");
  EvalReport report;
  report.kind = suite.kind;
  report.system = system_label;
  report.character = character;
  report.judge = judge.name();
  report.items = parallel_map(suite.items.size(), parallelism, [&](std::size_t i) {
    const auto& item = suite.items[i];
    ItemResult r{i, item.question, item.t, {}, {}};
    try {
      r.reply = system.answer(item.question, item.t, character);
    } catch (const std::exception&) {
      r.verdict = {0, kSystemError};
      return r;
    }
    try {
      r.verdict = judge.judge(suite.kind, item, character, r.reply);
    } catch (const std::exception& e) {
      r.verdict = {0, std::string("judge_error: ") + e.what()};
    }
    return r;
  });
  for (const auto& r : report.items) report.correct += static_cast<std::size_t>(r.verdict.score);
  report.score = 100.0 * static_cast<double>(report.correct) / static_cast<double>(report.items.size());
  return report;
}

}  // namespace diegesis
