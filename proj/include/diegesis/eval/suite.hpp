#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "diegesis/alignment/generate.hpp"
#include "diegesis/alignment/ood_bank.hpp"
#include "diegesis/core/json_io.hpp"
#include "diegesis/core/rng.hpp"
#include "diegesis/core/text.hpp"
#include "diegesis/graph/graph.hpp"

namespace diegesis {

// RT: robustness against frame-breaking requests. TT: timeline coherence,
// questions about events after the conversation's story time.
enum class EvalKind { rt, tt };

NLOHMANN_JSON_SERIALIZE_ENUM(EvalKind, {{EvalKind::rt, "RT"}, {EvalKind::tt, "TT"}})

inline constexpr std::size_t kDefaultSuiteSize = 100;

struct EvalItem {
  std::string question;
  Ordinal t = 0;                         // story time the question is asked at
  std::optional<Ordinal> target_anchor;  // TT only, > t
  std::string target_id;                 // TT only: the future event node
  std::vector<std::string> target_keywords;  // TT only: leak markers
  std::optional<std::size_t> bank_index;     // RT only

  bool operator==(const EvalItem&) const = default;
};

inline void to_json(nlohmann::json& j, const EvalItem& i) {
  j = {{"question", i.question}, {"t", i.t}};
  if (i.target_anchor) {
    j["target_anchor"] = *i.target_anchor;
    j["target_id"] = i.target_id;
    j["target_keywords"] = i.target_keywords;
  }
  if (i.bank_index) j["bank_index"] = *i.bank_index;
}

inline void from_json(const nlohmann::json& j, EvalItem& i) {
  j.at("question").get_to(i.question);
  j.at("t").get_to(i.t);
  if (j.contains("target_anchor")) {
    i.target_anchor = j.at("target_anchor").get<Ordinal>();
    j.at("target_id").get_to(i.target_id);
    j.at("target_keywords").get_to(i.target_keywords);
  }
  if (j.contains("bank_index")) i.bank_index = j.at("bank_index").get<std::size_t>();
}

struct EvalSuite {
  EvalKind kind = EvalKind::rt;
  std::uint64_t seed = 0;
  std::vector<EvalItem> items;

  bool operator==(const EvalSuite&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EvalSuite, kind, seed, items)

inline std::string serialize_suite(const EvalSuite& s) { return canonical_dump(nlohmann::json(s)) + "\n"; }

inline EvalSuite parse_suite(std::string_view text) { return decode_json<EvalSuite>(parse_json(text, "suite"), "suite"); }

namespace detail {

inline std::set<std::string> content_words(std::string_view s) {
  std::set<std::string> out;
  for (auto w : text::words(s)) {
    const std::string lw = text::to_lower(w);
    if (lw.size() > 2 && !text::is_stopword(lw)) out.insert(lw);
  }
  return out;
}

// Words of the target event that no graph text visible at t contains and the
// question does not contain. Mentioning one means the reply knows the future.
// Falls back to the event's words minus the question's when that is empty.
inline std::vector<std::string> leak_keywords(const DiegeticGraph& g, const GraphNode& event, Ordinal t,
                                              std::string_view question) {
  const auto asked = content_words(question);
  std::set<std::string> visible;
  auto see = [&](const std::string& s) {
    for (const auto& w : content_words(s)) visible.insert(w);
  };
  for (const auto& n : g.nodes()) {
    if (!n.anchor || *n.anchor <= t) see(n.name + " " + n.description);
    for (const auto& f : n.facets) {
      if (f.anchor <= t) see(f.description);
    }
  }
  for (const auto& e : g.edges()) {
    if (e.anchor <= t) see(e.description);
  }
  const auto own = content_words(event.name + " " + event.description);
  std::vector<std::string> strict, loose;
  for (const auto& w : own) {
    if (asked.count(w)) continue;
    loose.push_back(w);
    if (!visible.count(w)) strict.push_back(w);
  }
  return strict.empty() ? loose : strict;
}

}  // namespace detail

// n questions about events anchored after t_fixed. Events are taken in a
// seeded order; when there are fewer than n, they repeat with the next
// phrasing. No future events at all is an error.
inline EvalSuite make_tt_suite(const DiegeticGraph& g, Ordinal t_fixed, std::size_t n, std::uint64_t seed) {
  if (!g.valid_time(t_fixed)) fail(ErrorKind::invalid_argument, "t_fixed is outside the timeline");
  std::vector<const GraphNode*> future;
  for (const GraphNode* e : detail::event_nodes(g)) {
    if (*e->anchor > t_fixed) future.push_back(e);
  }
  if (future.empty()) {
    fail(ErrorKind::invalid_argument, "no events after t=" + std::to_string(t_fixed) + " to ask about");
  }
  SeededStream rng(seed);
  for (std::size_t i = future.size(); i > 1; --i) std::swap(future[i - 1], future[rng.index(i)]);
  EvalSuite suite;
  suite.kind = EvalKind::tt;
  suite.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    const GraphNode& e = *future[i % future.size()];
    EvalItem item;
    item.question = event_question(e.name, i / future.size() + seed);
    item.t = t_fixed;
    item.target_anchor = *e.anchor;
    item.target_id = e.node_id;
    item.target_keywords = detail::leak_keywords(g, e, t_fixed, item.question);
    suite.items.push_back(std::move(item));
  }
  return suite;
}

// n frame-breaking questions from the bundled bank, asked at story time t.
// The full bank keeps its order; a smaller n is a seeded sample in bank order.
inline EvalSuite make_rt_suite(std::size_t n, std::uint64_t seed, Ordinal t = 0) {
  const auto& bank = ood_bank();
  if (n > bank.size()) {
    fail(ErrorKind::invalid_argument, "the question bank holds " + std::to_string(bank.size()) + " items");
  }
  std::vector<std::size_t> idx(bank.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  SeededStream rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  EvalSuite suite;
  suite.kind = EvalKind::rt;
  suite.seed = seed;
  for (std::size_t i : idx) suite.items.push_back({bank[i].question, t, std::nullopt, {}, {}, i});
  return suite;
}

// Every violated suite invariant, in item order. With a graph, TT targets are
// checked against it.
inline std::vector<std::string> check_suite(const EvalSuite& s, const DiegeticGraph* g = nullptr) {
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    const auto& it = s.items[i];
    const std::string at = "items[" + std::to_string(i) + "]: ";
    if (text::trim(it.question).empty()) problems.push_back(at + "empty question");
    if (g && !g->valid_time(it.t)) problems.push_back(at + "t outside the timeline");
    if (s.kind == EvalKind::tt) {
      if (!it.target_anchor) {
        problems.push_back(at + "TT item without target_anchor");
        continue;
      }
      if (*it.target_anchor <= it.t) problems.push_back(at + "target_anchor is not after t");
      if (it.target_keywords.empty()) problems.push_back(at + "no leak keywords");
      if (g) {
        const auto anchor = g->anchor_of(it.target_id);
        if (!anchor || *anchor != *it.target_anchor) problems.push_back(at + "target does not match the graph");
      }
    } else {
      if (it.target_anchor) problems.push_back(at + "RT item with a target");
      if (!it.bank_index || *it.bank_index >= ood_bank().size()) problems.push_back(at + "not from the bank");
    }
  }
  return problems;
}

}  // namespace diegesis
