#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "diegesis/core/parallel.hpp"
#include "diegesis/eval/suite.hpp"
#include "diegesis/retrieval/retrieve.hpp"

namespace diegesis {

struct GateViolation {
  std::size_t item = 0;
  std::string item_id;
  Ordinal anchor = 0;
  Ordinal t = 0;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GateViolation, item, item_id, anchor, t)

struct GateAuditResult {
  std::size_t items_checked = 0;
  std::size_t retrieved = 0;
  std::vector<GateViolation> violations;

  std::size_t count() const { return violations.size(); }
};

inline void to_json(nlohmann::json& j, const GateAuditResult& r) {
  j = {{"items_checked", r.items_checked},
       {"retrieved", r.retrieved},
       {"violation_count", r.violations.size()},
       {"violations", r.violations}};
}

// Runs retrieval for each item at its story time and re-checks every returned
// id against the graph's own anchors, independent of the anchors the
// retrieval layer reports. Any item anchored after t is a violation.
inline GateAuditResult gate_audit(const DiegeticGraph& graph, const EvalSuite& suite, const std::string& character,
                                  const Embedder& embedder, AnalyzerClient* analyzer = nullptr,
                                  const RetrievalConfig& config = {}, std::size_t parallelism = 1) {
  const auto per_item = parallel_map(suite.items.size(), parallelism, [&](std::size_t i) {
    const auto& item = suite.items[i];
    const auto bundle = retrieve(graph, item.question, item.t, character, embedder, analyzer, config);
    std::pair<std::size_t, std::vector<GateViolation>> out{bundle.items.size(), {}};
    for (const auto& s : bundle.items) {
      const auto anchor = graph.anchor_of(s.item_id);
      if (!anchor) fail(ErrorKind::build, "retrieved unknown item '" + s.item_id + "'");
      if (*anchor > item.t || s.anchor > item.t) out.second.push_back({i, s.item_id, *anchor, item.t});
    }
    return out;
  });
  GateAuditResult result;
  result.items_checked = suite.items.size();
  for (const auto& [n, v] : per_item) {
    result.retrieved += n;
    result.violations.insert(result.violations.end(), v.begin(), v.end());
  }
  return result;
}

}  // namespace diegesis
