#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "diegesis/alignment/types.hpp"
#include "diegesis/core/json_io.hpp"
#include "diegesis/core/text.hpp"
#include "diegesis/core/utf8.hpp"
#include "diegesis/grpo/scored_group.hpp"

namespace diegesis {

// Tuple i of a dataset file (0-based line among non-blank lines) is prompt
// "line-<i+1>".
inline std::string prompt_id_for_line(std::size_t index) { return "line-" + std::to_string(index + 1); }

// Candidate files are JSON lines {"prompt_id": str, "candidates": [str, ...]}.
// Errors name the 1-based line.
inline std::map<std::string, std::vector<std::string>> parse_candidates(std::string_view text) {
  std::map<std::string, std::vector<std::string>> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    ++line_no;
    pos = nl + 1;
    if (text::trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorKind::parse, where + ": not a JSON object");
    try {
      const auto id = j.at("prompt_id").get<std::string>();
      if (out.count(id)) fail(ErrorKind::parse, where + ": duplicate prompt_id '" + id + "'");
      out[id] = j.at("candidates").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, where + ": " + e.what());
    }
  }
  return out;
}

// Offline stand-in for sampling: both references, the first half of o_pos,
// and o_pos followed by o_neg, cut to group_size (at least 2).
inline std::vector<std::string> synthesize_candidates(const PreferenceTuple& t, std::size_t group_size) {
  const std::u32string pos = utf8::decode(t.o_pos);
  std::vector<std::string> c = {t.o_pos, t.o_neg, utf8::encode(pos.substr(0, (pos.size() + 1) / 2)),
                                t.o_pos + " " + t.o_neg};
  c.resize(std::max<std::size_t>(2, std::min(group_size, c.size())));
  return c;
}

// Pairs every tuple with its candidates. Tuples without an entry are skipped;
// entries that match no tuple are an error.
inline std::vector<CandidateSet> candidate_sets(const std::vector<PreferenceTuple>& tuples,
                                                const std::map<std::string, std::vector<std::string>>& candidates) {
  std::vector<CandidateSet> out;
  std::size_t matched = 0;
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const auto id = prompt_id_for_line(i);
    auto it = candidates.find(id);
    if (it == candidates.end()) continue;
    ++matched;
    out.push_back({id, tuples[i].o_pos, tuples[i].o_neg, it->second});
  }
  if (matched != candidates.size()) {
    fail(ErrorKind::invalid_argument, std::to_string(candidates.size() - matched) + " candidate entries match no tuple");
  }
  return out;
}

inline std::vector<CandidateSet> synthesized_sets(const std::vector<PreferenceTuple>& tuples, std::size_t group_size) {
  std::vector<CandidateSet> out;
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    out.push_back({prompt_id_for_line(i), tuples[i].o_pos, tuples[i].o_neg, synthesize_candidates(tuples[i], group_size)});
  }
  return out;
}

}  // namespace diegesis
