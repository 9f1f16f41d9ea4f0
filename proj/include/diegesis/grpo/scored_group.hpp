#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "diegesis/core/json_io.hpp"
#include "diegesis/core/parallel.hpp"
#include "diegesis/grpo/reward.hpp"

namespace diegesis {

// Candidates sampled for one prompt, with its reference pair.
struct CandidateSet {
  std::string prompt_id;
  std::string o_pos;
  std::string o_neg;
  std::vector<std::string> candidates;
};

struct ScoredGroup {
  std::string prompt_id;
  std::vector<std::string> candidates;
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::string o_pos;
  std::string o_neg;

  bool operator==(const ScoredGroup&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ScoredGroup, prompt_id, candidates, rewards, advantages, o_pos, o_neg)

struct ScoredGroups {
  std::vector<ScoredGroup> groups;
  std::vector<std::string> warnings;
};

// Rewards each candidate against its references, then normalizes within the
// group. Groups with fewer than 2 candidates are skipped with a warning.
inline ScoredGroups score_groups(const std::vector<CandidateSet>& sets, const Embedder& embedder,
                                 const RewardWeights& weights = {}, std::size_t parallelism = 1) {
  weights.validate();
  ScoredGroups out;
  auto scored = parallel_map(sets.size(), parallelism, [&](std::size_t i) -> std::optional<ScoredGroup> {
    const auto& s = sets[i];
    if (s.candidates.size() < 2) return std::nullopt;
    ScoredGroup g{s.prompt_id, s.candidates, {}, {}, s.o_pos, s.o_neg};
    for (const auto& c : s.candidates) g.rewards.push_back(reward(c, s.o_pos, s.o_neg, embedder, weights));
    g.advantages = advantages(g.rewards);
    return g;
  });
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (scored[i]) {
      out.groups.push_back(std::move(*scored[i]));
    } else {
      out.warnings.push_back("group " + sets[i].prompt_id + " skipped: needs at least 2 candidates, has " +
                             std::to_string(sets[i].candidates.size()));
    }
  }
  return out;
}

// Line-delimited export: one ScoredGroup object per line, keys sorted.
inline std::string serialize_scored_groups(const std::vector<ScoredGroup>& groups) {
  std::string out;
  for (const auto& g : groups) {
    out += nlohmann::json(g).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
  }
  return out;
}

inline std::vector<ScoredGroup> parse_scored_groups(std::string_view text) {
  std::vector<ScoredGroup> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    ++line_no;
    pos = nl + 1;
    if (text::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) fail(ErrorKind::parse, "line " + std::to_string(line_no) + ": malformed JSON");
    try {
      out.push_back(j.get<ScoredGroup>());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    const auto& g = out.back();
    if (g.rewards.size() != g.candidates.size() || g.advantages.size() != g.candidates.size()) {
      fail(ErrorKind::parse, "line " + std::to_string(line_no) + ": candidates, rewards and advantages differ in length");
    }
  }
  return out;
}

inline void export_scored_groups(const std::vector<ScoredGroup>& groups, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_scored_groups(groups));
}

inline std::vector<ScoredGroup> read_scored_groups(const std::filesystem::path& path) {
  return parse_scored_groups(read_file(path));
}

}  // namespace diegesis
