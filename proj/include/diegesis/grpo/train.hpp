#pragma once

#include <map>
#include <string>
#include <vector>

#include "diegesis/grpo/policy.hpp"
#include "diegesis/grpo/scored_group.hpp"

namespace diegesis {

// Candidate strings in order of first appearance across the groups; the toy
// policy's logits are indexed by this list.
inline std::vector<std::string> candidate_vocabulary(const std::vector<ScoredGroup>& groups) {
  std::vector<std::string> vocab;
  std::map<std::string, std::size_t, std::less<>> seen;
  for (const auto& g : groups) {
    for (const auto& c : g.candidates) {
      if (seen.emplace(c, vocab.size()).second) vocab.push_back(c);
    }
  }
  return vocab;
}

inline std::vector<GroupSample> to_samples(const std::vector<ScoredGroup>& groups,
                                           const std::vector<std::string>& vocab) {
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab[i], i);
  std::vector<GroupSample> out;
  for (const auto& g : groups) {
    GroupSample s;
    for (const auto& c : g.candidates) {
      auto it = index.find(c);
      if (it == index.end()) fail(ErrorKind::invalid_argument, "candidate missing from vocabulary");
      s.indices.push_back(it->second);
    }
    s.advantages = g.advantages;
    out.push_back(std::move(s));
  }
  return out;
}

struct TrainStep {
  std::size_t step = 0;
  double objective = 0.0;
  double kl_to_ref = 0.0;
  double mean_pos_probability = 0.0;  // mean probability of each group's o_pos
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TrainStep, step, objective, kl_to_ref, mean_pos_probability)

struct TrainResult {
  std::vector<std::string> vocabulary;
  ToyPolicy initial;
  ToyPolicy policy;
  std::vector<TrainStep> history;  // entry 0 is the initial policy
};

// On-policy loop: before every step the old policy is refreshed to the
// current one; the reference stays at the uniform initial policy.
inline TrainResult train_toy(const std::vector<ScoredGroup>& groups, const GrpoConfig& config) {
  config.validate();
  if (groups.empty()) fail(ErrorKind::invalid_argument, "no scored groups to train on");
  TrainResult r;
  r.vocabulary = candidate_vocabulary(groups);
  r.initial.logits.assign(r.vocabulary.size(), 0.0);
  r.policy = r.initial;
  const auto batch = to_samples(groups, r.vocabulary);

  auto snapshot = [&](std::size_t step) {
    TrainStep s;
    s.step = step;
    s.objective = batch_objective(r.policy, r.policy, r.initial, batch, config.beta);
    s.kl_to_ref = kl_divergence(r.policy.log_probabilities(), r.initial.log_probabilities());
    const auto p = r.policy.probabilities();
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& g : groups) {
      for (std::size_t i = 0; i < g.candidates.size(); ++i) {
        if (g.candidates[i] == g.o_pos) {
          sum += p[batch[&g - groups.data()].indices[i]];
          ++n;
          break;
        }
      }
    }
    s.mean_pos_probability = n ? sum / static_cast<double>(n) : 0.0;
    return s;
  };

  r.history.push_back(snapshot(0));
  for (std::size_t step = 1; step <= config.steps; ++step) {
    const ToyPolicy old = r.policy;
    r.policy = grpo_step(r.policy, old, r.initial, batch, config);
    r.history.push_back(snapshot(step));
  }
  return r;
}

}  // namespace diegesis
