#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "diegesis/core/error.hpp"
#include "diegesis/grpo/similarity.hpp"

namespace diegesis {

struct RewardWeights {
  double w_sim = 0.7;
  double w_form = 0.3;

  void validate() const {
    if (!(w_sim >= 0.0) || !(w_form >= 0.0) || std::abs(w_sim + w_form - 1.0) > 1e-12) {
      fail(ErrorKind::invalid_argument, "reward weights must be non-negative and sum to 1");
    }
  }
};

// r = w_sim (sim_pos - sim_neg) + w_form (form_pos - form_neg)
inline double reward_from_similarities(double sim_pos, double sim_neg, double form_pos, double form_neg,
                                       const RewardWeights& w = {}) {
  return w.w_sim * (sim_pos - sim_neg) + w.w_form * (form_pos - form_neg);
}

inline double reward(std::string_view o, std::string_view o_pos, std::string_view o_neg, const Embedder& embedder,
                     const RewardWeights& w = {}) {
  w.validate();
  return reward_from_similarities(semantic_similarity(o, o_pos, embedder), semantic_similarity(o, o_neg, embedder),
                                  form_similarity(o, o_pos), form_similarity(o, o_neg), w);
}

inline constexpr double kDegenerateStd = 1e-12;

// A_i = (r_i - mean) / std with the population std; all zeros when the std is
// below kDegenerateStd.
inline std::vector<double> advantages(const std::vector<double>& rewards) {
  const std::size_t n = rewards.size();
  if (n < 2) fail(ErrorKind::invalid_argument, "a group needs at least 2 rewards, got " + std::to_string(n));
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  std::vector<double> out(n, 0.0);
  if (!(sd >= kDegenerateStd)) return out;
  for (std::size_t i = 0; i < n; ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

}  // namespace diegesis
