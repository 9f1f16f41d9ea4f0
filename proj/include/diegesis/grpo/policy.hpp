#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "diegesis/core/error.hpp"

namespace diegesis {

// Categorical policy over a fixed candidate set: pi = softmax(logits / T).
struct ToyPolicy {
  std::vector<double> logits;
  double temperature = 1.0;

  std::size_t size() const { return logits.size(); }

  std::vector<double> log_probabilities() const {
    if (logits.empty()) fail(ErrorKind::invalid_argument, "policy has no candidates");
    if (!(temperature > 0.0)) fail(ErrorKind::invalid_argument, "temperature must be positive");
    double mx = logits[0] / temperature;
    for (double z : logits) mx = std::max(mx, z / temperature);
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z / temperature - mx);
    const double lse = mx + std::log(sum);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] / temperature - lse;
    return out;
  }

  std::vector<double> probabilities() const {
    auto lp = log_probabilities();
    for (double& x : lp) x = std::exp(x);
    return lp;
  }

  bool operator==(const ToyPolicy&) const = default;
};

inline void to_json(nlohmann::json& j, const ToyPolicy& p) {
  j = {{"logits", p.logits}, {"temperature", p.temperature}};
}

inline void from_json(const nlohmann::json& j, ToyPolicy& p) {
  j.at("logits").get_to(p.logits);
  p.temperature = j.value("temperature", 1.0);
}

// Exact KL(p || q) for categorical distributions given as log-probabilities.
inline double kl_divergence(const std::vector<double>& log_p, const std::vector<double>& log_q) {
  double kl = 0.0;
  for (std::size_t x = 0; x < log_p.size(); ++x) kl += std::exp(log_p[x]) * (log_p[x] - log_q[x]);
  return kl;
}

// One sampled group: candidate indices o_1..o_N and their advantages.
struct GroupSample {
  std::vector<std::size_t> indices;
  std::vector<double> advantages;
};

struct GrpoConfig {
  double beta = 0.04;
  std::size_t group_size = 4;
  double learning_rate = 0.5;
  std::size_t steps = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(beta >= 0.0)) fail(ErrorKind::invalid_argument, "beta must be non-negative");
    if (group_size < 2) fail(ErrorKind::invalid_argument, "group size must be at least 2");
    if (!(learning_rate > 0.0)) fail(ErrorKind::invalid_argument, "learning rate must be positive");
  }
};

namespace detail {

inline void check_shapes(const ToyPolicy& p, const ToyPolicy& old, const ToyPolicy& ref, const GroupSample& g) {
  if (old.size() != p.size() || ref.size() != p.size()) fail(ErrorKind::invalid_argument, "policy sizes differ");
  if (g.indices.size() != g.advantages.size()) {
    fail(ErrorKind::invalid_argument, "group indices and advantages differ in length");
  }
  for (std::size_t i : g.indices) {
    if (i >= p.size()) fail(ErrorKind::invalid_argument, "candidate index " + std::to_string(i) + " out of range");
  }
}

}  // namespace detail

// sum_i pi(o_i) / pi_old(o_i) * A_i  -  beta * KL(pi || pi_ref)
inline double grpo_objective(const ToyPolicy& policy, const ToyPolicy& old_policy, const ToyPolicy& ref_policy,
                             const GroupSample& group, double beta) {
  detail::check_shapes(policy, old_policy, ref_policy, group);
  const auto lp = policy.log_probabilities();
  const auto lold = old_policy.log_probabilities();
  double surrogate = 0.0;
  for (std::size_t i = 0; i < group.indices.size(); ++i) {
    const std::size_t o = group.indices[i];
    surrogate += std::exp(lp[o] - lold[o]) * group.advantages[i];
  }
  if (beta == 0.0) return surrogate;
  return surrogate - beta * kl_divergence(lp, ref_policy.log_probabilities());
}

// Gradient of grpo_objective with respect to the logits. With p = softmax(z/T):
//   d p_j / d z_k = p_j (delta_jk - p_k) / T
//   d KL  / d z_k = p_k (l_k - sum_x p_x l_x) / T,  l_x = ln p_x - ln q_x
inline std::vector<double> grpo_gradient(const ToyPolicy& policy, const ToyPolicy& old_policy,
                                         const ToyPolicy& ref_policy, const GroupSample& group, double beta) {
  detail::check_shapes(policy, old_policy, ref_policy, group);
  const std::size_t K = policy.size();
  const double T = policy.temperature;
  const auto lp = policy.log_probabilities();
  const auto lold = old_policy.log_probabilities();
  std::vector<double> p(K);
  for (std::size_t k = 0; k < K; ++k) p[k] = std::exp(lp[k]);

  std::vector<double> grad(K, 0.0);
  for (std::size_t i = 0; i < group.indices.size(); ++i) {
    const std::size_t o = group.indices[i];
    const double w = group.advantages[i] * std::exp(lp[o] - lold[o]) / T;  // A_i * ratio_i / T
    for (std::size_t k = 0; k < K; ++k) grad[k] += w * ((k == o ? 1.0 : 0.0) - p[k]);
  }
  if (beta != 0.0) {
    const auto lref = ref_policy.log_probabilities();
    double mean_l = 0.0;
    std::vector<double> l(K);
    for (std::size_t x = 0; x < K; ++x) {
      l[x] = lp[x] - lref[x];
      mean_l += p[x] * l[x];
    }
    for (std::size_t k = 0; k < K; ++k) grad[k] -= beta * p[k] * (l[k] - mean_l) / T;
  }
  for (double g : grad) {
    if (!std::isfinite(g)) fail(ErrorKind::invalid_argument, "non-finite GRPO gradient");
  }
  return grad;
}

// Mean over groups of grpo_objective / grpo_gradient.
inline double batch_objective(const ToyPolicy& policy, const ToyPolicy& old_policy, const ToyPolicy& ref_policy,
                              const std::vector<GroupSample>& batch, double beta) {
  if (batch.empty()) fail(ErrorKind::invalid_argument, "empty batch");
  double total = 0.0;
  for (const auto& g : batch) total += grpo_objective(policy, old_policy, ref_policy, g, beta);
  return total / static_cast<double>(batch.size());
}

inline std::vector<double> batch_gradient(const ToyPolicy& policy, const ToyPolicy& old_policy,
                                          const ToyPolicy& ref_policy, const std::vector<GroupSample>& batch,
                                          double beta) {
  if (batch.empty()) fail(ErrorKind::invalid_argument, "empty batch");
  std::vector<double> total(policy.size(), 0.0);
  for (const auto& g : batch) {
    const auto grad = grpo_gradient(policy, old_policy, ref_policy, g, beta);
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += grad[k];
  }
  for (double& x : total) x /= static_cast<double>(batch.size());
  return total;
}

// One gradient-ascent step on batch_objective. The step starts at
// learning_rate and is halved until the objective rises by at least
// 1e-4 * step * |g|^2 (Armijo); after 60 halvings the policy is returned
// unchanged. This keeps large-beta runs stable without tuning the rate.
inline ToyPolicy grpo_step(const ToyPolicy& policy, const ToyPolicy& old_policy, const ToyPolicy& ref_policy,
                           const std::vector<GroupSample>& batch, const GrpoConfig& config) {
  config.validate();
  const auto grad = batch_gradient(policy, old_policy, ref_policy, batch, config.beta);
  double norm2 = 0.0;
  for (double g : grad) norm2 += g * g;
  if (norm2 == 0.0) return policy;
  const double f0 = batch_objective(policy, old_policy, ref_policy, batch, config.beta);
  double step = config.learning_rate;
  for (int halvings = 0; halvings <= 60; ++halvings, step *= 0.5) {
    ToyPolicy next = policy;
    for (std::size_t k = 0; k < grad.size(); ++k) next.logits[k] += step * grad[k];
    const double f1 = batch_objective(next, old_policy, ref_policy, batch, config.beta);
    if (std::isfinite(f1) && f1 >= f0 + 1e-4 * step * norm2) return next;
  }
  return policy;
}

}  // namespace diegesis
