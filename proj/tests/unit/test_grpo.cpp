#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>

#include "diegesis/core/rng.hpp"
#include "diegesis/grpo/candidates.hpp"
#include "diegesis/grpo/train.hpp"
#include "generators.hpp"

namespace diegesis {
namespace {

// Textbook recursive edit distance, memoized; shares nothing with the
// production two-row implementation.
std::size_t oracle_levenshtein(const std::u32string& a, const std::u32string& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == 0) return j;
    if (j == 0) return i;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t best = std::min(d(i - 1, j) + 1, d(i, j - 1) + 1);
    best = std::min(best, d(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1));
    return memo[key] = best;
  };
  return d(a.size(), b.size());
}

std::string random_text(SeededStream& rng, std::size_t max_len) {
  static const char* kAlphabet[] = {"a", "b", "c", " ", "\xC3\xA9", "\xE2\x82\xAC", "z"};
  std::string s;
  for (std::size_t i = rng.index(max_len + 1); i > 0; --i) s += kAlphabet[rng.index(7)];
  return s;
}

TEST(FormSimilarity, Examples) {
  EXPECT_EQ(form_similarity("abc", "abc"), 1.0);
  EXPECT_NEAR(form_similarity("abc", "abd"), 0.6667, 1e-4);
  EXPECT_EQ(form_similarity("", "xyz"), 0.0);
  EXPECT_EQ(form_similarity("", ""), 1.0);
  EXPECT_EQ(form_similarity("\xC3\xA9", "e"), 0.0);  // one scalar each, one substitution
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
}

TEST(FormSimilarity, MatchesRecursiveOracleAndIsSymmetric) {
  SeededStream rng(31);
  for (int i = 0; i < 400; ++i) {
    const auto a = random_text(rng, 9);
    const auto b = random_text(rng, 9);
    EXPECT_EQ(levenshtein(a, b), oracle_levenshtein(utf8::decode(a), utf8::decode(b)));
    const double f = form_similarity(a, b);
    EXPECT_EQ(f, form_similarity(b, a));
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
}

TEST(SemanticSimilarity, IdentityDisjointnessSymmetry) {
  HashTrigramEmbedder emb;
  EXPECT_EQ(semantic_similarity("the sea", "the sea", emb), 1.0);
  // Find two strings whose trigram buckets are disjoint, checked by explicit
  // dot product, and expect exactly zero.
  const auto base = emb.embed("nautilus");
  std::string other;
  for (int i = 0; i < 1000 && other.empty(); ++i) {
    const auto cand = std::to_string(i);
    const auto v = emb.embed(cand);
    double d = 0;
    for (std::size_t k = 0; k < v.size(); ++k) d += v[k] * base[k];
    if (d == 0.0) other = cand;
  }
  ASSERT_FALSE(other.empty());
  EXPECT_EQ(semantic_similarity("nautilus", other, emb), 0.0);
  SeededStream rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto a = testing::random_phrase(rng, 1, 5);
    const auto b = testing::random_phrase(rng, 1, 5);
    EXPECT_EQ(semantic_similarity(a, b, emb), semantic_similarity(b, a, emb));
  }
}

TEST(Reward, WorkedExampleFromStubbedSimilarities) {
  EXPECT_NEAR(reward_from_similarities(1.0, 0.5, 1.0, 0.6667), 0.45, 1e-4);
  EXPECT_NEAR(reward_from_similarities(1.0, 0.5, 1.0, 2.0 / 3.0), 0.7 * 0.5 + 0.3 / 3.0, 1e-15);
}

TEST(Reward, EqualReferencesCancel) {
  HashTrigramEmbedder emb;
  SeededStream rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto o = testing::random_phrase(rng, 0, 6);
    const auto p = testing::random_phrase(rng, 0, 6);
    EXPECT_EQ(reward(o, p, p, emb), 0.0);
  }
}

TEST(Reward, AntisymmetryAndBounds) {
  HashTrigramEmbedder emb;
  SeededStream rng(9);
  for (int i = 0; i < 300; ++i) {
    const auto o = testing::random_phrase(rng, 0, 6);
    const auto p = testing::random_phrase(rng, 0, 6);
    const auto n = testing::random_phrase(rng, 0, 6);
    const double r = reward(o, p, n, emb);
    EXPECT_NEAR(r, -reward(o, n, p, emb), 1e-12);
    EXPECT_LE(std::abs(r), 1.0);
    EXPECT_GE(reward(p, p, n, emb), 0.0);
    EXPECT_NEAR(reward(p, p, n, emb), -reward(n, p, n, emb), 1e-12);
  }
}

TEST(Reward, WeightsMustBeValid) {
  HashTrigramEmbedder emb;
  EXPECT_THROW(reward("a", "b", "c", emb, {0.5, 0.6}), Error);
  EXPECT_THROW(reward("a", "b", "c", emb, {-0.1, 1.1}), Error);
  EXPECT_NO_THROW(reward("a", "b", "c", emb, {1.0, 0.0}));
}

TEST(Advantages, Examples) {
  const auto a = advantages({2, 4, 6});
  EXPECT_NEAR(a[0], -1.2247, 1e-4);
  EXPECT_NEAR(a[1], 0.0, 1e-12);
  EXPECT_NEAR(a[2], 1.2247, 1e-4);
  EXPECT_EQ(advantages({5, 5, 5}), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(advantages({1, 0}), (std::vector<double>{1, -1}));
  EXPECT_THROW(advantages({1}), Error);
  EXPECT_THROW(advantages({}), Error);
}

TEST(Advantages, NormalizedAndInvariant) {
  SeededStream rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.index(15);
    std::vector<double> r(n);
    for (double& x : r) x = rng.uniform(-3, 3);
    const auto a = advantages(r);
    double mean = 0, var = 0;
    for (double x : a) mean += x;
    mean /= static_cast<double>(n);
    for (double x : a) var += (x - mean) * (x - mean);
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(var / static_cast<double>(n)), 1.0, 1e-9);
    const double c = rng.uniform(-10, 10), s = rng.uniform(0.1, 10);
    std::vector<double> shifted = r, scaled = r;
    for (double& x : shifted) x += c;
    for (double& x : scaled) x *= s;
    const auto as = advantages(shifted), ak = advantages(scaled);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(as[i], a[i], 1e-9);
      EXPECT_NEAR(ak[i], a[i], 1e-9);
    }
  }
}

// ---- objective and gradient ---------------------------------------------------

ToyPolicy random_policy(SeededStream& rng, std::size_t K, double scale = 1.0) {
  ToyPolicy p;
  for (std::size_t k = 0; k < K; ++k) p.logits.push_back(rng.uniform(-scale, scale));
  p.temperature = rng.uniform(0.5, 2.0);
  return p;
}

GroupSample random_group(SeededStream& rng, std::size_t K, std::size_t N) {
  GroupSample g;
  std::vector<double> r;
  for (std::size_t i = 0; i < N; ++i) {
    g.indices.push_back(rng.index(K));
    r.push_back(rng.uniform(-1, 1));
  }
  g.advantages = advantages(r);
  return g;
}

// Direct evaluation: naive softmax without shifting and KL as a plain sum.
double oracle_objective(const ToyPolicy& p, const ToyPolicy& old, const ToyPolicy& ref, const GroupSample& g,
                        double beta) {
  auto probs = [](const ToyPolicy& x) {
    std::vector<double> e;
    double s = 0;
    for (double z : x.logits) {
      e.push_back(std::exp(z / x.temperature));
      s += e.back();
    }
    for (double& v : e) v /= s;
    return e;
  };
  const auto pp = probs(p), po = probs(old), pr = probs(ref);
  double total = 0;
  for (std::size_t i = 0; i < g.indices.size(); ++i) total += pp[g.indices[i]] / po[g.indices[i]] * g.advantages[i];
  double kl = 0;
  for (std::size_t x = 0; x < pp.size(); ++x) kl += pp[x] * std::log(pp[x] / pr[x]);
  return total - beta * kl;
}

TEST(GrpoObjective, CancellationExamples) {
  SeededStream rng(1);
  const auto p = random_policy(rng, 5);
  const auto ref = random_policy(rng, 5);
  GroupSample zero{{0, 1, 2}, {0, 0, 0}};
  const double kl = kl_divergence(p.log_probabilities(), ref.log_probabilities());
  EXPECT_NEAR(grpo_objective(p, p, ref, zero, 3.0), -3.0 * kl, 1e-12);
  EXPECT_NEAR(grpo_objective(p, p, p, zero, 3.0), 0.0, 1e-12);
  const auto g = random_group(rng, 5, 6);
  double sum = 0;
  for (double a : g.advantages) sum += a;
  EXPECT_NEAR(grpo_objective(p, p, ref, g, 0.0), sum, 1e-12);
}

TEST(GrpoObjective, MatchesIndependentEvaluation) {
  SeededStream rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_policy(rng, 4), old = random_policy(rng, 4), ref = random_policy(rng, 4);
    const auto g = random_group(rng, 4, 5);
    const double beta = rng.uniform(0, 2);
    EXPECT_NEAR(grpo_objective(p, old, ref, g, beta), oracle_objective(p, old, ref, g, beta), 1e-10);
  }
}

TEST(GrpoObjective, RejectsBadShapes) {
  ToyPolicy p{{0, 0, 0}, 1.0};
  EXPECT_THROW(grpo_objective(p, p, p, {{3}, {1.0}}, 0.1), Error);
  EXPECT_THROW(grpo_objective(p, p, p, {{0, 1}, {1.0}}, 0.1), Error);
  EXPECT_THROW(grpo_objective(p, ToyPolicy{{0, 0}, 1.0}, p, {{0}, {1.0}}, 0.1), Error);
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-300});
}

TEST(GrpoGradient, MatchesCentralDifferences) {
  SeededStream rng(3);
  const double h = 1e-5;
  for (int i = 0; i < 20; ++i) {
    const std::size_t K = 2 + rng.index(6);
    const auto p = random_policy(rng, K), old = random_policy(rng, K), ref = random_policy(rng, K);
    const auto g = random_group(rng, K, 2 + rng.index(6));
    const double beta = rng.uniform(0, 2);
    const auto analytic = grpo_gradient(p, old, ref, g, beta);
    std::vector<double> numeric(K);
    for (std::size_t k = 0; k < K; ++k) {
      auto up = p, down = p;
      up.logits[k] += h;
      down.logits[k] -= h;
      numeric[k] = (grpo_objective(up, old, ref, g, beta) - grpo_objective(down, old, ref, g, beta)) / (2 * h);
    }
    EXPECT_LT(relative_error(analytic, numeric), 1e-6) << "instance " << i;
  }
}

TEST(GrpoStep, PositiveAdvantageGainsProbability) {
  ToyPolicy p{{0, 0, 0, 0}, 1.0};
  const GroupSample g{{0, 1, 2, 3}, {1.0, -0.2, -0.3, -0.5}};
  GrpoConfig cfg;
  cfg.beta = 0;
  const auto next = grpo_step(p, p, p, {g}, cfg);
  EXPECT_GT(next.probabilities()[0], p.probabilities()[0]);
}

TEST(GrpoStep, HugeBetaPinsPolicyToReference) {
  SeededStream rng(5);
  const auto init = random_policy(rng, 6);
  const auto g = random_group(rng, 6, 6);
  GrpoConfig cfg;
  cfg.beta = 1e6;
  auto p = init;
  for (int s = 0; s < 50; ++s) p = grpo_step(p, init, init, {g}, cfg);
  const auto a = p.probabilities(), b = init.probabilities();
  double worst = 0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  EXPECT_LT(worst, 1e-3);
}

TEST(GrpoStep, ZeroAdvantagesAtReferenceIsStationary) {
  ToyPolicy p{{0.3, -0.1, 0.2}, 1.0};
  EXPECT_EQ(grpo_step(p, p, p, {{{0, 1}, {0, 0}}}, {}), p);
}

// ---- scoring and training -----------------------------------------------------

TEST(ScoreGroups, ReferencePairGivesPlusMinusOne) {
  const auto out = score_groups({{"p0", "I am Nemo of the deep.", "As an AI assistant, hello.",
                                  {"I am Nemo of the deep.", "As an AI assistant, hello."}}},
                                HashTrigramEmbedder());
  ASSERT_EQ(out.groups.size(), 1u);
  EXPECT_NEAR(out.groups[0].advantages[0], 1.0, 1e-12);
  EXPECT_NEAR(out.groups[0].advantages[1], -1.0, 1e-12);
  EXPECT_GT(out.groups[0].rewards[0], 0.0);
}

TEST(ScoreGroups, EmptyAndUndersizedInputs) {
  EXPECT_TRUE(score_groups({}, HashTrigramEmbedder()).groups.empty());
  EXPECT_EQ(serialize_scored_groups({}), "");
  const auto out = score_groups({{"solo", "a", "b", {"a"}}}, HashTrigramEmbedder());
  EXPECT_TRUE(out.groups.empty());
  ASSERT_EQ(out.warnings.size(), 1u);
  EXPECT_NE(out.warnings[0].find("solo"), std::string::npos);
}

TEST(ScoreGroups, ExportRoundTrip) {
  SeededStream rng(6);
  std::vector<CandidateSet> sets;
  for (int i = 0; i < 30; ++i) {
    CandidateSet s{"p" + std::to_string(i), testing::random_phrase(rng, 2, 6), testing::random_phrase(rng, 2, 6), {}};
    for (std::size_t c = 2 + rng.index(5); c > 0; --c) s.candidates.push_back(testing::random_phrase(rng, 1, 6));
    sets.push_back(s);
  }
  const auto seq = score_groups(sets, HashTrigramEmbedder());
  const auto par = score_groups(sets, HashTrigramEmbedder(), {}, 4);
  EXPECT_EQ(seq.groups, par.groups);
  const auto text = serialize_scored_groups(seq.groups);
  EXPECT_EQ(parse_scored_groups(text), seq.groups);
  EXPECT_EQ(serialize_scored_groups(parse_scored_groups(text)), text);
  EXPECT_THROW(parse_scored_groups("{\"prompt_id\": 1}\n"), Error);
}

TEST(TrainToy, RaisesPositiveCandidateProbability) {
  const auto scored = score_groups(
      {{"a", "The sea is my home.", "As an AI assistant, I cannot.",
        {"The sea is my home.", "As an AI assistant, I cannot.", "The sea, my home?"}},
       {"b", "Nemo obeys no nation.", "As an AI assistant, nations are complex.",
        {"Nemo obeys no nation.", "As an AI assistant, nations are complex."}}},
      HashTrigramEmbedder());
  GrpoConfig cfg;
  cfg.beta = 0.01;
  cfg.steps = 40;
  const auto r = train_toy(scored.groups, cfg);
  ASSERT_EQ(r.history.size(), 41u);
  EXPECT_EQ(r.vocabulary.size(), 5u);
  for (std::size_t s = 1; s < r.history.size(); ++s) {
    EXPECT_GT(r.history[s].mean_pos_probability, r.history[s - 1].mean_pos_probability);
  }
}


PreferenceTuple candidate_tuple(std::string pos, std::string neg) {
  PreferenceTuple t;
  t.o_pos = std::move(pos);
  t.o_neg = std::move(neg);
  return t;
}

TEST(Candidates, ParseNamesBadLine) {
  const auto m = parse_candidates("{\"prompt_id\":\"line-1\",\"candidates\":[\"a\",\"b\"]}\n\n");
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.at("line-1"), (std::vector<std::string>{"a", "b"}));
  try {
    parse_candidates("{\"prompt_id\":\"line-1\",\"candidates\":[]}\nnot json\n");
    FAIL() << "expected parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_candidates("{\"prompt_id\":\"x\",\"candidates\":[]}\n{\"prompt_id\":\"x\",\"candidates\":[]}"),
               Error);
}

TEST(Candidates, MatchByLineAndRejectStrays) {
  const std::vector<PreferenceTuple> tuples = {candidate_tuple("yes", "no"), candidate_tuple("aye", "nay")};
  const auto sets = candidate_sets(tuples, {{"line-2", {"aye", "nay"}}});
  ASSERT_EQ(sets.size(), 1u);
  EXPECT_EQ(sets[0].prompt_id, "line-2");
  EXPECT_EQ(sets[0].o_pos, "aye");
  EXPECT_THROW(candidate_sets(tuples, {{"line-3", {"a", "b"}}}), Error);
}

TEST(Candidates, SynthesizedGroupsScoreReferencesAtExtremes) {
  const auto t = candidate_tuple("I sail beneath the waves.", "Lol whatever, dude.");
  for (std::size_t g = 0; g <= 6; ++g) {
    const auto c = synthesize_candidates(t, g);
    EXPECT_EQ(c.size(), std::clamp<std::size_t>(g, 2, 4));
    EXPECT_EQ(c[0], t.o_pos);
    EXPECT_EQ(c[1], t.o_neg);
  }
  HashTrigramEmbedder emb;
  const auto scored = score_groups(synthesized_sets({t}, 4), emb, RewardWeights{}, 1);
  ASSERT_EQ(scored.groups.size(), 1u);
  const auto& a = scored.groups[0].advantages;
  EXPECT_EQ(std::max_element(a.begin(), a.end()) - a.begin(), 0);
  EXPECT_EQ(std::min_element(a.begin(), a.end()) - a.begin(), 1);
}

}  // namespace
}  // namespace diegesis
