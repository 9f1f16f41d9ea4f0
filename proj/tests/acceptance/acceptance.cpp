// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.
// Everything runs offline with the deterministic stand-ins.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "diegesis/alignment/dataset_io.hpp"
#include "diegesis/alignment/generate.hpp"
#include "diegesis/alignment/teacher.hpp"
#include "diegesis/eval/audit.hpp"
#include "diegesis/eval/suite.hpp"
#include "diegesis/graph/build.hpp"
#include "diegesis/graph/io.hpp"
#include "diegesis/grpo/candidates.hpp"
#include "diegesis/grpo/train.hpp"
#include "diegesis/ingest/bundle_io.hpp"
#include "diegesis/remote/client.hpp"
#include "fixtures.hpp"
#include "generators.hpp"
#include "golden.hpp"
#include "oracles.hpp"
#include "transcript.hpp"

namespace {

using namespace diegesis;

// Collects the first few failures of a criterion; an empty list means PASS.
struct Check {
  std::vector<std::string> failures;
  std::size_t failed = 0;

  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures.size() < 5) failures.push_back(what);
    ++failed;
  }
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// ---- spoiler safety -----------------------------------------------------------

void spoiler_safety(Check& c, std::string& summary) {
  const HashTrigramEmbedder emb;
  std::size_t instances = 0, retrieved = 0, violations = 0;
  for (std::uint64_t seed = 0; seed < 250; ++seed) {
    SeededStream rng(seed + 1000);
    const auto g = testing::random_graph(rng);
    EvalSuite s{EvalKind::tt, seed, {}};
    for (int i = 0; i < 5; ++i) {
      s.items.push_back({testing::random_phrase(rng, 1, 6), rng.index(g.time_count()), std::nullopt, {}, {},
                         std::nullopt});
    }
    RetrievalConfig cfg;
    cfg.k = rng.index(16);
    cfg.pool = 1 + rng.index(40);
    const auto r = gate_audit(g, s, "x", emb, nullptr, cfg, 2);
    instances += r.items_checked;
    retrieved += r.retrieved;
    violations += r.count();
    c.expect(r.count() == 0, "random graph seed " + std::to_string(seed) + " leaked");
  }
  c.expect(instances >= 1000, "only " + std::to_string(instances) + " random instances");

  const auto verne = build_graph(testing::verne_bundle());
  const auto suite = make_tt_suite(verne, 2, 100, 0);
  c.expect(suite.items.size() == 100, "TT suite has " + std::to_string(suite.items.size()) + " items");
  const auto tt = gate_audit(verne, suite, "Captain Nemo", emb);
  c.expect(tt.count() == 0, "TT suite audit found " + std::to_string(tt.count()) + " violations");
  c.expect(tt.retrieved > 0, "TT suite audit retrieved nothing");

  RetrievalConfig broken;
  broken.gate_bypass_for_testing = true;
  const auto leak = gate_audit(verne, suite, "Captain Nemo", emb, nullptr, broken);
  c.expect(leak.count() > 0, "broken gate produced no violations");

  summary = std::to_string(instances) + " random instances (" + std::to_string(retrieved) + " items) + " +
            std::to_string(tt.items_checked) + " TT items: " + std::to_string(violations + tt.count()) +
            " violations; broken gate: " + std::to_string(leak.count());
}

// ---- group-relative advantages -------------------------------------------------

void advantage_suite(Check& c, std::string& summary) {
  SeededStream rng(11);
  double worst_mean = 0, worst_std = 0, worst_inv = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 2 + rng.index(15);
    std::vector<double> r(n);
    for (double& x : r) x = rng.uniform(-5, 5);
    r[1] = r[0] + 0.5;  // non-degenerate
    const auto a = advantages(r);
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
    double var = 0;
    for (double x : a) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_std = std::max(worst_std, std::abs(sd - 1.0));

    const double shift = rng.uniform(-100, 100), scale = rng.uniform(0.01, 100);
    std::vector<double> shifted = r, scaled = r;
    for (double& x : shifted) x += shift;
    for (double& x : scaled) x *= scale;
    const auto as = advantages(shifted), ak = advantages(scaled);
    for (std::size_t i = 0; i < n; ++i) {
      worst_inv = std::max({worst_inv, std::abs(as[i] - a[i]), std::abs(ak[i] - a[i])});
    }
  }
  c.expect(worst_mean <= 1e-9, "max |mean| " + fmt(worst_mean));
  c.expect(worst_std <= 1e-9, "max |std - 1| " + fmt(worst_std));
  c.expect(worst_inv <= 1e-9, "max invariance error " + fmt(worst_inv));

  const auto ex = advantages({2, 4, 6});
  c.expect(std::abs(ex[0] + 1.2247) <= 1e-4 && std::abs(ex[1]) <= 1e-4 && std::abs(ex[2] - 1.2247) <= 1e-4,
           "[2,4,6] gave " + fmt(ex[0]) + ", " + fmt(ex[1]) + ", " + fmt(ex[2]));
  for (std::size_t n = 2; n <= 16; ++n) {
    const double v = rng.uniform(-3, 3);
    const auto z = advantages(std::vector<double>(n, v));
    c.expect(z == std::vector<double>(n, 0.0), "degenerate group of " + std::to_string(n) + " not all zero");
  }
  summary = "10000 groups: max|mean| " + fmt(worst_mean) + ", max|std-1| " + fmt(worst_std) + ", invariance " +
            fmt(worst_inv);
}

// ---- reward ------------------------------------------------------------------

void reward_suite(Check& c, std::string& summary) {
  const HashTrigramEmbedder emb;
  const RewardWeights w{0.7, 0.3};
  SeededStream rng(12);
  double worst_anti = 0, max_abs = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto o = testing::random_phrase(rng, 0, 8);
    const auto p = testing::random_phrase(rng, 0, 8);
    const auto n = testing::random_phrase(rng, 0, 8);
    const double r = reward(o, p, n, emb, w);
    worst_anti = std::max(worst_anti, std::abs(r + reward(o, n, p, emb, w)));
    max_abs = std::max(max_abs, std::abs(r));
    c.expect(reward(o, p, p, emb, w) == 0.0, "o_pos = o_neg gave nonzero reward");
  }
  c.expect(worst_anti <= 1e-12, "antisymmetry error " + fmt(worst_anti));
  c.expect(max_abs <= 1.0, "|r| reached " + fmt(max_abs));
  const double worked = reward_from_similarities(1.0, 0.5, 1.0, 0.6667, w);
  c.expect(std::abs(worked - 0.45) <= 1e-4, "worked example gave " + fmt(worked));
  summary = "1000 fixtures: antisymmetry " + fmt(worst_anti) + ", max|r| " + fmt(max_abs) + ", worked example " +
            fmt(worked);
}

// ---- policy objective ----------------------------------------------------------

ToyPolicy random_policy(SeededStream& rng, std::size_t K) {
  ToyPolicy p;
  for (std::size_t k = 0; k < K; ++k) p.logits.push_back(rng.uniform(-2, 2));
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

void objective_suite(Check& c, std::string& summary) {
  SeededStream rng(13);
  const double h = 1e-5;
  double worst_fd = 0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t K = 2 + rng.index(7);
    const auto p = random_policy(rng, K), old = random_policy(rng, K), ref = random_policy(rng, K);
    const auto g = random_group(rng, K, 2 + rng.index(7));
    const double beta = rng.uniform(0, 2);
    const auto analytic = grpo_gradient(p, old, ref, g, beta);
    double num = 0, den = 0;
    for (std::size_t k = 0; k < K; ++k) {
      auto up = p, down = p;
      up.logits[k] += h;
      down.logits[k] -= h;
      const double fd = (grpo_objective(up, old, ref, g, beta) - grpo_objective(down, old, ref, g, beta)) / (2 * h);
      num += (analytic[k] - fd) * (analytic[k] - fd);
      den += fd * fd;
    }
    const double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
    worst_fd = std::max(worst_fd, rel);
  }
  c.expect(worst_fd < 1e-6, "gradient relative error " + fmt(worst_fd));

  double worst_id = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t K = 2 + rng.index(7);
    const auto p = random_policy(rng, K);
    const auto g = random_group(rng, K, 2 + rng.index(7));
    const double sum = std::accumulate(g.advantages.begin(), g.advantages.end(), 0.0);
    worst_id = std::max(worst_id, std::abs(grpo_objective(p, p, p, g, 0.0) - sum));
  }
  c.expect(worst_id <= 1e-12, "identity objective error " + fmt(worst_id));

  double worst_pin = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto init = random_policy(rng, 6);
    const auto g = random_group(rng, 6, 6);
    GrpoConfig cfg;
    cfg.beta = 1e6;
    auto p = init;
    for (int s = 0; s < 50; ++s) p = grpo_step(p, init, init, {g}, cfg);
    const auto a = p.probabilities(), b = init.probabilities();
    for (std::size_t k = 0; k < a.size(); ++k) worst_pin = std::max(worst_pin, std::abs(a[k] - b[k]));
  }
  c.expect(worst_pin < 1e-3, "large-beta drift " + fmt(worst_pin));

  // Preference learning on groups synthesized from generated persona tuples.
  const auto graph = build_graph(testing::verne_bundle());
  TemplateTeacher teacher;
  const auto ds = gen_persona_dataset(graph, "Captain Nemo", 16, 3, teacher);
  const HashTrigramEmbedder emb;
  const auto scored = score_groups(synthesized_sets(ds.tuples, 4), emb);
  GrpoConfig cfg;
  cfg.steps = 100;
  cfg.seed = 3;
  const auto run = train_toy(scored.groups, cfg);
  std::size_t rises = 0;
  for (std::size_t s = 1; s < run.history.size(); ++s) {
    rises += run.history[s].mean_pos_probability > run.history[s - 1].mean_pos_probability;
  }
  c.expect(run.history.size() == 101, "history has " + std::to_string(run.history.size()) + " entries");
  c.expect(rises == 100, "o_pos probability rose on " + std::to_string(rises) + " of 100 steps");

  summary = "FD rel error " + fmt(worst_fd) + ", identity error " + fmt(worst_id) + ", large-beta drift " +
            fmt(worst_pin) + ", o_pos probability " + fmt(run.history.front().mean_pos_probability) + " -> " +
            fmt(run.history.back().mean_pos_probability) + " rising on " + std::to_string(rises) + "/100 steps";
}

// ---- retrieval vs oracle -------------------------------------------------------

std::size_t item_count(const DiegeticGraph& g) {
  std::size_t n = g.edges().size();
  for (const auto& node : g.nodes()) {
    if (node.kind != NodeKind::temporal) n += 1 + node.facets.size();
  }
  return n;
}

void retrieval_suite(Check& c, std::string& summary) {
  const HashTrigramEmbedder emb;
  std::size_t small_graphs = 0, exhaustive = 0;
  for (std::uint64_t seed = 0; small_graphs < 40 && seed < 5000; ++seed) {
    SeededStream rng(seed + 5000);
    const auto g = testing::random_graph(rng, 4);
    const std::size_t items = item_count(g);
    if (items > 12) continue;
    ++small_graphs;
    const std::vector<std::string> queries = {testing::random_phrase(rng, 1, 3), testing::random_phrase(rng, 2, 5),
                                              "Name0 " + testing::random_phrase(rng, 1, 2)};
    for (const auto& q : queries) {
      for (Ordinal t = 0; t < g.time_count(); ++t) {
        for (std::size_t k = 0; k <= items + 1; ++k) {
          for (std::size_t pool = 1; pool <= items + 1; ++pool) {
            RetrievalConfig cfg;
            cfg.k = k;
            cfg.pool = pool;
            const auto b = retrieve(g, q, t, "x", emb, nullptr, cfg);
            ++exhaustive;
            c.expect(b.items == testing::oracle_retrieve(g, b.decomposition, t, emb, k, pool),
                     "exhaustive mismatch seed " + std::to_string(seed));
          }
        }
      }
    }
  }
  c.expect(small_graphs == 40, "found only " + std::to_string(small_graphs) + " small graphs");

  std::size_t random_cases = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    SeededStream rng(seed + 9000);
    const auto g = testing::random_graph(rng);
    const auto q = testing::random_phrase(rng, 1, 6);
    RetrievalConfig cfg;
    cfg.k = rng.index(20);
    cfg.pool = 1 + rng.index(30);
    const Ordinal t = rng.index(g.time_count());
    const auto b = retrieve(g, q, t, "x", emb, nullptr, cfg);
    ++random_cases;
    c.expect(b.items == testing::oracle_retrieve(g, b.decomposition, t, emb, cfg.k, cfg.pool),
             "random mismatch seed " + std::to_string(seed));
  }

  remote::set_offline(true);
  const auto verne = build_graph(testing::verne_bundle());
  for (Ordinal t = 0; t < verne.time_count(); ++t) {
    const auto a = canonical_dump(nlohmann::json(retrieve(verne, "Nemo and the Nautilus", t, "Captain Nemo", emb)));
    const auto b = canonical_dump(nlohmann::json(retrieve(verne, "Nemo and the Nautilus", t, "Captain Nemo", emb)));
    c.expect(a == b, "ContextBundle differs between runs at t=" + std::to_string(t));
  }
  remote::set_offline(false);
  summary = std::to_string(exhaustive) + " exhaustive cases on " + std::to_string(small_graphs) +
            " graphs of <= 12 items, " + std::to_string(random_cases) + " random cases, bundles byte-identical";
}

// ---- datasets ----------------------------------------------------------------

std::string generate_all(const DiegeticGraph& g, Check& c, std::size_t& future_items) {
  TemplateTeacher teacher;
  const HashTrigramEmbedder emb;
  std::string out;
  for (const auto kind : {DatasetKind::persona, DatasetKind::general_qa, DatasetKind::temporal_adversarial,
                          DatasetKind::out_of_domain}) {
    Dataset ds = kind == DatasetKind::persona ? gen_persona_dataset(g, "Captain Nemo", 512, 21, teacher, {4})
                                              : gen_cre_dataset(g, kind, 512, TimePolicy::uniform(), 21, teacher, {4});
    if (kind != DatasetKind::persona) {
      for (auto& t : ds.tuples) t = attach_context(std::move(t), g, emb, nullptr, 8);
    }
    const std::string name = nlohmann::json(kind).get<std::string>();
    c.expect(ds.tuples.size() == 512, name + " produced " + std::to_string(ds.tuples.size()) + " tuples");
    for (std::size_t i = 0; i < ds.tuples.size(); ++i) {
      const auto bad = check_tuple(ds.tuples[i], &g);
      c.expect(bad.empty(), name + " tuple " + std::to_string(i) + ": " + (bad.empty() ? "" : bad.front()));
      if (kind == DatasetKind::temporal_adversarial) {
        c.expect(ds.tuples[i].context.has_value(), "temporal_adversarial tuple without context");
        if (ds.tuples[i].context) {
          for (const auto& item : ds.tuples[i].context->items) future_items += item.anchor > ds.tuples[i].t();
        }
      }
    }
    out += serialize_dataset(ds.tuples);
  }
  return out;
}

void dataset_suite(Check& c, std::string& summary) {
  const auto g = build_graph(testing::verne_bundle());
  std::size_t future = 0, future_again = 0;
  const auto first = generate_all(g, c, future);
  const auto second = generate_all(g, c, future_again);
  c.expect(future == 0, std::to_string(future) + " future-anchored context items");
  c.expect(first == second, "regeneration is not byte-identical");
  summary = "4 kinds x 512 tuples valid, " + std::to_string(future) + " future context items, regeneration " +
            (first == second ? "byte-identical" : "differs");
}

// ---- round trips -------------------------------------------------------------

int run_cli(const std::vector<std::string>& args) {
  std::string cmd = "'" + std::string(DIEGESIS_CLI_PATH) + "'";
  for (const auto& a : args) cmd += " '" + a + "'";
  return std::system((cmd + " 2>/dev/null").c_str());
}

void round_trip_suite(Check& c, std::string& summary) {
  const auto dir = std::filesystem::temp_directory_path() / ("diegesis-acceptance-" + std::to_string(getpid()));
  std::filesystem::create_directories(dir);
  std::size_t bundles = 0;
  auto check_bundle = [&](const ExtractionBundle& b, const std::string& label) {
    ++bundles;
    save_bundle(b, dir / "b.json");
    c.expect(load_bundle(dir / "b.json") == b, label + ": bundle round trip");
    const auto g = build_graph(b);
    save_graph(g, dir / "g.json");
    c.expect(load_graph(dir / "g.json") == g, label + ": graph round trip");
    c.expect(serialize_graph(build_graph(b)) == serialize_graph(g), label + ": rebuild differs");
  };
  check_bundle(testing::verne_bundle(), "verne");
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    SeededStream rng(seed + 7000);
    check_bundle(testing::random_valid_bundle(rng), "seed " + std::to_string(seed));
  }

  save_bundle(testing::verne_bundle(), dir / "verne.json");
  const std::string a = (dir / "a.json").string(), b = (dir / "b2.json").string();
  const int ra = run_cli({"build", (dir / "verne.json").string(), "-o", a});
  const int rb = run_cli({"build", (dir / "verne.json").string(), "-o", b});
  const bool same = ra == 0 && rb == 0 && read_file(a) == read_file(b);
  c.expect(same, "two CLI build runs differ or failed");
  std::filesystem::remove_all(dir);
  summary = std::to_string(bundles) + " bundles and graphs round-trip; CLI build runs " +
            (same ? "byte-identical" : "differ");
}

// ---- service transcript ----------------------------------------------------------

void service_suite(Check& c, std::string& summary) {
  const auto first = testing::run_scripted_transcript();
  const auto second = testing::run_scripted_transcript();
  for (const auto& [name, text] : {std::pair{"transcript_prompts.txt", first.prompts},
                                   std::pair{"transcript_session.json", first.history},
                                   std::pair{"transcript_events.jsonl", first.events}}) {
    const auto diff = testing::check_golden(name, text);
    c.expect(diff.empty(), diff);
  }
  c.expect(first.prompts == second.prompts && first.history == second.history && first.events == second.events,
           "second run differs");
  for (std::size_t i = 0; i < first.audit.size(); ++i) {
    c.expect(first.replayed[i].render() == first.audit[i].prompt.render(), "replay differs for prompt " +
                                                                                std::to_string(i));
  }
  summary = std::to_string(first.audit.size()) + " prompts replay byte-identically against golden files";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&, std::string&)>>> criteria = {
      {"spoiler-safety", spoiler_safety},   {"advantage-normalization", advantage_suite},
      {"reward", reward_suite},             {"policy-objective", objective_suite},
      {"retrieval-oracle", retrieval_suite}, {"dataset-invariants", dataset_suite},
      {"pipeline-round-trips", round_trip_suite}, {"service-transcript", service_suite},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    std::string summary;
    try {
      fn(c, summary);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
      ++c.failed;
    }
    if (c.failed == 0) {
      std::cout << "PASS " << name << ": " << summary << std::endl;
    } else {
      ++failed;
      std::cout << "FAIL " << name << ": " << c.failed << " failed checks";
      for (const auto& f : c.failures) std::cout << "; " << f;
      std::cout << std::endl;
    }
  }
  return failed == 0 ? 0 : 1;
}
