#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "diegesis/alignment/dataset_io.hpp"
#include "diegesis/alignment/generate.hpp"
#include "diegesis/alignment/teacher.hpp"
#include "diegesis/eval/audit.hpp"
#include "diegesis/eval/run.hpp"
#include "diegesis/graph/build.hpp"
#include "diegesis/graph/io.hpp"
#include "diegesis/grpo/candidates.hpp"
#include "diegesis/grpo/train.hpp"
#include "diegesis/ingest/aliases.hpp"
#include "diegesis/ingest/bundle_io.hpp"
#include "diegesis/ingest/remote_extractor.hpp"
#include "diegesis/ingest/rule_extractor.hpp"
#include "diegesis/ingest/segment.hpp"
#include "diegesis/ingest/validate.hpp"
#include "diegesis/service/http.hpp"

namespace {

using namespace diegesis;

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Writes to `path`, or stdout when path is empty or "-".
void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
  } else {
    write_file_atomic(path, content);
  }
}

void warn_all(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// Under --offline only the deterministic stand-ins may be selected.
void require_online(const std::string& what, const std::string& choice) {
  if (remote::is_offline()) {
    fail(ErrorKind::config, "--offline forbids " + what + " '" + choice + "'");
  }
}

std::unique_ptr<Embedder> make_embedder(const std::string& choice) {
  if (choice == "hash") return std::make_unique<HashTrigramEmbedder>();
  require_online("--embedder", choice);
  return std::make_unique<RemoteEmbedder>(remote::endpoint_from_env("embedder"));
}

std::unique_ptr<AnalyzerClient> make_analyzer(const std::string& choice) {
  if (choice == "heuristic") return nullptr;
  require_online("--analyzer", choice);
  return std::make_unique<RemoteAnalyzer>(remote::endpoint_from_env("analyzer"));
}

std::unique_ptr<TeacherClient> make_teacher(const std::string& choice) {
  if (choice == "template") return std::make_unique<TemplateTeacher>();
  require_online("--teacher", choice);
  return std::make_unique<RemoteTeacher>(remote::endpoint_from_env("teacher"));
}

std::unique_ptr<GeneratorClient> make_generator(const std::string& choice) {
  if (choice == "echo") return std::make_unique<EchoGenerator>();
  require_online("--generator", choice);
  return std::make_unique<RemoteGenerator>(remote::endpoint_from_env("generator"));
}

std::unique_ptr<JudgeClient> make_judge(const std::string& choice) {
  if (choice == "rule") return std::make_unique<RuleJudge>();
  require_online("--judge", choice);
  return std::make_unique<LlmJudge>(remote::endpoint_from_env("judge"));
}

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

// ---- subcommands ----------------------------------------------------------

struct IngestArgs {
  std::string novel, out, profiles, extractor = "rule", pattern = "^CHAPTER", report;
  std::size_t budget = 4000, parallelism = 1;
};

int run_ingest(const IngestArgs& a) {
  std::vector<CharacterProfile> profiles;
  if (!a.profiles.empty()) {
    profiles = decode_json<std::vector<CharacterProfile>>(parse_json(read_file(a.profiles), a.profiles), "profiles");
  }
  std::unique_ptr<ExtractorClient> client;
  if (a.extractor == "rule") {
    client = std::make_unique<RuleBasedExtractor>(profiles);
  } else {
    require_online("--extractor", a.extractor);
    client = std::make_unique<RemoteExtractor>(remote::endpoint_from_env("extractor"));
  }
  const auto seg = segment_novel(read_file(a.novel), a.pattern, SegmentOptions{a.budget});
  warn_all(seg.warnings);
  auto result = run_extractor(seg.spans, seg.chapters, *client, {a.parallelism, profiles});
  const auto bundle = normalize_aliases(std::move(result.bundle));
  std::set<std::string> span_ids;
  for (const auto& s : seg.spans) span_ids.insert(s.span_id);
  auto report = validate_bundle(bundle, span_ids);
  report.warnings.insert(report.warnings.begin(), result.report.warnings.begin(), result.report.warnings.end());
  report.errors.insert(report.errors.begin(), result.report.errors.begin(), result.report.errors.end());
  if (!a.report.empty()) write_file_atomic(a.report, canonical_dump(nlohmann::json(report)) + "\n");
  for (const auto& w : report.warnings) std::cerr << "warning: " << w.locator << ": " << w.message << "\n";
  emit(a.out, serialize_bundle(bundle));
  if (!report.ok()) {
    for (const auto& e : report.errors) std::cerr << "error: " << e.locator << ": " << e.rule << ": " << e.message << "\n";
    return kExitRuntime;
  }
  std::cerr << "ingested " << seg.spans.size() << " spans into " << bundle.entities.size() << " entities, "
            << bundle.relations.size() << " relations, " << bundle.events.size() << " events\n";
  return 0;
}

int run_build(const std::string& bundle_path, const std::string& out) {
  const auto bundle = load_bundle(bundle_path);
  const auto report = validate_bundle(bundle);
  if (!report.ok()) {
    std::cerr << canonical_dump(nlohmann::json(report)) << "\n";
    fail(ErrorKind::build, "bundle failed validation with " + std::to_string(report.errors.size()) + " errors");
  }
  emit(out, serialize_graph(build_graph(bundle)));
  return 0;
}

struct QueryArgs {
  std::string graph, q, character, out, embedder = "hash", analyzer = "heuristic";
  Ordinal t = 0;
  std::size_t k = 8, pool = 32;
};

int run_query(const QueryArgs& a) {
  const auto g = load_graph(a.graph);
  const auto emb = make_embedder(a.embedder);
  const auto analyzer = make_analyzer(a.analyzer);
  RetrievalConfig cfg;
  cfg.k = a.k;
  cfg.pool = a.pool;
  const auto bundle = retrieve(g, a.q, a.t, a.character, *emb, analyzer.get(), cfg);
  emit(a.out, canonical_dump(nlohmann::json(bundle)) + "\n");
  return 0;
}

struct GenArgs {
  std::string graph, kind, character, out, teacher = "template", format = "jsonl", embedder = "hash",
                                           analyzer = "heuristic";
  std::size_t n = 64, parallelism = 1, context_k = 8;
  std::uint64_t seed = 0;
  std::optional<Ordinal> t;
  bool no_context = false;
};

int run_gen(const GenArgs& a) {
  const auto g = load_graph(a.graph);
  const auto kind = parse_enum<DatasetKind>(a.kind, "dataset kind");
  const auto teacher = make_teacher(a.teacher);
  const GenOptions opts{a.parallelism};
  Dataset ds;
  if (kind == DatasetKind::persona) {
    if (!a.character.empty()) {
      ds = gen_persona_dataset(g, a.character, a.n, a.seed, *teacher, opts);
    } else {
      // n is split across every profile; character i draws from seed + i.
      const auto& profiles = g.profiles();
      if (profiles.empty()) fail(ErrorKind::build, "graph has no character profiles");
      for (std::size_t i = 0; i < profiles.size(); ++i) {
        const std::size_t share = a.n / profiles.size() + (i < a.n % profiles.size() ? 1 : 0);
        if (share == 0) continue;
        auto part = gen_persona_dataset(g, profiles[i].canonical_name, share, a.seed + i, *teacher, opts);
        ds.tuples.insert(ds.tuples.end(), part.tuples.begin(), part.tuples.end());
        ds.warnings.insert(ds.warnings.end(), part.warnings.begin(), part.warnings.end());
      }
    }
  } else {
    const auto policy = a.t ? TimePolicy::fixed(*a.t) : TimePolicy::uniform();
    ds = gen_cre_dataset(g, kind, a.n, policy, a.seed, *teacher, opts);
    if (!a.no_context) {
      const auto emb = make_embedder(a.embedder);
      const auto analyzer = make_analyzer(a.analyzer);
      ds.tuples = parallel_map(ds.tuples.size(), a.parallelism, [&](std::size_t i) {
        return attach_context(ds.tuples[i], g, *emb, analyzer.get(), a.context_k);
      });
    }
  }
  warn_all(ds.warnings);
  for (std::size_t i = 0; i < ds.tuples.size(); ++i) {
    for (const auto& p : check_tuple(ds.tuples[i], &g)) {
      fail(ErrorKind::build, "generated tuple " + std::to_string(i) + " is invalid: " + p);
    }
  }
  emit(a.out, serialize_dataset(ds.tuples, a.format == "dpo" ? DatasetFormat::dpo : DatasetFormat::jsonl));
  std::cerr << "wrote " << ds.tuples.size() << " tuples\n";
  return 0;
}

struct ScoreArgs {
  std::string dataset, candidates, out, embedder = "hash";
  bool synthesize = false;
  std::size_t group_size = 4, parallelism = 1;
  double w_sim = 0.7, w_form = 0.3;
};

int run_score(const ScoreArgs& a) {
  const auto tuples = read_dataset(a.dataset);
  const auto sets = a.synthesize ? synthesized_sets(tuples, a.group_size)
                                 : candidate_sets(tuples, parse_candidates(read_file(a.candidates)));
  const auto emb = make_embedder(a.embedder);
  const auto scored = score_groups(sets, *emb, RewardWeights{a.w_sim, a.w_form}, a.parallelism);
  warn_all(scored.warnings);
  emit(a.out, serialize_scored_groups(scored.groups));
  return 0;
}

struct TrainArgs {
  std::string scored, out, metrics;
  GrpoConfig config;
};

int run_train(const TrainArgs& a) {
  const auto result = train_toy(read_scored_groups(a.scored), a.config);
  std::string metrics;
  for (const auto& s : result.history) metrics += nlohmann::json(s).dump() + "\n";
  if (!a.metrics.empty()) write_file_atomic(a.metrics, metrics);
  const nlohmann::json out = {{"vocabulary", result.vocabulary},
                              {"policy", result.policy},
                              {"probabilities", result.policy.probabilities()},
                              {"config",
                               {{"beta", a.config.beta},
                                {"learning_rate", a.config.learning_rate},
                                {"steps", a.config.steps}}},
                              {"final", result.history.back()}};
  emit(a.out, canonical_dump(out) + "\n");
  const auto& first = result.history.front();
  const auto& last = result.history.back();
  std::cerr << "o_pos probability " << first.mean_pos_probability << " -> " << last.mean_pos_probability
            << ", KL to reference " << last.kl_to_ref << "\n";
  return 0;
}

struct ServeArgs {
  std::vector<std::string> graphs;
  std::string host = "127.0.0.1", store, generator = "echo", embedder = "hash", analyzer = "heuristic";
  int port = 8080;
  std::size_t k = 8, pool = 32;
};

int run_serve(const ServeArgs& a) {
  const auto emb = make_embedder(a.embedder);
  const auto analyzer = make_analyzer(a.analyzer);
  const auto gen = make_generator(a.generator);
  SystemClock clock;
  ServiceOptions opts;
  opts.retrieval.k = a.k;
  opts.retrieval.pool = a.pool;
  Service service(*emb, analyzer.get(), *gen, clock,
                  SessionStore(a.store.empty() ? std::nullopt : std::optional<std::filesystem::path>(a.store)), opts);
  service.recover();
  for (const auto& path : a.graphs) {
    const auto id = service.add_novel(load_graph(path));
    std::cerr << "loaded " << path << " as " << id << "\n";
  }
  HttpServer server(service);
  const int port = server.bind(a.host, a.port);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.start();
  // First stdout line: the bound address, for scripts that pass --port 0.
  std::cout << "listening on http://" << a.host << ":" << port << std::endl;
  while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  std::cerr << "stopped\n";
  return 0;
}

struct EvalArgs {
  std::string suite, judge = "rule", system_url, graph, novel_id, character, out, label, embedder = "hash";
  std::size_t parallelism = 1;
};

int run_eval(const EvalArgs& a) {
  const auto suite = parse_suite(read_file(a.suite));
  const auto judge = make_judge(a.judge);
  EvalReport report;
  if (!a.system_url.empty()) {
    HttpSystem system(a.system_url, a.novel_id);
    report = run_suite(suite, system, a.character, *judge, a.label.empty() ? a.system_url : a.label, a.parallelism);
  } else {
    const auto emb = make_embedder(a.embedder);
    EchoGenerator gen;
    SystemClock clock;
    Service service(*emb, nullptr, gen, clock);
    const auto id = service.add_novel(load_graph(a.graph));
    ServiceSystem system(service, id);
    report = run_suite(suite, system, a.character, *judge, a.label.empty() ? "in-process echo" : a.label,
                       a.parallelism);
  }
  emit(a.out, serialize_report(report));
  std::cerr << (suite.kind == EvalKind::rt ? "RT" : "TT") << " score " << report.score << " (" << report.correct
            << "/" << report.items.size() << ")\n";
  return 0;
}

struct SuiteArgs {
  std::string graph, kind = "TT", out;
  Ordinal t = 0;
  std::size_t n = kDefaultSuiteSize;
  std::uint64_t seed = 0;
};

int run_make_suite(const SuiteArgs& a) {
  EvalSuite suite;
  if (a.kind == "TT") {
    if (a.graph.empty()) fail(ErrorKind::config, "--kind TT requires --graph");
    const auto g = load_graph(a.graph);
    suite = make_tt_suite(g, a.t, a.n, a.seed);
    for (const auto& p : check_suite(suite, &g)) fail(ErrorKind::build, "generated suite is invalid: " + p);
  } else {
    suite = make_rt_suite(a.n, a.seed, a.t);
  }
  emit(a.out, serialize_suite(suite));
  return 0;
}

struct AuditArgs {
  std::string graph, suite, character, out, embedder = "hash";
  std::size_t k = 8, pool = 32, parallelism = 1;
};

int run_audit(const AuditArgs& a) {
  const auto g = load_graph(a.graph);
  const auto suite = parse_suite(read_file(a.suite));
  const auto emb = make_embedder(a.embedder);
  RetrievalConfig cfg;
  cfg.k = a.k;
  cfg.pool = a.pool;
  const auto r = gate_audit(g, suite, a.character, *emb, nullptr, cfg, a.parallelism);
  emit(a.out, canonical_dump(nlohmann::json(r)) + "\n");
  std::cerr << r.count() << " violations over " << r.retrieved << " retrieved items\n";
  return r.count() == 0 ? 0 : kExitRuntime;
}

int exit_code_for(const Error& e) {
  return e.kind() == ErrorKind::config ? kExitUsage : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diegesis: story-time-aware character role-play toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  bool offline = false;
  app.add_flag("--offline", offline, "Use deterministic stand-ins only; constructing any network client fails");

  const auto kinds = CLI::IsMember({"persona", "general_qa", "temporal_adversarial", "out_of_domain"});

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Segment a novel and extract a bundle");
  c_ingest->add_option("novel", ingest.novel, "Plain-text novel")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("-o,--out", ingest.out, "Bundle output file (default stdout)");
  c_ingest->add_option("--profiles", ingest.profiles, "JSON list of seed character profiles")->check(CLI::ExistingFile);
  c_ingest->add_option("--extractor", ingest.extractor, "rule or llm")->check(CLI::IsMember({"rule", "llm"}))->capture_default_str();
  c_ingest->add_option("--chapter-pattern", ingest.pattern, "Regex matching chapter heading lines")->capture_default_str();
  c_ingest->add_option("--span-budget", ingest.budget, "Span size budget in characters")->capture_default_str();
  c_ingest->add_option("--parallelism", ingest.parallelism, "Spans extracted concurrently")->capture_default_str();
  c_ingest->add_option("--report", ingest.report, "Write the validation report here");

  std::string build_in, build_out;
  auto* c_build = app.add_subcommand("build", "Validate a bundle and build the graph file");
  c_build->add_option("bundle", build_in, "Bundle file")->required()->check(CLI::ExistingFile);
  c_build->add_option("-o,--out", build_out, "Graph output file (default stdout)");

  QueryArgs query;
  auto* c_query = app.add_subcommand("query", "Retrieve gated context for a question");
  c_query->add_option("graph", query.graph, "Graph file")->required()->check(CLI::ExistingFile);
  c_query->add_option("--q", query.q, "Question text")->required();
  c_query->add_option("--t", query.t, "Story-time ordinal")->required();
  c_query->add_option("--k", query.k, "Items to return")->capture_default_str();
  c_query->add_option("--pool", query.pool, "Candidates per level before gating")->capture_default_str();
  c_query->add_option("--character", query.character, "Speaking character");
  c_query->add_option("--embedder", query.embedder, "hash or remote")->check(CLI::IsMember({"hash", "remote"}))->capture_default_str();
  c_query->add_option("--analyzer", query.analyzer, "heuristic or llm")->check(CLI::IsMember({"heuristic", "llm"}))->capture_default_str();
  c_query->add_option("-o,--out", query.out, "Output file (default stdout)");

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen-data", "Generate a preference dataset");
  c_gen->add_option("graph", gen.graph, "Graph file")->required()->check(CLI::ExistingFile);
  c_gen->add_option("--kind", gen.kind, "Dataset kind")->required()->check(kinds);
  c_gen->add_option("--n", gen.n, "Number of tuples")->capture_default_str();
  c_gen->add_option("--seed", gen.seed, "Base seed")->capture_default_str();
  c_gen->add_option("--character", gen.character, "Persona character (default: split --n across all profiles)");
  c_gen->add_option("--t", gen.t, "Fix the story time instead of sampling it");
  c_gen->add_option("--teacher", gen.teacher, "template or llm")->check(CLI::IsMember({"template", "llm"}))->capture_default_str();
  c_gen->add_option("--format", gen.format, "jsonl or dpo")->check(CLI::IsMember({"jsonl", "dpo"}))->capture_default_str();
  c_gen->add_option("--context-k", gen.context_k, "Context items attached to each tuple")->capture_default_str();
  c_gen->add_flag("--no-context", gen.no_context, "Do not attach retrieval context");
  c_gen->add_option("--embedder", gen.embedder, "hash or remote")->check(CLI::IsMember({"hash", "remote"}))->capture_default_str();
  c_gen->add_option("--analyzer", gen.analyzer, "heuristic or llm")->check(CLI::IsMember({"heuristic", "llm"}))->capture_default_str();
  c_gen->add_option("--parallelism", gen.parallelism, "Concurrent teacher calls")->capture_default_str();
  c_gen->add_option("-o,--out", gen.out, "Dataset output file (default stdout)");

  ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "Reward and normalize candidate groups");
  c_score->add_option("dataset", score.dataset, "Dataset file (jsonl)")->required()->check(CLI::ExistingFile);
  auto* cand = c_score->add_option("--candidates", score.candidates, "JSON lines of {prompt_id, candidates}")
                   ->check(CLI::ExistingFile);
  auto* synth = c_score->add_flag("--synthesize", score.synthesize, "Derive candidates from each tuple offline");
  cand->excludes(synth);
  c_score->add_option("--group-size", score.group_size, "Synthesized group size (2-4)")->capture_default_str();
  c_score->add_option("--w-sim", score.w_sim, "Semantic similarity weight")->capture_default_str();
  c_score->add_option("--w-form", score.w_form, "Form similarity weight")->capture_default_str();
  c_score->add_option("--embedder", score.embedder, "hash or remote")->check(CLI::IsMember({"hash", "remote"}))->capture_default_str();
  c_score->add_option("--parallelism", score.parallelism, "Groups scored concurrently")->capture_default_str();
  c_score->add_option("-o,--out", score.out, "Scored-group output file (default stdout)");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train-toy", "Run the toy policy optimizer on scored groups");
  c_train->add_option("scored", train.scored, "Scored-group file")->required()->check(CLI::ExistingFile);
  c_train->add_option("--beta", train.config.beta, "KL penalty weight")->capture_default_str();
  c_train->add_option("--steps", train.config.steps, "Optimizer steps")->capture_default_str();
  c_train->add_option("--lr", train.config.learning_rate, "Initial step size")->capture_default_str();
  c_train->add_option("--seed", train.config.seed, "Seed")->capture_default_str();
  c_train->add_option("--metrics", train.metrics, "Per-step metrics (JSON lines)");
  c_train->add_option("-o,--out", train.out, "Trained policy output file (default stdout)");

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("serve", "Run the session HTTP service until interrupted");
  c_serve->add_option("graphs", serve.graphs, "Graph files to host")->check(CLI::ExistingFile);
  c_serve->add_option("--host", serve.host, "Bind address")->capture_default_str();
  c_serve->add_option("--port", serve.port, "Port (0 picks a free one)")->capture_default_str();
  c_serve->add_option("--store", serve.store, "Directory for session logs and snapshots");
  c_serve->add_option("--generator", serve.generator, "echo or remote")->check(CLI::IsMember({"echo", "remote"}))->capture_default_str();
  c_serve->add_option("--embedder", serve.embedder, "hash or remote")->check(CLI::IsMember({"hash", "remote"}))->capture_default_str();
  c_serve->add_option("--analyzer", serve.analyzer, "heuristic or llm")->check(CLI::IsMember({"heuristic", "llm"}))->capture_default_str();
  c_serve->add_option("--k", serve.k, "Context items per reply")->capture_default_str();
  c_serve->add_option("--pool", serve.pool, "Candidates per level before gating")->capture_default_str();

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Score a system on an RT or TT suite");
  c_eval->add_option("--suite", eval.suite, "Suite file")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--judge", eval.judge, "rule or llm")->check(CLI::IsMember({"rule", "llm"}))->capture_default_str();
  auto* url = c_eval->add_option("--system-url", eval.system_url, "Base URL of a running server");
  auto* graph = c_eval->add_option("--graph", eval.graph, "Evaluate an in-process echo service on this graph")
                    ->check(CLI::ExistingFile);
  url->excludes(graph);
  c_eval->add_option("--novel-id", eval.novel_id, "Novel on the server (default: its only novel)");
  c_eval->add_option("--character", eval.character, "Character answering")->required();
  c_eval->add_option("--label", eval.label, "System label stored in the report");
  c_eval->add_option("--parallelism", eval.parallelism, "Items in flight")->capture_default_str();
  c_eval->add_option("-o,--out", eval.out, "Report output file (default stdout)");

  SuiteArgs suite;
  auto* c_suite = app.add_subcommand("make-suite", "Generate an RT or TT evaluation suite");
  c_suite->add_option("--graph", suite.graph, "Graph file (TT)")->check(CLI::ExistingFile);
  c_suite->add_option("--kind", suite.kind, "RT or TT")->check(CLI::IsMember({"RT", "TT"}))->capture_default_str();
  c_suite->add_option("--t", suite.t, "Story time the questions are asked at")->capture_default_str();
  c_suite->add_option("--n", suite.n, "Items")->capture_default_str();
  c_suite->add_option("--seed", suite.seed, "Seed")->capture_default_str();
  c_suite->add_option("-o,--out", suite.out, "Suite output file (default stdout)");

  AuditArgs audit;
  auto* c_audit = app.add_subcommand("audit", "Check that retrieval never returns items after each item's t");
  c_audit->add_option("graph", audit.graph, "Graph file")->required()->check(CLI::ExistingFile);
  c_audit->add_option("--suite", audit.suite, "Suite file")->required()->check(CLI::ExistingFile);
  c_audit->add_option("--character", audit.character, "Character the queries are asked of");
  c_audit->add_option("--k", audit.k, "Items per query")->capture_default_str();
  c_audit->add_option("--pool", audit.pool, "Candidates per level before gating")->capture_default_str();
  c_audit->add_option("--parallelism", audit.parallelism, "Queries in flight")->capture_default_str();
  c_audit->add_option("-o,--out", audit.out, "Audit output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  remote::set_offline(offline);
  try {
    if (c_ingest->parsed()) return run_ingest(ingest);
    if (c_build->parsed()) return run_build(build_in, build_out);
    if (c_query->parsed()) return run_query(query);
    if (c_gen->parsed()) return run_gen(gen);
    if (c_score->parsed()) {
      if (score.candidates.empty() && !score.synthesize) fail(ErrorKind::config, "score needs --candidates or --synthesize");
      return run_score(score);
    }
    if (c_train->parsed()) return run_train(train);
    if (c_serve->parsed()) return run_serve(serve);
    if (c_eval->parsed()) {
      if (eval.system_url.empty() && eval.graph.empty()) fail(ErrorKind::config, "eval needs --system-url or --graph");
      return run_eval(eval);
    }
    if (c_suite->parsed()) return run_make_suite(suite);
    if (c_audit->parsed()) return run_audit(audit);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
