#include <gtest/gtest.h>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "diegesis/core/json_io.hpp"
#include "diegesis/ingest/bundle_io.hpp"
#include "diegesis/remote/sse.hpp"
#include "fixtures.hpp"

namespace diegesis {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the CLI with argv, capturing stdout and stderr through temp files.
Run run_cli(const std::vector<std::string>& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const pid_t pid = fork();
  if (pid == 0) {
    const int o = open(out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    const int e = open(err.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    dup2(o, 1);
    dup2(e, 2);
    std::vector<char*> argv;
    std::string path = DIEGESIS_CLI_PATH;
    argv.push_back(path.data());
    std::vector<std::string> copy = args;
    for (auto& a : copy) argv.push_back(a.data());
    argv.push_back(nullptr);
    execv(path.c_str(), argv.data());
    _exit(127);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("diegesis-cli-" + std::to_string(getpid()) + "-" +
           ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string p(const std::string& name) const { return (dir / name).string(); }

  // Ingests and builds the sample novel; returns the graph path.
  std::string sample_graph() {
    const auto a = run_cli({"--offline", "ingest", testing::samples_path("nautilus.txt"), "--profiles",
                            testing::samples_path("nautilus_profiles.json"), "-o", p("bundle.json")},
                           dir);
    EXPECT_EQ(a.code, 0) << a.err;
    const auto b = run_cli({"build", p("bundle.json"), "-o", p("graph.json")}, dir);
    EXPECT_EQ(b.code, 0) << b.err;
    return p("graph.json");
  }

  fs::path dir;
};

TEST_F(CliTest, MissingInputFileIsUsageError) {
  const auto r = run_cli({"build", p("absent.json")}, dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("absent.json"), std::string::npos);
}

TEST_F(CliTest, MalformedInputIsRuntimeError) {
  write_file_atomic(p("bad.json"), "{not json");
  const auto r = run_cli({"build", p("bad.json")}, dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error (parse)"), std::string::npos) << r.err;
}

TEST_F(CliTest, OfflineRejectsRemoteChoices) {
  const auto g = sample_graph();
  const std::vector<std::vector<std::string>> cases = {
      {"--offline", "ingest", testing::samples_path("nautilus.txt"), "--extractor", "llm"},
      {"--offline", "query", g, "--q", "x", "--t", "0", "--embedder", "remote"},
      {"--offline", "gen-data", g, "--kind", "general_qa", "--teacher", "llm"},
      {"--offline", "serve", g, "--generator", "remote", "--port", "0"},
  };
  for (const auto& args : cases) {
    const auto r = run_cli(args, dir);
    EXPECT_EQ(r.code, 1) << args[1];
    EXPECT_NE(r.err.find("error (config)"), std::string::npos) << r.err;
  }
}

TEST_F(CliTest, InvalidBundleReportsAndExitsTwo) {
  auto bundle = testing::verne_bundle();
  bundle.events.front().participants.push_back("Nobody Known");
  write_file_atomic(p("broken.json"), serialize_bundle(bundle));
  const auto r = run_cli({"build", p("broken.json"), "-o", p("g.json")}, dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Nobody Known"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(p("g.json")));
}

TEST_F(CliTest, BuildIsByteIdentical) {
  const auto g = sample_graph();
  ASSERT_EQ(run_cli({"build", p("bundle.json"), "-o", p("graph2.json")}, dir).code, 0);
  EXPECT_EQ(read_file(g), read_file(p("graph2.json")));
  ASSERT_EQ(run_cli({"build", p("bundle.json")}, dir).code, 0);
  EXPECT_EQ(read_file(p("stdout.txt")), read_file(g));
}

TEST_F(CliTest, QueryIsDeterministicAndGated) {
  const auto g = sample_graph();
  const std::vector<std::string> args = {"--offline", "query", g, "--q", "What happened at Vanikoro?", "--t", "2"};
  const auto a = run_cli(args, dir);
  const auto b = run_cli(args, dir);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto j = nlohmann::json::parse(a.out);
  ASSERT_FALSE(j.at("items").empty());
  for (const auto& item : j.at("items")) EXPECT_LE(item.at("anchor").get<Ordinal>(), 2u);
}

TEST_F(CliTest, GenDataScoreTrainPipeline) {
  const auto g = sample_graph();
  const std::vector<std::string> gen = {"--offline", "gen-data", g,  "--kind", "temporal_adversarial",
                                        "--n",       "12",       "--seed", "7", "-o"};
  auto first = gen, second = gen;
  first.push_back(p("d1.jsonl"));
  second.push_back(p("d2.jsonl"));
  ASSERT_EQ(run_cli(first, dir).code, 0);
  ASSERT_EQ(run_cli(second, dir).code, 0);
  EXPECT_EQ(read_file(p("d1.jsonl")), read_file(p("d2.jsonl")));

  const auto s = run_cli({"--offline", "score", p("d1.jsonl"), "--synthesize", "-o", p("s.jsonl")}, dir);
  ASSERT_EQ(s.code, 0) << s.err;
  const auto t = run_cli({"train-toy", p("s.jsonl"), "--steps", "30", "--metrics", p("m.jsonl"), "-o", p("pi.json")},
                         dir);
  ASSERT_EQ(t.code, 0) << t.err;
  const auto pi = nlohmann::json::parse(read_file(p("pi.json")));
  const auto probs = pi.at("probabilities").get<std::vector<double>>();
  double total = 0;
  for (double q : probs) total += q;
  EXPECT_NEAR(total, 1.0, 1e-9);
  std::size_t lines = 0;
  for (char c : read_file(p("m.jsonl"))) lines += c == '\n';
  EXPECT_EQ(lines, 31u);  // step 0 plus one record per step

  const auto none = run_cli({"score", p("d1.jsonl")}, dir);
  EXPECT_EQ(none.code, 1);
}

TEST_F(CliTest, PersonaWithoutCharacterSplitsAcrossProfiles) {
  const auto g = sample_graph();
  const auto r = run_cli({"--offline", "gen-data", g, "--kind", "persona", "--n", "7", "--seed", "2"}, dir);
  ASSERT_EQ(r.code, 0) << r.err;
  std::set<std::string> characters;
  std::size_t lines = 0;
  std::size_t pos = 0;
  while (pos < r.out.size()) {
    const auto nl = r.out.find('\n', pos);
    const auto j = nlohmann::json::parse(r.out.substr(pos, nl - pos));
    characters.insert(j.at("prompt").at("character").get<std::string>());
    ++lines;
    pos = nl + 1;
  }
  EXPECT_EQ(lines, 7u);
  EXPECT_GT(characters.size(), 1u);
}

TEST_F(CliTest, SuiteAuditAndEvalInProcess) {
  const auto g = sample_graph();
  ASSERT_EQ(run_cli({"make-suite", "--graph", g, "--kind", "TT", "--t", "1", "--n", "10", "-o", p("tt.json")}, dir).code,
            0);
  const auto audit = run_cli({"--offline", "audit", g, "--suite", p("tt.json")}, dir);
  EXPECT_EQ(audit.code, 0) << audit.err;
  EXPECT_EQ(nlohmann::json::parse(audit.out).at("violation_count"), 0);
  const auto ev = run_cli({"--offline", "eval", "--suite", p("tt.json"), "--graph", g, "--character", "Captain Nemo"}, dir);
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_EQ(nlohmann::json::parse(ev.out).at("items").size(), 10u);
}

TEST_F(CliTest, HelpListsEverySubcommandsFlags) {
  const std::vector<std::pair<std::string, std::string>> expect = {
      {"ingest", "--chapter-pattern"}, {"build", "--out"},        {"query", "--pool"},
      {"gen-data", "--teacher"},       {"score", "--w-form"},     {"train-toy", "--beta"},
      {"serve", "--port"},             {"eval", "--system-url"}, {"make-suite", "--kind"},
      {"audit", "--suite"}};
  for (const auto& [cmd, flag] : expect) {
    const auto r = run_cli({cmd, "--help"}, dir);
    EXPECT_EQ(r.code, 0) << cmd;
    EXPECT_NE(r.out.find(flag), std::string::npos) << cmd << " help lacks " << flag;
  }
  const auto top = run_cli({"--help"}, dir);
  EXPECT_EQ(top.code, 0);
  EXPECT_NE(top.out.find("--offline"), std::string::npos);
}

// Starts `serve --port 0`, reads the announced port, and returns the pid.
pid_t start_server(const std::vector<std::string>& extra, const fs::path& dir, int& port) {
  const fs::path out = dir / "serve.out";
  const pid_t pid = fork();
  if (pid == 0) {
    const int o = open(out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    const int e = open((dir / "serve.err").c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    dup2(o, 1);
    dup2(e, 2);
    std::string path = DIEGESIS_CLI_PATH;
    std::vector<std::string> args = {path, "--offline", "serve", "--port", "0"};
    args.insert(args.end(), extra.begin(), extra.end());
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    execv(path.c_str(), argv.data());
    _exit(127);
  }
  port = 0;
  for (int i = 0; i < 200 && port == 0; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
    const auto text = fs::exists(out) ? read_file(out) : std::string();
    const auto colon = text.rfind(':');
    if (text.find('\n') != std::string::npos && colon != std::string::npos) port = std::stoi(text.substr(colon + 1));
  }
  return pid;
}

int stop_server(pid_t pid) {
  kill(pid, SIGINT);
  int status = 0;
  waitpid(pid, &status, 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(CliTest, ServeHandlesOfflineTurnAndStopsOnSigint) {
  const auto g = sample_graph();
  int port = 0;
  const pid_t pid = start_server({g, "--store", p("store")}, dir, port);
  ASSERT_GT(port, 0) << read_file(dir / "serve.err");

  httplib::Client cli("127.0.0.1", port);
  const auto health = cli.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  const auto novels = nlohmann::json::parse(cli.Get("/api/novels")->body).at("novels");
  ASSERT_EQ(novels.size(), 1u);
  const nlohmann::json create = {{"novel_id", novels[0]}, {"characters", {"Captain Nemo"}}, {"t0", 2}};
  const auto created = cli.Post("/api/sessions", create.dump(), "application/json");
  ASSERT_EQ(created->status, 201) << created->body;
  const auto sid = nlohmann::json::parse(created->body).at("session_id").get<std::string>();

  const nlohmann::json turn = {{"text", "Who are you?"}, {"target", "Captain Nemo"}};
  const auto posted = cli.Post("/api/sessions/" + sid + "/messages", turn.dump(), "application/json");
  ASSERT_EQ(posted->status, 200);
  remote::SseParser parser;
  std::vector<remote::SseEvent> events = parser.feed(posted->body);
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events.back().event, "done");
  EXPECT_NE(events.back().data.find("You said: Who are you?"), std::string::npos);

  const auto hist = nlohmann::json::parse(cli.Get("/api/sessions/" + sid + "/history")->body);
  EXPECT_EQ(hist.at("total"), 2);

  // A second server on the same port fails with a clear message.
  const auto busy = run_cli({"--offline", "serve", g, "--port", std::to_string(port)}, dir);
  EXPECT_EQ(busy.code, 2);
  EXPECT_NE(busy.err.find("cannot bind"), std::string::npos) << busy.err;

  EXPECT_EQ(stop_server(pid), 0);
  EXPECT_TRUE(fs::exists(dir / "store" / (sid + ".log")));
}

}  // namespace
}  // namespace diegesis
