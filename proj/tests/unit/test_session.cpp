#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "saptune/history.hpp"
#include "saptune/session.hpp"

using namespace saptune;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("saptune_session_" + name);
  fs::remove_all(dir);
  return dir;
}

SessionConfig small(Mode mode, const fs::path& out) {
  SessionConfig c;
  c.mode = mode;
  c.task.m = 600;
  c.task.n = 12;
  c.budget = 13;
  c.seed = 4;
  c.constants.num_repeats = 1;
  c.timing = TimingSource::OperationCount;
  c.out_dir = out;
  return c;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

int run(const SessionConfig& c, std::string* err_text = nullptr) {
  std::ostringstream log;
  std::ostringstream err;
  const int code = run_session_guarded(c, log, err);
  if (err_text) *err_text = err.str();
  return code;
}

bool summary_best_in_history(const fs::path& dir) {
  const auto summary = read_json(dir / "summary.json");
  const auto history = HistoryStore::read(dir / "history.jsonl");
  const auto& best = summary["best"];
  for (const auto& r : history) {
    if (r.iteration == best["iteration"].get<std::size_t>() && r.objective_value == best["objective"].get<double>() &&
        std::string(to_string(r.config.sap_algorithm)) == best["config"]["sap_algorithm"].get<std::string>()) {
      return true;
    }
  }
  return false;
}

#ifdef SAPTUNE_TOOL_PATH
int run_tool(const std::string& args) {
  const std::string cmd = std::string(SAPTUNE_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

}  // namespace

TEST(Session, TuneWritesArtifacts) {
  const fs::path dir = fresh_dir("tune");
  ASSERT_EQ(run(small(Mode::Tune, dir)), kExitOk);
  for (const char* f : {"summary.json", "history.jsonl", "session.csv"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_EQ(HistoryStore::read(dir / "history.jsonl").size(), 13u);
  const auto s = read_json(dir / "summary.json");
  EXPECT_EQ(s["evaluations"].get<std::size_t>(), 13u);
  EXPECT_GT(s["cumulative_seconds"].get<double>(), 0.0);
  EXPECT_TRUE(summary_best_in_history(dir));

  // A second run replaces the history rather than appending to it.
  ASSERT_EQ(run(small(Mode::Tune, dir)), kExitOk);
  EXPECT_EQ(HistoryStore::read(dir / "history.jsonl").size(), 13u);
}

TEST(Session, DeterministicGivenSeed) {
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  ASSERT_EQ(run(small(Mode::Tune, a)), kExitOk);
  ASSERT_EQ(run(small(Mode::Tune, b)), kExitOk);
  const auto ha = HistoryStore::read(a / "history.jsonl");
  const auto hb = HistoryStore::read(b / "history.jsonl");
  ASSERT_EQ(ha.size(), hb.size());
  for (std::size_t i = 0; i < ha.size(); ++i) {
    EXPECT_EQ(ha[i].config, hb[i].config);
    EXPECT_EQ(ha[i].objective_value, hb[i].objective_value);
  }
}

TEST(Session, RandomMatchesTuneRecordCount) {
  const fs::path dir = fresh_dir("random");
  ASSERT_EQ(run(small(Mode::Random, dir)), kExitOk);
  const auto h = HistoryStore::read(dir / "history.jsonl");
  ASSERT_EQ(h.size(), 13u);
  EXPECT_EQ(h[0].role, "reference");
  EXPECT_EQ(h[1].role, "random");
  EXPECT_TRUE(summary_best_in_history(dir));
}

TEST(Session, TlaStartsWithReferenceAndSourceBest) {
  const fs::path src = fresh_dir("tla_src");
  SessionConfig source = small(Mode::Random, src);
  source.task.m = 300;
  ASSERT_EQ(run(source), kExitOk);
  const fs::path dir = fresh_dir("tla");
  SessionConfig c = small(Mode::Tla, dir);
  c.budget = 6;
  c.sources = {src / "history.jsonl"};
  ASSERT_EQ(run(c), kExitOk);
  const auto h = HistoryStore::read(dir / "history.jsonl");
  ASSERT_EQ(h.size(), 6u);
  EXPECT_EQ(h[0].role, "reference");
  EXPECT_EQ(h[1].role, "source-best");
  EXPECT_TRUE(summary_best_in_history(dir));
}

TEST(Session, GenerateSolveGridSensitivity) {
  const fs::path gen = fresh_dir("generate");
  ASSERT_EQ(run(small(Mode::Generate, gen)), kExitOk);
  const LsProblem p = load_problem(gen / "problem.bin");
  EXPECT_EQ(p.rows(), 600u);

  const fs::path solve = fresh_dir("solve");
  SessionConfig sc = small(Mode::Solve, solve);
  sc.task.file = gen / "problem.bin";
  ASSERT_EQ(run(sc), kExitOk);
  EXPECT_TRUE(fs::exists(solve / "solution.txt"));

  const fs::path sens = fresh_dir("sensitivity");
  SessionConfig se = small(Mode::Sensitivity, sens);
  se.budget = 24;
  se.base_n = 64;
  ASSERT_EQ(run(se), kExitOk);
  EXPECT_TRUE(fs::exists(sens / "sensitivity.csv"));
  EXPECT_EQ(read_json(sens / "summary.json")["indices"].size(), 5u);
}

TEST(Session, GridReducedResumes) {
  const fs::path dir = fresh_dir("grid");
  SessionConfig c = small(Mode::Grid, dir);
  c.task.m = 200;
  c.task.n = 6;
  c.grid = "reduced";
  ASSERT_EQ(run(c), kExitOk);
  EXPECT_EQ(read_json(dir / "summary.json")["evaluated_now"].get<std::size_t>(), 1080u);
  ASSERT_EQ(run(c), kExitOk);
  EXPECT_EQ(read_json(dir / "summary.json")["evaluated_now"].get<std::size_t>(), 0u);
  EXPECT_TRUE(fs::exists(dir / "landscape.csv"));
}

TEST(Session, UserErrorsExitWithOne) {
  const fs::path dir = fresh_dir("errors");
  SessionConfig c = small(Mode::Tune, dir);
  c.budget = 5;
  std::string err;
  EXPECT_EQ(run(c, &err), kExitUserError);
  EXPECT_NE(err.find("budget"), std::string::npos);

  SessionConfig t = small(Mode::Tla, dir);
  EXPECT_EQ(run(t), kExitUserError);
  t.sources = {dir / "missing.jsonl"};
  EXPECT_EQ(run(t), kExitUserError);

  SessionConfig f = small(Mode::Tune, dir);
  f.task.file = dir / "missing.bin";
  EXPECT_EQ(run(f), kExitUserError);

  SessionConfig g = small(Mode::Grid, dir);
  g.grid = "medium";
  EXPECT_EQ(run(g), kExitUserError);
  EXPECT_THROW(parse_mode("bogus"), UserError);
  EXPECT_THROW(apply_config_file(c, dir / "nope.json"), UserError);
}

TEST(Session, RuntimeFailureExitsWithTwo) {
  const fs::path dir = fresh_dir("runtime");
  fs::create_directories(dir);
  // A consistent system has no usable reference error.
  DenseMatrix A = generate_problem(ProblemKind::GA, 200, 5, 1).A;
  Vector x = Vector::Ones(5);
  save_problem(make_problem(A, A * x), dir / "consistent.bin");
  SessionConfig c = small(Mode::Tune, dir / "out");
  c.task.file = dir / "consistent.bin";
  std::string err;
  EXPECT_EQ(run(c, &err), kExitRuntimeFailure);
  EXPECT_FALSE(err.empty());
}

TEST(Session, DefaultsMatchPublishedConstants) {
  const SessionConfig c;
  EXPECT_EQ(c.constants.num_pilots, 10);
  EXPECT_EQ(c.constants.num_repeats, 5);
  EXPECT_EQ(c.constants.penalty_factor, 2.0);
  EXPECT_EQ(c.constants.allowance_factor, 10.0);
  EXPECT_EQ(c.exploration, 4.0);
  EXPECT_EQ(c.base_n, 512u);
}

TEST(Session, ConfigFileKeys) {
  const fs::path dir = fresh_dir("config");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "c.json");
    out << R"({"mode": "random", "task": {"kind": "T3", "m": 700, "n": 14, "seed": 3}, "budget": 21,
               "constants": {"num_repeats": 2}, "timing": "operations", "grid": "reduced", "exploration": 2.5})";
  }
  SessionConfig c;
  apply_config_file(c, dir / "c.json");
  EXPECT_EQ(c.mode, Mode::Random);
  EXPECT_EQ(c.task.kind, ProblemKind::T3);
  EXPECT_EQ(c.task.m, 700u);
  EXPECT_EQ(c.task.seed, 3u);
  EXPECT_EQ(c.budget, 21u);
  EXPECT_EQ(c.constants.num_repeats, 2);
  EXPECT_EQ(c.constants.num_pilots, 10);
  EXPECT_EQ(c.timing, TimingSource::OperationCount);
  EXPECT_EQ(c.grid, "reduced");
  EXPECT_EQ(c.exploration, 2.5);
}

TEST(Session, OutputRootFromEnvironment) {
  const fs::path root = fresh_dir("env_root");
  ::setenv("SAPTUNE_OUT", root.c_str(), 1);
  EXPECT_EQ(default_output_root(), root);
  SessionConfig c = small(Mode::Generate, {});
  EXPECT_EQ(run(c), kExitOk);
  EXPECT_TRUE(fs::exists(root / "generate" / "problem.bin"));
  ::unsetenv("SAPTUNE_OUT");
  EXPECT_EQ(default_output_root(), fs::path("saptune-out"));
}

#ifdef SAPTUNE_TOOL_PATH
TEST(Cli, FlagsOverrideConfigFile) {
  const fs::path dir = fresh_dir("cli");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "c.json");
    out << R"({"mode": "random", "task": {"m": 500, "n": 10}, "budget": 9, "seed": 5,
               "constants": {"num_repeats": 1}, "timing": "operations"})";
  }
  ASSERT_EQ(run_tool("--config " + (dir / "c.json").string() + " --budget 7 --out " + (dir / "out").string()), 0);
  const auto s = read_json(dir / "out" / "summary.json");
  EXPECT_EQ(s["evaluations"].get<std::size_t>(), 7u);
  EXPECT_EQ(s["seed"].get<std::uint64_t>(), 5u);
  EXPECT_EQ(s["mode"].get<std::string>(), "random");
  EXPECT_EQ(s["task"]["m"].get<std::size_t>(), 500u);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = fresh_dir("cli_codes");
  EXPECT_EQ(run_tool("--mode nope"), 1);
  EXPECT_EQ(run_tool("--mode tla --m 300 --n 10 --budget 3 --out " + dir.string()), 1);
  EXPECT_EQ(run_tool("--unknown-flag"), 1);
  EXPECT_EQ(run_tool("--mode generate --m 300 --n 10 --out " + dir.string()), 0);
  EXPECT_EQ(run_tool("--help"), 0);
}
#endif
