#include <gtest/gtest.h>

#include <sparse_strike/cli.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sparse_strike;
namespace fs = std::filesystem;

namespace {

const std::string kPong = std::string(SS_SOURCE_DIR) + "/policies/mini_pong_expert.json";

Command parse(std::vector<std::string> args) {
  args.insert(args.begin(), "sparse_strike");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  return parse_args(int(argv.size()), argv.data());
}

int call(std::vector<std::string> args, std::string *out = nullptr, std::string *err = nullptr) {
  args.insert(args.begin(), "sparse_strike");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int rc = main_entry(int(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return rc;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sparse_strike_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string &name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST(ParseArgs, AttackCommand) {
  auto c = parse({"attack", "--policy", "p.json", "--env", "mini_pong", "--fsa-size", "1", "--tca-threshold", "0.5",
                  "--seed", "7", "--out", "run/"});
  EXPECT_EQ(c.name, "attack");
  EXPECT_EQ(c.campaign.policy_path, "p.json");
  EXPECT_EQ(c.campaign.env.kind, EnvKind::mini_pong);
  EXPECT_EQ(c.campaign.fsa.n, 1);
  EXPECT_FALSE(c.campaign.tca.mean_of_trajectory);
  EXPECT_EQ(c.campaign.tca.threshold, 0.5);
  EXPECT_EQ(c.campaign.base_seed, 7u);
  EXPECT_EQ(c.out, "run/");
  EXPECT_FALSE(c.shape_given);
}

TEST(ParseArgs, Defaults) {
  ::unsetenv("SPARSE_STRIKE_SEED");
  auto c = parse({"attack", "--policy", "p.json", "--out", "o"});
  EXPECT_TRUE(c.campaign.tca.mean_of_trajectory);
  EXPECT_EQ(c.campaign.runs, 30);
  EXPECT_EQ(c.campaign.ga.population_size, 10);
  EXPECT_EQ(c.campaign.ga.max_evaluations, 400);
  EXPECT_EQ(c.campaign.ga.selection_rate, 0.2);
  EXPECT_EQ(c.campaign.ga.mutation_rate, 0.1);
  EXPECT_EQ(c.campaign.base_seed, 0u);
  EXPECT_EQ(c.campaign.fsa.target_channels, TargetChannels::newest_only);
}

TEST(ParseArgs, SweepRanges) {
  auto c = parse({"sweep-fsa", "--policy", "p.json", "--out", "o", "--sizes", "1:10"});
  ASSERT_TRUE(c.campaign.sweep);
  EXPECT_EQ(c.campaign.sweep->fsa_sizes, (std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}));
  auto l = parse({"sweep-fsa", "--policy", "p.json", "--out", "o", "--sizes", "1,2,4,8"});
  EXPECT_EQ(l.campaign.sweep->fsa_sizes, (std::vector<int>{1, 2, 4, 8}));
  auto t = parse({"sweep-tca", "--policy", "p.json", "--out", "o"});
  ASSERT_EQ(t.campaign.sweep->tca_thresholds.size(), 11u);
  EXPECT_EQ(t.campaign.sweep->tca_thresholds[3], 0.3);
  EXPECT_EQ(t.campaign.sweep->tca_thresholds[10], 1.0);
}

TEST(ParseArgs, UsageErrors) {
  EXPECT_THROW(parse({"attack", "--policy", "p.json", "--out", "o", "--fsa-size", "0"}), UsageError);
  EXPECT_THROW(parse({"attack", "--policy", "p.json", "--out", "o", "--bogus"}), UsageError);
  EXPECT_THROW(parse({"attack", "--out", "o"}), UsageError);
  EXPECT_THROW(parse({"attack", "--policy", "p.json"}), UsageError);
  EXPECT_THROW(parse({"explode"}), UsageError);
  EXPECT_THROW(parse({}), UsageError);
  EXPECT_THROW(parse({"attack", "--policy", "p", "--out", "o", "--tca-threshold", "0.3", "--tca-mean-of-trajectory"}),
               UsageError);
  EXPECT_THROW(parse({"attack", "--policy", "p", "--out", "o", "--tca-threshold", "1.5"}), UsageError);
  EXPECT_THROW(parse({"attack", "--policy", "p", "--out", "o", "--shape", "32x32"}), UsageError);
  EXPECT_THROW(parse({"attack", "--policy", "p", "--out", "o", "--env", "breakout"}), UsageError);
  EXPECT_THROW(parse({"attack", "--policy", "p", "--out", "o", "--selection-rate", "0.3"}), UsageError);
  EXPECT_THROW(parse({"sweep-fsa", "--policy", "p", "--out", "o", "--sizes", "3:1"}), UsageError);
  EXPECT_THROW(parse({"compare-init", "--policy", "p", "--out", "o"}), UsageError);
  EXPECT_THROW(parse({"report"}), UsageError);
  EXPECT_EQ(call({"attack", "--fsa-size", "0", "--policy", "p", "--out", "o"}), kExitUsage);
}

TEST(ParseArgs, Help) {
  std::string out;
  EXPECT_EQ(call({"attack", "--help"}, &out), kExitOk);
  EXPECT_NE(out.find("--fsa-size"), std::string::npos);
}

TEST_F(CliDir, ConfigFilePrecedence) {
  std::ofstream(path("cfg.json")) << R"({"fsa_size": 3, "runs": 5, "seed": 11, "tca_threshold": 0.2})";
  auto c = parse({"attack", "--config", path("cfg.json"), "--policy", "p", "--out", "o", "--runs", "2"});
  EXPECT_EQ(c.campaign.fsa.n, 3);
  EXPECT_EQ(c.campaign.runs, 2);
  EXPECT_EQ(c.campaign.base_seed, 11u);
  EXPECT_FALSE(c.campaign.tca.mean_of_trajectory);
  EXPECT_EQ(c.campaign.tca.threshold, 0.2);
  auto m = parse({"attack", "--config", path("cfg.json"), "--policy", "p", "--out", "o", "--tca-mean-of-trajectory"});
  EXPECT_TRUE(m.campaign.tca.mean_of_trajectory);

  std::ofstream(path("bad.json")) << R"({"fsa_size": 3, "colour": "red"})";
  EXPECT_THROW(parse({"attack", "--config", path("bad.json"), "--policy", "p", "--out", "o"}), UsageError);
  std::ofstream(path("broken.json")) << "{";
  EXPECT_THROW(parse({"attack", "--config", path("broken.json"), "--policy", "p", "--out", "o"}), UsageError);
  EXPECT_THROW(parse({"attack", "--config", path("missing.json"), "--policy", "p", "--out", "o"}), UsageError);
}

TEST_F(CliDir, SeedEnvironmentFallback) {
  std::ofstream(path("cfg.json")) << R"({"seed": 11})";
  ::setenv("SPARSE_STRIKE_SEED", "42", 1);
  EXPECT_EQ(parse({"attack", "--policy", "p", "--out", "o"}).campaign.base_seed, 42u);
  EXPECT_EQ(parse({"attack", "--config", path("cfg.json"), "--policy", "p", "--out", "o"}).campaign.base_seed, 11u);
  EXPECT_EQ(parse({"attack", "--seed", "3", "--policy", "p", "--out", "o"}).campaign.base_seed, 3u);
  ::setenv("SPARSE_STRIKE_SEED", "nope", 1);
  EXPECT_THROW(parse({"attack", "--policy", "p", "--out", "o"}), UsageError);
  ::unsetenv("SPARSE_STRIKE_SEED");
}

TEST_F(CliDir, BaselineMatchesClosedGateAttack) {
  ASSERT_EQ(call({"baseline", "--policy", kPong, "--runs", "2", "--seed", "7", "--max-steps", "150", "--out",
                  path("base")}),
            kExitOk);
  ASSERT_EQ(call({"attack", "--policy", kPong, "--runs", "2", "--seed", "7", "--max-steps", "150", "--tca-threshold",
                  "0", "--out", path("att")}),
            kExitOk);
  auto base = slurp(dir_ / "base" / "summary.csv");
  auto att = slurp(dir_ / "att" / "summary.csv");
  EXPECT_EQ(base.substr(0, base.find('\n')), kSummaryHeader);
  // same numbers, different row label
  EXPECT_EQ(base.substr(base.find("\nbaseline,0,") + 12), att.substr(att.find("\ntca_threshold,0,") + 17));
  auto meta = nlohmann::json::parse(slurp(dir_ / "att" / "meta.json"));
  EXPECT_EQ(meta["tool"], "sparse_strike");
  EXPECT_EQ(meta["seed"], 7);
  EXPECT_FALSE(meta.contains("threads"));
}

TEST_F(CliDir, EpisodesIdenticalAcrossThreads) {
  for (const char *t : {"1", "3"})
    ASSERT_EQ(call({"attack", "--policy", kPong, "--runs", "3", "--max-steps", "40", "--threads", t, "--out",
                    path(std::string("t") + t)}),
              kExitOk);
  EXPECT_EQ(slurp(dir_ / "t1" / "episodes.jsonl"), slurp(dir_ / "t3" / "episodes.jsonl"));
  EXPECT_EQ(slurp(dir_ / "t1" / "meta.json"), slurp(dir_ / "t3" / "meta.json"));
}

TEST_F(CliDir, SweepAndReport) {
  std::string out;
  ASSERT_EQ(call({"sweep-tca", "--policy", kPong, "--runs", "2", "--max-steps", "30", "--thresholds", "0,0.5", "--out",
                  path("st")},
                 &out),
            kExitOk);
  EXPECT_NE(out.find("tca_threshold=0.5"), std::string::npos);
  auto lines = slurp(dir_ / "st" / "episodes.jsonl");
  std::istringstream in(lines);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["sweep_param"], "tca_threshold");
    EXPECT_EQ(j["value"], n < 2 ? "0" : "0.5");
    ++n;
  }
  EXPECT_EQ(n, 4);

  std::string report;
  ASSERT_EQ(call({"report", "--in", path("st"), "--format", "plotdata"}, &report), kExitOk);
  EXPECT_EQ(report.substr(0, report.find('\n')), "series,sweep_param,x,y,err");
  EXPECT_NE(report.find("\nreward,tca_threshold,0,"), std::string::npos);
  EXPECT_NE(report.find("\nattacked_frames,tca_threshold,0,0,0\n"), std::string::npos);
  ASSERT_EQ(call({"report", "--in", path("st"), "--format", "table", "--out", path("r.md")}), kExitOk);
  EXPECT_NE(slurp(dir_ / "r.md").find("| tca_threshold | 0.5 |"), std::string::npos);
  EXPECT_EQ(call({"report", "--in", path("nothing")}), kExitRuntime);
}

TEST_F(CliDir, RecordIsBitExact) {
  for (const char *name : {"a.traj", "b.traj"})
    ASSERT_EQ(call({"record", "--env", "mini_pong", "--agent", "scripted", "--seed", "7", "--max-steps", "500", "--out",
                    path(name)}),
              kExitOk);
  const auto a = slurp(dir_ / "a.traj");
  EXPECT_EQ(a, slurp(dir_ / "b.traj"));
  EXPECT_EQ(a, slurp(std::string(SS_SOURCE_DIR) + "/tests/data/pong_scripted_seed7.traj"));
  ASSERT_EQ(call({"record", "--agent", "policy", "--policy", kPong, "--seed", "7", "--max-steps", "500", "--out",
                  path("c.traj")}),
            kExitOk);
  // the distilled expert clones the scripted controller
  EXPECT_EQ(slurp(dir_ / "c.traj"), a);
}

TEST_F(CliDir, CompareInitAndDistill) {
  ASSERT_EQ(call({"distill", "--env", "grid_chase", "--shape", "8x8x2", "--out", path("g.json")}), kExitOk);
  std::string out;
  ASSERT_EQ(call({"compare-init", "--policy", std::string(SS_SOURCE_DIR) + "/policies/pixel_trigger.json",
                  "--trajectory", std::string(SS_SOURCE_DIR) + "/tests/data/grid_chase_8x8_seed3.traj", "--trials", "2",
                  "--max-frames", "3", "--tca-threshold", "1", "--out", path("ci")},
                 &out),
            kExitOk);
  auto csv = slurp(dir_ / "ci" / "compare_init.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "frame,mode,trial,evaluations,best_objective");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 2 * 2);
  EXPECT_NE(out.find("median_evals_warm_start="), std::string::npos);
}

TEST_F(CliDir, RuntimeErrorsExitOne) {
  std::string err;
  EXPECT_EQ(call({"attack", "--policy", path("none.json"), "--out", path("x")}, nullptr, &err), kExitRuntime);
  EXPECT_NE(err.find("cannot open policy file"), std::string::npos);
  // policy/environment mismatch
  EXPECT_EQ(call({"attack", "--policy", kPong, "--env", "grid_chase", "--runs", "1", "--out", path("y")}), kExitRuntime);
}
