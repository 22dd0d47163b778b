#include <gtest/gtest.h>

#include <sparse_strike/campaign.hpp>
#include <sparse_strike/distill.hpp>

#include <cmath>
#include <sstream>

using namespace sparse_strike;

namespace {

CampaignConfig pong_config(int max_steps, int runs) {
  CampaignConfig c;
  c.env = EnvSpec::defaults(EnvKind::mini_pong);
  c.env.max_steps = max_steps;
  c.runs = runs;
  c.base_seed = 0;
  c.tca = TcaSetting{true, 0.0};
  return c;
}

// Zero weights, fixed non-uniform output: discrepancy is the same negative
// number for every genome, so no attack can succeed.
PolicySpec frozen_policy(StateShape shape) {
  auto p = frozen_uniform_policy(shape, 3);
  p.layers[0].bias = {1.0, 0.0, 0.0};
  return p;
}

std::string dump_all(const std::vector<EpisodeRecord> &eps) {
  std::string out;
  for (const auto &e : eps) out += episode_to_json(e).dump() + "\n";
  return out;
}

EpisodeRecord fake(double reward, int attacked, int total) {
  EpisodeRecord r;
  r.accumulated_reward = reward;
  r.attacked_frames = attacked;
  r.total_frames = total;
  return r;
}

}  // namespace

TEST(Summarize, Statistics) {
  auto row = summarize({fake(1, 0, 10), fake(3, 2, 10)});
  EXPECT_DOUBLE_EQ(row.mean_reward, 2.0);
  EXPECT_NEAR(row.std_reward, std::sqrt(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(row.mean_attacked_frames, 1.0);
  EXPECT_DOUBLE_EQ(row.std_total_frames, 0.0);
  EXPECT_EQ(row.runs, 2);
  EXPECT_FALSE(row.single_run);
}

TEST(Summarize, DegenerateCases) {
  auto one = summarize({fake(5, 1, 3)});
  EXPECT_EQ(one.std_reward, 0.0);
  EXPECT_TRUE(one.single_run);
  EXPECT_EQ(one.runs, 1);
  auto same = summarize(std::vector<EpisodeRecord>(30, fake(4, 2, 9)));
  EXPECT_EQ(same.std_reward, 0.0);
  EXPECT_EQ(same.mean_reward, 4.0);
  EXPECT_THROW(summarize({}), InputError);
}

TEST(Campaign, ClosedGateEqualsBaseline) {
  auto policy = distill_mini_pong(StateShape(32, 32, 4));
  auto cfg = pong_config(400, 3);
  auto eps = run_episodes(policy, cfg, 0.0);
  for (const auto &e : eps) {
    EXPECT_EQ(e.attacked_frames, 0);
    EXPECT_EQ(e.accumulated_reward, 7.0);  // scripted-agent oracle value
    EXPECT_EQ(e.total_oracle_queries, std::uint64_t(e.total_frames));
  }
}

TEST(Campaign, FrozenPolicyBurnsBudgetWithoutChangingActions) {
  StateShape shape(32, 32, 4);
  auto policy = frozen_policy(shape);
  auto cfg = pong_config(12, 1);
  auto rec = run_episode(policy, cfg, 1.0, 0);
  EXPECT_EQ(rec.attacked_frames, 12);
  EXPECT_EQ(rec.successful_attacks, 0);
  for (const auto &f : rec.frames) {
    EXPECT_EQ(f.evaluations_used, 400);
    EXPECT_EQ(f.action, f.original_action);
    EXPECT_FALSE(f.success);
  }
  EXPECT_EQ(rec.total_oracle_queries, 12u + 12u * 400u);
}

TEST(Campaign, AttackHurtsDistilledExpert) {
  auto policy = distill_mini_pong(StateShape(32, 32, 4));
  auto cfg = pong_config(400, 30);
  cfg.fsa.n = 4;
  const double threshold = resolve_threshold(policy, cfg);
  auto base = summarize(run_episodes(policy, cfg, 0.0));
  auto attacked = summarize(run_episodes(policy, cfg, threshold));
  EXPECT_LT(attacked.mean_reward, base.mean_reward);
  EXPECT_GT(attacked.mean_attacked_frames, 0.0);
}

TEST(Campaign, QueryAccountingAndActionChange) {
  auto policy = distill_mini_pong(StateShape(32, 32, 4));
  auto cfg = pong_config(60, 2);
  cfg.ga.init_mode = InitMode::warm_start;
  for (const auto &e : run_episodes(policy, cfg, 0.5)) {
    std::uint64_t evals = 0;
    for (const auto &f : e.frames) {
      evals += std::uint64_t(f.evaluations_used);
      EXPECT_LE(f.evaluations_used, 400);
      if (f.success) {
        EXPECT_NE(f.perturbed_action, f.original_action);
        EXPECT_EQ(f.action, f.perturbed_action);
      } else {
        EXPECT_EQ(f.action, f.original_action);
      }
      if (!f.attacked) {
        EXPECT_EQ(f.evaluations_used, 0);
      }
      EXPECT_EQ(f.attacked, f.zeta < 0.5);
    }
    EXPECT_EQ(e.total_oracle_queries, std::uint64_t(e.total_frames) + evals);
  }
}

TEST(Campaign, ThreadCountDoesNotChangeResults) {
  auto policy = distill_mini_pong(StateShape(32, 32, 4));
  auto cfg = pong_config(40, 4);
  cfg.threads = 1;
  const auto one = dump_all(run_episodes(policy, cfg, 0.4));
  cfg.threads = 4;
  EXPECT_EQ(dump_all(run_episodes(policy, cfg, 0.4)), one);
}

TEST(Campaign, PolicyEnvironmentMismatch) {
  auto cfg = pong_config(10, 1);
  EXPECT_THROW(run_episode(distill_mini_pong(StateShape(16, 16, 4)), cfg, 0.0, 0), ShapeError);
  EXPECT_THROW(run_episode(frozen_uniform_policy(StateShape(32, 32, 4), 4), cfg, 0.0, 0), ValidationError);
}

TEST(Campaign, EpisodeJsonRoundTrip) {
  auto policy = distill_mini_pong(StateShape(32, 32, 4));
  auto rec = run_episode(policy, pong_config(30, 1), 0.4, 3);
  auto j = episode_to_json(rec);
  EXPECT_EQ(j.begin().key(), "seed");
  auto back = episode_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(episode_to_json(back).dump(), j.dump());
  bool saw_genome = false;
  for (const auto &f : j["frames"])
    if (!f["genome"].is_null()) {
      saw_genome = true;
      EXPECT_EQ(f["genome"][0].size(), 3u);
    }
  EXPECT_TRUE(saw_genome);
}

TEST(Sweep, FsaSizesGiveOneRowEach) {
  auto policy = distill_mini_pong(StateShape(32, 32, 4));
  auto cfg = pong_config(8, 2);
  SweepSpec sw;
  sw.kind = SweepKind::fsa_sizes;
  for (int n = 1; n <= 10; ++n) sw.fsa_sizes.push_back(n);
  cfg.sweep = sw;
  auto rows = run_sweep(policy, cfg);
  ASSERT_EQ(rows.size(), 10u);
  for (int n = 1; n <= 10; ++n) {
    EXPECT_EQ(rows[std::size_t(n - 1)].summary.sweep_param, "fsa_size");
    EXPECT_EQ(rows[std::size_t(n - 1)].summary.value, std::to_string(n));
  }
  // the frozen threshold is shared by all points
  for (const auto &r : rows) EXPECT_EQ(r.episodes[0].threshold, rows[0].episodes[0].threshold);
}

TEST(Sweep, ZeroThresholdEqualsBaseline) {
  auto policy = distill_mini_pong(StateShape(32, 32, 4));
  auto cfg = pong_config(100, 3);
  SweepSpec sw;
  sw.kind = SweepKind::tca_thresholds;
  sw.tca_thresholds = {0.0};
  cfg.sweep = sw;
  auto rows = run_sweep(policy, cfg);
  auto base = summarize(run_episodes(policy, cfg, 0.0));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].summary.mean_reward, base.mean_reward);
  EXPECT_EQ(rows[0].summary.std_reward, base.std_reward);
  EXPECT_EQ(rows[0].summary.mean_attacked_frames, 0.0);
  EXPECT_EQ(rows[0].summary.value, "0");
}

TEST(Sweep, InitModesShareGatingUntilTrajectoriesDiverge) {
  auto policy = distill_mini_pong(StateShape(32, 32, 4));
  auto cfg = pong_config(120, 3);
  SweepSpec sw;
  sw.kind = SweepKind::init_modes;
  sw.init_modes = {InitMode::random_init, InitMode::warm_start};
  cfg.sweep = sw;
  auto rows = run_sweep(policy, cfg);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].summary.value, "random_init");
  EXPECT_EQ(rows[1].summary.value, "warm_start");
  long evals_ri = 0, evals_wsi = 0;
  for (std::size_t e = 0; e < rows[0].episodes.size(); ++e) {
    const auto &a = rows[0].episodes[e].frames;
    const auto &b = rows[1].episodes[e].frames;
    for (std::size_t t = 0; t < std::min(a.size(), b.size()); ++t) {
      EXPECT_EQ(a[t].attacked, b[t].attacked);
      EXPECT_EQ(a[t].zeta, b[t].zeta);
      evals_ri += a[t].evaluations_used;
      evals_wsi += b[t].evaluations_used;
      if (a[t].action != b[t].action) break;
    }
  }
  EXPECT_NE(evals_ri, evals_wsi);
}

TEST(Sweep, EmptyListIsConfigError) {
  auto cfg = pong_config(8, 1);
  SweepSpec sw;
  sw.kind = SweepKind::fsa_sizes;
  cfg.sweep = sw;
  EXPECT_THROW(cfg.validate(), ConfigError);
  sw.fsa_sizes = {0};
  cfg.sweep = sw;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(CompareInit, WarmSeedThatStillSucceedsIsCheap) {
  auto policy = pixel_trigger_policy(StateShape(8, 8, 2));
  auto traj = load_trajectory(std::string(SS_SOURCE_DIR) + "/tests/data/grid_chase_8x8_seed3.traj");
  CampaignConfig cfg;
  cfg.tca = TcaSetting{false, 1.0};
  cfg.base_seed = 5;
  auto rows = compare_init(policy, cfg, traj, 4, 40);
  ASSERT_EQ(rows.size(), 40u * 2u * 4u);
  int seeded = 0;
  for (const auto &r : rows)
    if (r.mode == InitMode::warm_start && r.seed_succeeds) {
      ++seeded;
      EXPECT_LE(r.evaluations, 10);
      EXPECT_TRUE(r.success);
    }
  EXPECT_GT(seeded, 0);
}

TEST(CompareInit, FirstFrameWarmStartIsRandomInit) {
  auto policy = pixel_trigger_policy(StateShape(8, 8, 2));
  auto traj = load_trajectory(std::string(SS_SOURCE_DIR) + "/tests/data/grid_chase_8x8_seed3.traj");
  CampaignConfig cfg;
  cfg.tca = TcaSetting{false, 1.0};
  auto rows = compare_init(policy, cfg, traj, 3, 2);
  // rows for the first frame: 3 RI trials then 3 WSI trials
  for (int t = 0; t < 3; ++t) {
    EXPECT_EQ(rows[std::size_t(t)].frame, rows[std::size_t(t + 3)].frame);
    EXPECT_EQ(rows[std::size_t(t)].evaluations, rows[std::size_t(t + 3)].evaluations);
    EXPECT_EQ(rows[std::size_t(t)].best_history, rows[std::size_t(t + 3)].best_history);
    EXPECT_FALSE(rows[std::size_t(t + 3)].seed_succeeds);
  }
}

TEST(CompareInit, FrozenPolicyExhaustsBothModes) {
  auto shape = StateShape(8, 8, 2);
  auto policy = frozen_uniform_policy(shape, 2);
  policy.layers[0].bias = {1.0, 0.0};
  auto traj = load_trajectory(std::string(SS_SOURCE_DIR) + "/tests/data/grid_chase_8x8_seed3.traj");
  CampaignConfig cfg;
  cfg.tca = TcaSetting{false, 1.0};
  auto rows = compare_init(policy, cfg, traj, 2, 3);
  ASSERT_EQ(rows.size(), 12u);
  for (const auto &r : rows) {
    EXPECT_EQ(r.evaluations, 400);
    EXPECT_FALSE(r.success);
  }
}

TEST(CompareInit, ShapeMismatch) {
  auto traj = load_trajectory(std::string(SS_SOURCE_DIR) + "/tests/data/grid_chase_8x8_seed3.traj");
  CampaignConfig cfg;
  EXPECT_THROW(compare_init(pixel_trigger_policy(StateShape(8, 8, 4)), cfg, traj), ShapeError);
}

TEST(Csv, SummaryAndCompareHeaders) {
  std::ostringstream s, c;
  SummaryRow row = summarize({fake(1, 0, 10), fake(3, 2, 10)});
  row.sweep_param = "fsa_size";
  row.value = "1";
  write_summary_csv(s, {row});
  EXPECT_EQ(s.str(), std::string(kSummaryHeader) + "\nfsa_size,1,2,1.4142135623730951,1,1.4142135623730951,10,0,2\n");
  write_compare_csv(c, {CompareRow{3, InitMode::warm_start, 1, 7, 0.25, true, true, {}}});
  EXPECT_EQ(c.str(), "frame,mode,trial,evaluations,best_objective\n3,warm_start,1,7,0.25\n");
}
