#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "envs.hpp"
#include "errors.hpp"
#include "ga.hpp"
#include "objective.hpp"
#include "perturbation.hpp"
#include "policy.hpp"
#include "random.hpp"
#include "tca.hpp"
#include "trajectory.hpp"

namespace sparse_strike {

struct TcaSetting {
  // When set, the threshold is the mean attack uncertainty of one unattacked
  // rollout (seed = base_seed), computed once and frozen for the campaign.
  bool mean_of_trajectory = false;
  double threshold = 0.5;
};

enum class SweepKind { fsa_sizes, tca_thresholds, init_modes };

inline const char *sweep_param_name(SweepKind k) {
  switch (k) {
    case SweepKind::fsa_sizes: return "fsa_size";
    case SweepKind::tca_thresholds: return "tca_threshold";
    case SweepKind::init_modes: return "init_mode";
  }
  return "?";
}

struct SweepSpec {
  SweepKind kind = SweepKind::fsa_sizes;
  std::vector<int> fsa_sizes;
  std::vector<double> tca_thresholds;
  std::vector<InitMode> init_modes;

  std::size_t points() const {
    switch (kind) {
      case SweepKind::fsa_sizes: return fsa_sizes.size();
      case SweepKind::tca_thresholds: return tca_thresholds.size();
      case SweepKind::init_modes: return init_modes.size();
    }
    return 0;
  }
};

struct CampaignConfig {
  std::string policy_path;
  EnvSpec env;
  FsaConfig fsa;
  GaConfig ga;
  TcaSetting tca;
  int runs = 30;
  std::uint64_t base_seed = 0;
  std::optional<SweepSpec> sweep;
  // 0 means hardware concurrency. Never affects results.
  int threads = 0;

  void validate() const {
    fsa.validate();
    ga.validate();
    if (!tca.mean_of_trajectory) TcaConfig{tca.threshold}.validate();
    if (runs < 1) throw ConfigError("runs must be at least 1");
    if (threads < 0) throw ConfigError("threads must be non-negative");
    if (sweep && sweep->points() == 0) throw ConfigError("sweep list must not be empty");
    if (sweep)
      for (double z : sweep->tca_thresholds) TcaConfig{z}.validate();
    if (sweep)
      for (int n : sweep->fsa_sizes)
        if (n < 1) throw ConfigError("FSA sizes must be at least 1");
  }
};

struct FrameLog {
  int t = 0;
  double zeta = 0.0;
  bool attacked = false;
  int evaluations_used = 0;
  bool success = false;
  std::optional<AdversaryGenome> genome;
  int original_action = 0;
  int perturbed_action = 0;
  int action = 0;  // executed
  double reward = 0.0;
};

struct EpisodeRecord {
  std::uint64_t seed = 0;
  double threshold = 0.0;
  std::vector<FrameLog> frames;
  double accumulated_reward = 0.0;
  int total_frames = 0;
  int attacked_frames = 0;
  int successful_attacks = 0;
  std::uint64_t total_oracle_queries = 0;
};

struct SummaryRow {
  std::string sweep_param;
  std::string value;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double mean_attacked_frames = 0.0;
  double std_attacked_frames = 0.0;
  double mean_total_frames = 0.0;
  double std_total_frames = 0.0;
  int runs = 0;
  // Sample std is undefined for one run; it is reported as 0 and flagged here.
  bool single_run = false;
};

struct SweepPoint {
  SummaryRow summary;
  std::vector<EpisodeRecord> episodes;
};

using SweepSummary = std::vector<SweepPoint>;

struct CompareRow {
  int frame = 0;
  InitMode mode = InitMode::random_init;
  int trial = 0;
  int evaluations = 0;
  double best_objective = 0.0;
  bool success = false;
  // warm_start rows only: the inherited genome succeeds on this frame by itself.
  bool seed_succeeds = false;
  std::vector<double> best_history;
};

// Shortest round-trip decimal form; stable across runs.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline void check_policy_env(const PolicySpec &policy, const EnvSpec &env) {
  if (!(policy.input_shape == env.shape))
    throw ShapeError("policy input " + policy.input_shape.to_string() + " does not match environment shape " +
                     env.shape.to_string());
  if (policy.action_count != env_action_count(env.kind))
    throw ValidationError("policy has " + std::to_string(policy.action_count) + " actions but " + to_string(env.kind) +
                          " has " + std::to_string(env_action_count(env.kind)));
}

inline double mean(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

inline double sample_std(const std::vector<double> &v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must be
// written to per-index slots; the first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn &&fn) {
  std::size_t workers = threads > 0 ? std::size_t(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

inline AgentFn greedy_policy_agent(const PolicySpec &policy) {
  return [&policy](const Environment &, const FrameState &state) { return greedy_action(query(policy, state)); };
}

// Unattacked greedy rollout of `policy`.
inline Trajectory record_policy_rollout(const PolicySpec &policy, const EnvSpec &env) {
  detail::check_policy_env(policy, env);
  return record_rollout(env, greedy_policy_agent(policy));
}

inline std::vector<ActionDistribution> trajectory_distributions(const PolicySpec &policy, const Trajectory &traj) {
  std::vector<ActionDistribution> out;
  for (const auto &s : replay_states(traj)) out.push_back(query(policy, s));
  return out;
}

// Mean attack uncertainty of the unattacked rollout with the campaign's base seed.
inline double mean_trajectory_threshold(const PolicySpec &policy, const CampaignConfig &config) {
  EnvSpec env = config.env;
  env.seed = config.base_seed;
  const auto traj = record_policy_rollout(policy, env);
  return mean_uncertainty_threshold(trajectory_distributions(policy, traj));
}

inline double resolve_threshold(const PolicySpec &policy, const CampaignConfig &config) {
  return config.tca.mean_of_trajectory ? mean_trajectory_threshold(policy, config) : config.tca.threshold;
}

// One episode under attack. Every frame costs one gating query; gated frames
// additionally run the GA. Only the executed action changes: the environment
// and the observation stack always evolve from the real screens.
inline EpisodeRecord run_episode(const PolicySpec &policy, const CampaignConfig &config, double threshold,
                                 std::uint64_t episode_seed) {
  EnvSpec spec = config.env;
  spec.seed = episode_seed;
  detail::check_policy_env(policy, spec);
  const TcaConfig tca{threshold};
  tca.validate();

  auto env = make_environment(spec);
  QuerySession session(policy);
  FrameState state = push_frame(FrameState(spec.shape), env->reset());
  std::optional<AdversaryGenome> last_success;

  EpisodeRecord rec;
  rec.seed = episode_seed;
  rec.threshold = threshold;
  std::uint64_t ga_evaluations = 0;
  while (!env->done()) {
    FrameLog log;
    log.t = env->t();
    const auto dist = session.query(state);
    const int o = greedy_action(dist);
    log.zeta = attack_uncertainty(dist);
    log.original_action = o;
    log.perturbed_action = o;
    log.action = o;
    if (should_attack(log.zeta, tca)) {
      std::mt19937_64 rng(derive_seed(episode_seed, {std::uint64_t(log.t)}));
      const std::optional<AdversaryGenome> warm =
          config.ga.init_mode == InitMode::warm_start ? last_success : std::nullopt;
      const auto res = optimize(session, state, o, config.fsa, config.ga, warm, rng);
      log.attacked = true;
      log.evaluations_used = res.evaluations_used;
      log.success = res.best_outcome.success;
      log.genome = res.best_genome;
      log.perturbed_action = res.best_outcome.perturbed_action;
      ga_evaluations += std::uint64_t(res.evaluations_used);
      if (log.success) {
        if (log.perturbed_action == o) throw InvariantViolation("successful attack left the action unchanged");
        log.action = log.perturbed_action;
        last_success = res.best_genome;
      }
    }
    auto step = env->step(log.action);
    log.reward = step.reward;
    state = push_frame(state, step.observation);

    rec.accumulated_reward += log.reward;
    ++rec.total_frames;
    if (log.attacked) ++rec.attacked_frames;
    if (log.success) ++rec.successful_attacks;
    rec.frames.push_back(std::move(log));
  }
  rec.total_oracle_queries = session.query_count();
  if (rec.total_oracle_queries != std::uint64_t(rec.total_frames) + ga_evaluations)
    throw InvariantViolation("oracle query accounting mismatch");
  return rec;
}

// Episodes for seeds base_seed .. base_seed + runs - 1, in seed order.
inline std::vector<EpisodeRecord> run_episodes(const PolicySpec &policy, const CampaignConfig &config,
                                               double threshold) {
  std::vector<EpisodeRecord> out(std::size_t(config.runs));
  detail::parallel_for(out.size(), config.threads, [&](std::size_t i) {
    out[i] = run_episode(policy, config, threshold, config.base_seed + i);
  });
  return out;
}

inline SummaryRow summarize(const std::vector<EpisodeRecord> &records) {
  if (records.empty()) throw InputError("cannot summarize zero episodes");
  std::vector<double> reward, attacked, total;
  for (const auto &r : records) {
    reward.push_back(r.accumulated_reward);
    attacked.push_back(r.attacked_frames);
    total.push_back(r.total_frames);
  }
  SummaryRow row;
  row.mean_reward = detail::mean(reward);
  row.std_reward = detail::sample_std(reward);
  row.mean_attacked_frames = detail::mean(attacked);
  row.std_attacked_frames = detail::sample_std(attacked);
  row.mean_total_frames = detail::mean(total);
  row.std_total_frames = detail::sample_std(total);
  row.runs = int(records.size());
  row.single_run = records.size() == 1;
  return row;
}

// One row per sweep point, all points on the same episode seeds. A
// mean-of-trajectory threshold is resolved once and shared by every point.
inline SweepSummary run_sweep(const PolicySpec &policy, const CampaignConfig &config) {
  config.validate();
  if (!config.sweep) throw ConfigError("run_sweep needs a sweep specification");
  const auto &sweep = *config.sweep;
  const bool needs_threshold = sweep.kind != SweepKind::tca_thresholds;
  const double frozen = needs_threshold ? resolve_threshold(policy, config) : 0.0;

  SweepSummary out;
  for (std::size_t k = 0; k < sweep.points(); ++k) {
    CampaignConfig point = config;
    double threshold = frozen;
    std::string value;
    switch (sweep.kind) {
      case SweepKind::fsa_sizes:
        point.fsa.n = sweep.fsa_sizes[k];
        value = std::to_string(point.fsa.n);
        break;
      case SweepKind::tca_thresholds:
        threshold = sweep.tca_thresholds[k];
        value = format_double(threshold);
        break;
      case SweepKind::init_modes:
        point.ga.init_mode = sweep.init_modes[k];
        value = to_string(point.ga.init_mode);
        break;
    }
    SweepPoint sp;
    sp.episodes = run_episodes(policy, point, threshold);
    sp.summary = summarize(sp.episodes);
    sp.summary.sweep_param = sweep_param_name(sweep.kind);
    sp.summary.value = value;
    out.push_back(std::move(sp));
  }
  return out;
}

// Random vs warm-start initialization on recorded frames. Frames are the
// gated ones (uncertainty below the resolved threshold, where a
// mean-of-trajectory threshold is taken over this trajectory), capped at
// max_frames when positive. For each trial the warm-start run on a frame is
// seeded with the best genome of that trial's warm-start run on the previous
// selected frame; the first frame has no predecessor and runs as random
// init. Both modes share the per-(frame, trial) RNG seed.
inline std::vector<CompareRow> compare_init(const PolicySpec &policy, const CampaignConfig &config,
                                            const Trajectory &traj, int trials = 10, int max_frames = 0) {
  config.fsa.validate();
  config.ga.validate();
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (!(traj.shape == policy.input_shape))
    throw ShapeError("trajectory shape " + traj.shape.to_string() + " does not match policy input " +
                     policy.input_shape.to_string());
  const auto states = replay_states(traj);
  if (states.empty()) throw InputError("trajectory has no frames");
  std::vector<ActionDistribution> dists;
  for (const auto &s : states) dists.push_back(query(policy, s));
  const double threshold =
      config.tca.mean_of_trajectory ? mean_uncertainty_threshold(dists) : config.tca.threshold;

  std::vector<int> selected;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (max_frames > 0 && int(selected.size()) >= max_frames) break;
    if (should_attack(attack_uncertainty(dists[i]), TcaConfig{threshold})) selected.push_back(int(i));
  }

  GaConfig ri = config.ga;
  ri.init_mode = InitMode::random_init;
  GaConfig wsi = config.ga;
  wsi.init_mode = InitMode::warm_start;

  struct Cell {
    CompareRow ri, wsi;
  };
  std::vector<std::vector<Cell>> cells(selected.size(), std::vector<Cell>(std::size_t(trials)));
  // Trials are independent chains; frames within a trial are sequential.
  detail::parallel_for(std::size_t(trials), config.threads, [&](std::size_t trial) {
    std::optional<AdversaryGenome> warm;
    for (std::size_t k = 0; k < selected.size(); ++k) {
      const int f = selected[k];
      const auto &state = states[std::size_t(f)];
      const int o = greedy_action(dists[std::size_t(f)]);
      const std::uint64_t seed = derive_seed(config.base_seed, {std::uint64_t(f), std::uint64_t(trial)});

      QuerySession session(policy);
      std::mt19937_64 rng_ri(seed);
      const auto r = optimize(session, state, o, config.fsa, ri, std::nullopt, rng_ri);
      std::mt19937_64 rng_wsi(seed);
      const auto w = optimize(session, state, o, config.fsa, wsi, warm, rng_wsi);

      Cell &cell = cells[k][trial];
      cell.ri = CompareRow{f, InitMode::random_init, int(trial), r.evaluations_used, r.best_outcome.discrepancy,
                           r.best_outcome.success, false, r.best_history};
      bool seed_ok = false;
      if (warm) {
        QuerySession probe(policy);
        seed_ok = evaluate(probe, state, *warm, o, config.fsa).success;
      }
      cell.wsi = CompareRow{f, InitMode::warm_start, int(trial), w.evaluations_used, w.best_outcome.discrepancy,
                            w.best_outcome.success, seed_ok, w.best_history};
      warm = w.best_genome;
    }
  });

  std::vector<CompareRow> out;
  for (auto &per_frame : cells) {
    for (auto &c : per_frame) out.push_back(std::move(c.ri));
    for (auto &c : per_frame) out.push_back(std::move(c.wsi));
  }
  return out;
}

// ---- serialization -------------------------------------------------------

inline nlohmann::ordered_json episode_to_json(const EpisodeRecord &rec) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["seed"] = rec.seed;
  j["threshold"] = rec.threshold;
  ordered_json frames = ordered_json::array();
  for (const auto &f : rec.frames) {
    ordered_json jf;
    jf["t"] = f.t;
    jf["zeta"] = f.zeta;
    jf["attacked"] = f.attacked;
    jf["evaluations_used"] = f.evaluations_used;
    jf["success"] = f.success;
    if (f.genome) {
      ordered_json g = ordered_json::array();
      for (const auto &gene : f.genome->genes) g.push_back({gene.x, gene.y, gene.p});
      jf["genome"] = std::move(g);
    } else {
      jf["genome"] = nullptr;
    }
    jf["original_action"] = f.original_action;
    jf["perturbed_action"] = f.perturbed_action;
    jf["action"] = f.action;
    jf["reward"] = f.reward;
    frames.push_back(std::move(jf));
  }
  j["frames"] = std::move(frames);
  j["totals"] = {{"accumulated_reward", rec.accumulated_reward},
                 {"total_frames", rec.total_frames},
                 {"attacked_frames", rec.attacked_frames},
                 {"successful_attacks", rec.successful_attacks},
                 {"total_oracle_queries", rec.total_oracle_queries}};
  return j;
}

inline EpisodeRecord episode_from_json(const nlohmann::json &j) {
  EpisodeRecord rec;
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.threshold = j.at("threshold").get<double>();
  for (const auto &jf : j.at("frames")) {
    FrameLog f;
    f.t = jf.at("t").get<int>();
    f.zeta = jf.at("zeta").get<double>();
    f.attacked = jf.at("attacked").get<bool>();
    f.evaluations_used = jf.at("evaluations_used").get<int>();
    f.success = jf.at("success").get<bool>();
    if (!jf.at("genome").is_null()) f.genome = genome_from_json(jf.at("genome"));
    f.original_action = jf.at("original_action").get<int>();
    f.perturbed_action = jf.at("perturbed_action").get<int>();
    f.action = jf.at("action").get<int>();
    f.reward = jf.at("reward").get<double>();
    rec.frames.push_back(std::move(f));
  }
  const auto &t = j.at("totals");
  rec.accumulated_reward = t.at("accumulated_reward").get<double>();
  rec.total_frames = t.at("total_frames").get<int>();
  rec.attacked_frames = t.at("attacked_frames").get<int>();
  rec.successful_attacks = t.at("successful_attacks").get<int>();
  rec.total_oracle_queries = t.at("total_oracle_queries").get<std::uint64_t>();
  return rec;
}

inline constexpr const char *kSummaryHeader =
    "sweep_param,value,mean_reward,std_reward,mean_attacked_frames,std_attacked_frames,mean_total_frames,"
    "std_total_frames,runs";

inline void write_summary_csv(std::ostream &out, const std::vector<SummaryRow> &rows) {
  out << kSummaryHeader << '\n';
  for (const auto &r : rows) {
    out << r.sweep_param << ',' << r.value << ',' << format_double(r.mean_reward) << ','
        << format_double(r.std_reward) << ',' << format_double(r.mean_attacked_frames) << ','
        << format_double(r.std_attacked_frames) << ',' << format_double(r.mean_total_frames) << ','
        << format_double(r.std_total_frames) << ',' << r.runs << '\n';
  }
}

inline void write_compare_csv(std::ostream &out, const std::vector<CompareRow> &rows) {
  out << "frame,mode,trial,evaluations,best_objective\n";
  for (const auto &r : rows)
    out << r.frame << ',' << to_string(r.mode) << ',' << r.trial << ',' << r.evaluations << ','
        << format_double(r.best_objective) << '\n';
}

}  // namespace sparse_strike
