#pragma once

// Command-line driver. Precedence for every setting: explicit flag, then the
// --config JSON file, then built-in defaults. The seed additionally falls back
// to $SPARSE_STRIKE_SEED before the default.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "campaign.hpp"
#include "distill.hpp"
#include "errors.hpp"
#include "trajectory.hpp"

namespace sparse_strike {

inline constexpr const char *kToolVersion = "1.0.0";
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct UsageError : Error {
  using Error::Error;
};

struct Command {
  std::string name;  // attack, baseline, sweep-fsa, sweep-tca, compare-init, record, report, distill, help
  CampaignConfig campaign;
  std::string out;
  std::string agent = "scripted";        // record
  std::string trajectory_path;           // compare-init
  int trials = 10;                       // compare-init
  int max_frames = 0;                    // compare-init
  std::string in_dir;                    // report
  std::string format = "plotdata";       // report
  std::string help_text;                 // help
  bool shape_given = false;
};

namespace cli_detail {

inline StateShape parse_shape(const std::string &s) {
  int h = 0, w = 0, c = 0;
  char x1 = 0, x2 = 0;
  std::istringstream in(s);
  if (!(in >> h >> x1 >> w >> x2 >> c) || x1 != 'x' || x2 != 'x' || !in.eof())
    throw UsageError("--shape must look like HxWxC, got '" + s + "'");
  try {
    return StateShape(h, w, c);
  } catch (const ShapeError &e) {
    throw UsageError(e.what());
  }
}

inline std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

inline double to_number(const std::string &s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw UsageError("not a number: '" + s + "'");
  }
}

// "a:b" (step 1), "a:b:step", or a comma-separated list.
inline std::vector<double> parse_range(const std::string &s) {
  if (s.find(':') != std::string::npos) {
    const auto parts = split(s, ':');
    if (parts.size() != 2 && parts.size() != 3) throw UsageError("range must be start:stop[:step], got '" + s + "'");
    const double a = to_number(parts[0]);
    const double b = to_number(parts[1]);
    const double step = parts.size() == 3 ? to_number(parts[2]) : 1.0;
    if (!(step > 0.0) || b < a) throw UsageError("empty or invalid range '" + s + "'");
    const long count = std::lround(std::floor((b - a) / step + 1e-9)) + 1;
    std::vector<double> out;
    for (long k = 0; k < count; ++k) out.push_back(std::round((a + double(k) * step) * 1e10) / 1e10);
    return out;
  }
  std::vector<double> out;
  for (const auto &p : split(s, ',')) out.push_back(to_number(p));
  if (out.empty()) throw UsageError("empty list");
  return out;
}

inline std::vector<int> parse_int_range(const std::string &s) {
  std::vector<int> out;
  for (double v : parse_range(s)) {
    if (v != std::floor(v)) throw UsageError("expected integers in '" + s + "'");
    out.push_back(int(v));
  }
  return out;
}

// Raw option values as given on the command line.
struct Flags {
  std::string policy, env, shape, target_channels, init, config, out, sizes, thresholds;
  int fsa_size = 0, pop_size = 0, max_evals = 0, runs = 0, threads = 0, max_steps = 0, lives = 0;
  double tca_threshold = 0.0, selection_rate = 0.0, mutation_rate = 0.0;
  bool tca_mean = false;
  std::uint64_t seed = 0;
};

struct Registered {
  std::map<std::string, CLI::Option *> opts;
  bool set(const std::string &name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

inline void add_campaign_flags(CLI::App *app, Flags &f, Registered &r, bool with_attack) {
  r.opts["policy"] = app->add_option("--policy", f.policy, "Policy weight file (JSON)");
  r.opts["env"] = app->add_option("--env", f.env, "Environment: mini_pong | grid_chase");
  r.opts["shape"] = app->add_option("--shape", f.shape, "State shape HxWxC (default: the policy's input shape)");
  r.opts["max_steps"] = app->add_option("--max-steps", f.max_steps, "Episode length cap T");
  r.opts["lives"] = app->add_option("--lives", f.lives, "mini_pong lives");
  r.opts["runs"] = app->add_option("--runs", f.runs, "Episodes per sweep point (default 30)");
  r.opts["seed"] = app->add_option("--seed", f.seed, "Base seed (fallback: $SPARSE_STRIKE_SEED)");
  r.opts["threads"] = app->add_option("--threads", f.threads, "Worker threads (default: all cores)");
  r.opts["out"] = app->add_option("--out", f.out, "Output directory");
  r.opts["config"] = app->add_option("--config", f.config, "JSON config file");
  if (!with_attack) return;
  r.opts["fsa_size"] = app->add_option("--fsa-size", f.fsa_size, "Pixels perturbed per frame (n)");
  auto *thr = app->add_option("--tca-threshold", f.tca_threshold, "Attack frames with uncertainty below this");
  auto *mean = app->add_flag("--tca-mean-of-trajectory", f.tca_mean,
                             "Threshold = mean uncertainty of an unattacked rollout");
  thr->excludes(mean);
  r.opts["tca_threshold"] = thr;
  r.opts["tca_mean_of_trajectory"] = mean;
  r.opts["target_channels"] =
      app->add_option("--target-channels", f.target_channels, "newest_only | all_channels");
  r.opts["pop_size"] = app->add_option("--pop-size", f.pop_size, "GA population size (default 10)");
  r.opts["max_evals"] = app->add_option("--max-evals", f.max_evals, "GA evaluation budget per frame (default 400)");
  r.opts["selection_rate"] = app->add_option("--selection-rate", f.selection_rate, "GA elite fraction (default 0.2)");
  r.opts["mutation_rate"] = app->add_option("--mutation-rate", f.mutation_rate, "GA mutation rate (default 0.1)");
  r.opts["init"] = app->add_option("--init", f.init, "GA initialization: random_init | warm_start");
}

inline const std::vector<std::string> &config_keys() {
  static const std::vector<std::string> keys{
      "policy",   "env",           "shape",          "max_steps",     "lives",         "runs",
      "seed",     "threads",       "out",            "fsa_size",      "tca_threshold", "tca_mean_of_trajectory",
      "target_channels", "pop_size", "max_evals",    "selection_rate", "mutation_rate", "init",
      "sizes",    "thresholds",    "trajectory",     "trials",        "max_frames"};
  return keys;
}

// Merged view: flag if given, else config file value, else nothing.
struct Settings {
  const Registered &reg;
  const Flags &flags;
  const nlohmann::json &file;

  bool has(const std::string &key) const { return reg.set(key) || file.contains(key); }

  template <typename T>
  T get(const std::string &key, const T &flag_value) const {
    if (reg.set(key)) return flag_value;
    try {
      return file.at(key).get<T>();
    } catch (const nlohmann::json::exception &e) {
      throw UsageError("config key '" + key + "': " + e.what());
    }
  }
};

inline nlohmann::json read_config_file(const std::string &path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw UsageError("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  const auto &keys = config_keys();
  for (const auto &[k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw UsageError("unknown config key '" + k + "'");
  return j;
}

inline std::uint64_t env_seed_fallback() {
  if (const char *s = std::getenv("SPARSE_STRIKE_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(s, &used);
      if (used == std::string(s).size()) return v;
    } catch (const std::exception &) {
    }
    throw UsageError(std::string("SPARSE_STRIKE_SEED is not an unsigned integer: '") + s + "'");
  }
  return 0;
}

}  // namespace cli_detail

inline std::string usage_text() {
  return "usage: sparse_strike <command> [flags]\n"
         "commands:\n"
         "  attack        run attacked episodes and summarize them\n"
         "  baseline      run unattacked episodes (threshold 0)\n"
         "  sweep-fsa     sweep the number of perturbed pixels (--sizes 1:10)\n"
         "  sweep-tca     sweep the uncertainty threshold (--thresholds 0:1:0.1)\n"
         "  compare-init  random vs warm-start GA initialization on a recorded trajectory\n"
         "  record        record an unattacked rollout to a trajectory file\n"
         "  report        turn a run directory into plot-ready series\n"
         "  distill       write the hand-built expert policy for an environment\n"
         "run 'sparse_strike <command> --help' for the flags of a command\n";
}

// Parses argv into a validated Command. Throws UsageError on any bad input;
// `--help` yields a Command named "help" carrying the usage text.
inline Command parse_args(int argc, const char *const *argv) {
  using namespace cli_detail;
  CLI::App app{"Sparse pixel adversarial attacks on pixel-input RL policies", "sparse_strike"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Help for every command");

  Flags f;
  Registered reg;
  std::string trajectory, agent = "scripted", in_dir, format = "plotdata";
  int trials = 10, max_frames = 0;

  auto *attack = app.add_subcommand("attack", "Run attacked episodes");
  add_campaign_flags(attack, f, reg, true);
  auto *baseline = app.add_subcommand("baseline", "Run unattacked episodes");
  add_campaign_flags(baseline, f, reg, false);
  auto *sweep_fsa = app.add_subcommand("sweep-fsa", "Sweep the FSA size");
  add_campaign_flags(sweep_fsa, f, reg, true);
  reg.opts["sizes"] = sweep_fsa->add_option("--sizes", f.sizes, "FSA sizes: a:b[:step] or a,b,c (default 1:10)");
  auto *sweep_tca = app.add_subcommand("sweep-tca", "Sweep the TCA threshold");
  add_campaign_flags(sweep_tca, f, reg, true);
  reg.opts["thresholds"] =
      sweep_tca->add_option("--thresholds", f.thresholds, "Thresholds: a:b[:step] or list (default 0:1:0.1)");
  auto *compare = app.add_subcommand("compare-init", "Compare random and warm-start initialization");
  add_campaign_flags(compare, f, reg, true);
  reg.opts["trajectory"] = compare->add_option("--trajectory", trajectory, "Recorded trajectory file");
  reg.opts["trials"] = compare->add_option("--trials", trials, "Independent GA runs per frame and mode (default 10)");
  reg.opts["max_frames"] = compare->add_option("--max-frames", max_frames, "Cap on compared frames (0 = all)");
  auto *record = app.add_subcommand("record", "Record an unattacked rollout");
  add_campaign_flags(record, f, reg, false);
  record->add_option("--agent", agent, "scripted | policy")->check(CLI::IsMember({"scripted", "policy"}));
  auto *report = app.add_subcommand("report", "Emit plot-ready data from a run directory");
  report->add_option("--in", in_dir, "Run directory holding summary.csv")->required();
  report->add_option("--format", format, "plotdata | table")->check(CLI::IsMember({"plotdata", "table"}));
  reg.opts["out"] = report->add_option("--out", f.out, "Output file (default: stdout)");
  auto *distill = app.add_subcommand("distill", "Write a hand-built expert policy");
  add_campaign_flags(distill, f, reg, false);

  // Registered options share variables across subcommands, so the lookup
  // table only holds the last subcommand's Option*; rebuild it for the
  // subcommand that was actually chosen after parsing.
  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::CallForHelp &) {
    return Command{.name = "help", .help_text = app.help()};
  } catch (const CLI::CallForAllHelp &) {
    return Command{.name = "help", .help_text = app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError &e) {
    if (argc <= 1) throw UsageError("no command given");
    // Subcommand-level --help surfaces as CallForHelp from the subcommand.
    throw UsageError(e.what());
  }

  CLI::App *chosen = app.get_subcommands().front();
  Registered active;
  for (auto *opt : chosen->get_options()) {
    std::string key = opt->get_name(false, true);
    key.erase(0, key.find_first_not_of('-'));
    std::replace(key.begin(), key.end(), '-', '_');
    active.opts[key] = opt;
  }

  Command cmd;
  cmd.name = chosen->get_name();
  const auto file = read_config_file(f.config);
  const Settings s{active, f, file};

  if (cmd.name == "report") {
    cmd.in_dir = in_dir;
    cmd.format = format;
    cmd.out = f.out;
    return cmd;
  }

  try {
    CampaignConfig &c = cmd.campaign;
    c.policy_path = s.has("policy") ? s.get<std::string>("policy", f.policy) : "";
    const std::string env_name = s.has("env") ? s.get<std::string>("env", f.env) : "mini_pong";
    c.env = EnvSpec::defaults(parse_env_kind(env_name));
    cmd.shape_given = s.has("shape");
    if (cmd.shape_given) c.env.shape = parse_shape(s.get<std::string>("shape", f.shape));
    if (s.has("max_steps")) c.env.max_steps = s.get<int>("max_steps", f.max_steps);
    if (s.has("lives")) c.env.lives = s.get<int>("lives", f.lives);
    if (c.env.max_steps < 1) throw UsageError("--max-steps must be at least 1");
    if (c.env.lives < 1) throw UsageError("--lives must be at least 1");
    if (s.has("runs")) c.runs = s.get<int>("runs", f.runs);
    c.base_seed = s.has("seed") ? s.get<std::uint64_t>("seed", f.seed) : env_seed_fallback();
    if (s.has("threads")) c.threads = s.get<int>("threads", f.threads);
    if (s.has("fsa_size")) c.fsa.n = s.get<int>("fsa_size", f.fsa_size);
    if (s.has("target_channels"))
      c.fsa.target_channels = parse_target_channels(s.get<std::string>("target_channels", f.target_channels));
    if (s.has("pop_size")) c.ga.population_size = s.get<int>("pop_size", f.pop_size);
    if (s.has("max_evals")) c.ga.max_evaluations = s.get<int>("max_evals", f.max_evals);
    if (s.has("selection_rate")) c.ga.selection_rate = s.get<double>("selection_rate", f.selection_rate);
    if (s.has("mutation_rate")) c.ga.mutation_rate = s.get<double>("mutation_rate", f.mutation_rate);
    if (s.has("init")) c.ga.init_mode = parse_init_mode(s.get<std::string>("init", f.init));

    // Flags beat the file even across the two threshold forms.
    if (active.set("tca_threshold")) {
      c.tca = TcaSetting{false, f.tca_threshold};
    } else if (active.set("tca_mean_of_trajectory")) {
      c.tca = TcaSetting{true, 0.0};
    } else if (file.contains("tca_mean_of_trajectory") && file.at("tca_mean_of_trajectory").get<bool>()) {
      c.tca = TcaSetting{true, 0.0};
    } else if (file.contains("tca_threshold")) {
      c.tca = TcaSetting{false, file.at("tca_threshold").get<double>()};
    } else {
      c.tca = TcaSetting{true, 0.0};
    }
    if (cmd.name == "baseline") c.tca = TcaSetting{false, 0.0};

    if (cmd.name == "sweep-fsa") {
      SweepSpec sw{.kind = SweepKind::fsa_sizes};
      sw.fsa_sizes = parse_int_range(s.has("sizes") ? s.get<std::string>("sizes", f.sizes) : "1:10");
      c.sweep = sw;
    } else if (cmd.name == "sweep-tca") {
      SweepSpec sw{.kind = SweepKind::tca_thresholds};
      sw.tca_thresholds = parse_range(s.has("thresholds") ? s.get<std::string>("thresholds", f.thresholds) : "0:1:0.1");
      c.sweep = sw;
    }
    c.validate();
  } catch (const UsageError &) {
    throw;
  } catch (const Error &e) {
    throw UsageError(e.what());
  } catch (const nlohmann::json::exception &e) {
    throw UsageError(std::string("config: ") + e.what());
  }

  cmd.out = s.has("out") ? s.get<std::string>("out", f.out) : "";
  cmd.agent = agent;
  cmd.trajectory_path = s.has("trajectory") ? s.get<std::string>("trajectory", trajectory) : "";
  cmd.trials = s.has("trials") ? s.get<int>("trials", trials) : 10;
  cmd.max_frames = s.has("max_frames") ? s.get<int>("max_frames", max_frames) : 0;

  const bool needs_policy = cmd.name != "distill" && !(cmd.name == "record" && agent == "scripted");
  if (needs_policy && cmd.campaign.policy_path.empty()) throw UsageError(cmd.name + ": --policy is required");
  if (cmd.out.empty()) throw UsageError(cmd.name + ": --out is required");
  if (cmd.name == "compare-init" && cmd.trajectory_path.empty())
    throw UsageError("compare-init: --trajectory is required");
  if (cmd.trials < 1) throw UsageError("--trials must be at least 1");
  if (cmd.max_frames < 0) throw UsageError("--max-frames must be non-negative");
  return cmd;
}

namespace cli_detail {

inline nlohmann::ordered_json resolved_config(const Command &cmd, double threshold) {
  const auto &c = cmd.campaign;
  nlohmann::ordered_json j;
  j["tool"] = "sparse_strike";
  j["version"] = kToolVersion;
  j["command"] = cmd.name;
  j["policy"] = c.policy_path;
  j["env"] = to_string(c.env.kind);
  j["shape"] = c.env.shape.to_string();
  j["max_steps"] = c.env.max_steps;
  j["lives"] = c.env.lives;
  j["fsa_size"] = c.fsa.n;
  j["target_channels"] = to_string(c.fsa.target_channels);
  j["pop_size"] = c.ga.population_size;
  j["max_evals"] = c.ga.max_evaluations;
  j["selection_rate"] = c.ga.selection_rate;
  j["mutation_rate"] = c.ga.mutation_rate;
  j["init"] = to_string(c.ga.init_mode);
  j["tca_mean_of_trajectory"] = c.tca.mean_of_trajectory;
  j["tca_threshold"] = threshold;
  j["runs"] = c.runs;
  j["seed"] = c.base_seed;
  if (c.sweep) {
    j["sweep_param"] = sweep_param_name(c.sweep->kind);
    if (c.sweep->kind == SweepKind::fsa_sizes) j["sizes"] = c.sweep->fsa_sizes;
    if (c.sweep->kind == SweepKind::tca_thresholds) j["thresholds"] = c.sweep->tca_thresholds;
  }
  if (cmd.name == "compare-init") {
    j["trajectory"] = cmd.trajectory_path;
    j["trials"] = cmd.trials;
    j["max_frames"] = cmd.max_frames;
  }
  return j;
}

inline std::ofstream open_out(const std::filesystem::path &p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write '" + p.string() + "'");
  return out;
}

inline void write_episodes(std::ostream &out, const std::vector<EpisodeRecord> &eps, const std::string &param = "",
                           const std::string &value = "") {
  for (const auto &e : eps) {
    nlohmann::ordered_json line;
    if (!param.empty()) {
      line["sweep_param"] = param;
      line["value"] = value;
    }
    const auto body = episode_to_json(e);
    for (const auto &[k, v] : body.items()) line[k] = v;
    out << line.dump() << '\n';
  }
}

inline PolicySpec load_for(const Command &cmd) {
  auto policy = load_policy_file(cmd.campaign.policy_path);
  return policy;
}

// The environment takes the policy's input shape unless --shape was given.
inline CampaignConfig bind_shape(CampaignConfig c, const PolicySpec &policy, bool shape_given) {
  if (!shape_given) c.env.shape = policy.input_shape;
  return c;
}

struct SummaryTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline SummaryTable read_summary(const std::filesystem::path &p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open '" + p.string() + "'");
  SummaryTable t;
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader) throw ParseError("'" + p.string() + "' is not a summary table");
  t.header = split(line, ',');
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != t.header.size()) throw ParseError("ragged row in '" + p.string() + "'");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

}  // namespace cli_detail

// Emits report output for a run directory. Pure function of summary.csv.
inline std::string render_report(const std::string &in_dir, const std::string &format) {
  using namespace cli_detail;
  const auto table = read_summary(std::filesystem::path(in_dir) / "summary.csv");
  std::ostringstream out;
  if (format == "plotdata") {
    out << "series,sweep_param,x,y,err\n";
    const std::vector<std::pair<std::string, std::size_t>> series{
        {"reward", 2}, {"attacked_frames", 4}, {"total_frames", 6}};
    for (const auto &[name, col] : series)
      for (const auto &r : table.rows) out << name << ',' << r[0] << ',' << r[1] << ',' << r[col] << ',' << r[col + 1] << '\n';
  } else {
    out << "| " << table.header[0] << " | " << table.header[1] << " | reward | attacked frames | total frames | runs |\n";
    out << "|---|---|---|---|---|---|\n";
    for (const auto &r : table.rows)
      out << "| " << r[0] << " | " << r[1] << " | " << r[2] << " ± " << r[3] << " | " << r[4] << " ± " << r[5] << " | "
          << r[6] << " ± " << r[7] << " | " << r[8] << " |\n";
  }
  return out.str();
}

inline int run(const Command &cmd, std::ostream &out = std::cout) {
  using namespace cli_detail;
  namespace fs = std::filesystem;
  if (cmd.name == "help") {
    out << cmd.help_text;
    return kExitOk;
  }
  if (cmd.name == "report") {
    const auto text = render_report(cmd.in_dir, cmd.format);
    if (cmd.out.empty()) {
      out << text;
    } else {
      auto f = open_out(cmd.out);
      f << text;
    }
    return kExitOk;
  }
  const bool shape_given = cmd.shape_given;

  if (cmd.name == "distill") {
    const auto policy = distill_expert(cmd.campaign.env.kind, cmd.campaign.env.shape);
    auto f = open_out(cmd.out);
    f << policy_to_json(policy).dump() << '\n';
    out << "wrote " << to_string(cmd.campaign.env.kind) << " expert for " << policy.input_shape.to_string() << " to "
        << cmd.out << '\n';
    return kExitOk;
  }

  if (cmd.name == "record") {
    CampaignConfig c = cmd.campaign;
    Trajectory traj;
    EnvSpec env = c.env;
    env.seed = c.base_seed;
    if (cmd.agent == "policy") {
      const auto policy = load_for(cmd);
      if (!shape_given) env.shape = policy.input_shape;
      traj = record_policy_rollout(policy, env);
    } else {
      traj = record_rollout(env, scripted_agent);
    }
    save_trajectory(cmd.out, traj);
    double reward = 0.0;
    for (const auto &r : traj.records) reward += r.reward;
    out << "frames=" << traj.records.size() << " reward=" << format_double(reward) << '\n';
    return kExitOk;
  }

  const auto policy = load_for(cmd);
  const CampaignConfig c = bind_shape(cmd.campaign, policy, shape_given);
  fs::create_directories(cmd.out);
  const fs::path dir(cmd.out);

  if (cmd.name == "compare-init") {
    const auto traj = load_trajectory(cmd.trajectory_path);
    const auto rows = compare_init(policy, c, traj, cmd.trials, cmd.max_frames);
    {
      auto f = open_out(dir / "compare_init.csv");
      write_compare_csv(f, rows);
    }
    {
      auto f = open_out(dir / "meta.json");
      f << resolved_config(cmd, c.tca.threshold).dump(2) << '\n';
    }
    std::vector<int> ri, wsi;
    for (const auto &r : rows) (r.mode == InitMode::random_init ? ri : wsi).push_back(r.evaluations);
    auto median = [](std::vector<int> v) {
      if (v.empty()) return 0.0;
      std::sort(v.begin(), v.end());
      const std::size_t m = v.size() / 2;
      return v.size() % 2 ? double(v[m]) : (v[m - 1] + v[m]) / 2.0;
    };
    out << "frames=" << ri.size() / std::size_t(cmd.trials) << " median_evals_random_init=" << format_double(median(ri))
        << " median_evals_warm_start=" << format_double(median(wsi)) << '\n';
    return kExitOk;
  }

  std::vector<SummaryRow> summary;
  double threshold = 0.0;
  {
    auto episodes = open_out(dir / "episodes.jsonl");
    if (c.sweep) {
      const auto points = run_sweep(policy, c);
      threshold = c.sweep->kind == SweepKind::tca_thresholds ? 0.0 : resolve_threshold(policy, c);
      for (const auto &p : points) {
        write_episodes(episodes, p.episodes, p.summary.sweep_param, p.summary.value);
        summary.push_back(p.summary);
      }
    } else {
      threshold = resolve_threshold(policy, c);
      const auto eps = run_episodes(policy, c, threshold);
      write_episodes(episodes, eps);
      SummaryRow row = summarize(eps);
      row.sweep_param = cmd.name == "baseline" ? "baseline" : "tca_threshold";
      row.value = format_double(threshold);
      summary.push_back(row);
    }
  }
  {
    auto f = open_out(dir / "summary.csv");
    write_summary_csv(f, summary);
  }
  {
    auto f = open_out(dir / "meta.json");
    f << resolved_config(cmd, threshold).dump(2) << '\n';
  }
  for (const auto &row : summary)
    out << cmd.name << ' ' << row.sweep_param << '=' << row.value << " mean_reward=" << format_double(row.mean_reward)
        << " attacked_frames=" << format_double(row.mean_attacked_frames) << " runs=" << row.runs << '\n';
  return kExitOk;
}

// Full entry point: parse, run, map errors to exit codes.
inline int main_entry(int argc, const char *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
  Command cmd;
  try {
    cmd = parse_args(argc, argv);
  } catch (const UsageError &e) {
    err << "error: " << e.what() << '\n';
    if (std::string(e.what()) != usage_text()) err << usage_text();
    return kExitUsage;
  }
  try {
    return run(cmd, out);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace sparse_strike
