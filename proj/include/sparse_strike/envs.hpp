#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <string>

#include "errors.hpp"
#include "random.hpp"
#include "state.hpp"

namespace sparse_strike {

enum class EnvKind { mini_pong, grid_chase };

inline const char *to_string(EnvKind k) { return k == EnvKind::mini_pong ? "mini_pong" : "grid_chase"; }

inline EnvKind parse_env_kind(const std::string &s) {
  if (s == "mini_pong") return EnvKind::mini_pong;
  if (s == "grid_chase") return EnvKind::grid_chase;
  throw ConfigError("unknown environment '" + s + "'");
}

inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kBall = 255;
inline constexpr std::uint8_t kPaddle = 128;

struct EnvSpec {
  EnvKind kind = EnvKind::mini_pong;
  // height x width is the rendered screen; channels is the stacking depth
  // used by whoever turns screens into states.
  StateShape shape{32, 32, 4};
  int max_steps = 400;
  int lives = 3;
  std::uint64_t seed = 0;

  static EnvSpec defaults(EnvKind kind) {
    EnvSpec s;
    s.kind = kind;
    if (kind == EnvKind::grid_chase) {
      s.shape = StateShape(16, 16, 4);
      s.max_steps = 200;
    }
    return s;
  }
};

struct StepResult {
  Frame observation;
  double reward = 0.0;
  bool done = false;
  int t = 0;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual Frame reset() = 0;
  virtual StepResult step(int action) = 0;
  virtual int action_count() const = 0;
  // Scripted controller with privileged access to the true state.
  virtual int expert_action() const = 0;

  bool done() const { return done_; }
  int t() const { return t_; }
  const EnvSpec &spec() const { return spec_; }

 protected:
  explicit Environment(EnvSpec spec) : spec_(spec), rng_(spec.seed) {}

  void begin_step(int action) {
    if (!started_) throw LifecycleError("step called before reset");
    if (done_) throw LifecycleError("step called on a finished episode");
    if (action < 0 || action >= action_count())
      throw BoundsError("action " + std::to_string(action) + " not in [0, " + std::to_string(action_count()) + ")");
  }

  void begin_reset() {
    rng_ = SplitMix64(spec_.seed);
    t_ = 0;
    done_ = false;
    started_ = true;
  }

  EnvSpec spec_;
  SplitMix64 rng_;
  int t_ = 0;
  bool done_ = false;
  bool started_ = false;
};

// Actions {NOOP, LEFT, RIGHT}. The ball moves one cell diagonally per step
// and bounces elastically off the side and top walls. A 3-cell paddle sits on
// the bottom row; when the descending ball reaches the row above it, a covered
// column scores +1 and reflects the ball, an uncovered one costs a life and
// respawns the ball on the top row.
class MiniPong final : public Environment {
 public:
  enum Action { kNoop = 0, kLeft = 1, kRight = 2 };

  explicit MiniPong(EnvSpec spec) : Environment(spec) {
    if (spec.shape.width < 3 || spec.shape.height < 4) throw ConfigError("mini_pong needs at least a 4x3 screen");
    if (spec.lives < 1) throw ConfigError("mini_pong needs at least one life");
    if (spec.max_steps < 1) throw ConfigError("max_steps must be positive");
  }

  Frame reset() override {
    begin_reset();
    lives_ = spec_.lives;
    paddle_ = std::clamp(spec_.shape.width / 2, 1, spec_.shape.width - 2);
    spawn_ball();
    return render();
  }

  StepResult step(int action) override {
    begin_step(action);
    const int w = spec_.shape.width;
    const int h = spec_.shape.height;
    if (action == kLeft) paddle_ = std::max(1, paddle_ - 1);
    if (action == kRight) paddle_ = std::min(w - 2, paddle_ + 1);

    ball_col_ += ball_dc_;
    if (ball_col_ < 0) {
      ball_col_ = -ball_col_;
      ball_dc_ = 1;
    } else if (ball_col_ > w - 1) {
      ball_col_ = 2 * (w - 1) - ball_col_;
      ball_dc_ = -1;
    }
    ball_row_ += ball_dr_;
    if (ball_row_ < 0) {
      ball_row_ = -ball_row_;
      ball_dr_ = 1;
    }

    double reward = 0.0;
    if (ball_dr_ == 1 && ball_row_ == h - 2) {
      if (std::abs(ball_col_ - paddle_) <= 1) {
        reward = 1.0;
        ball_dr_ = -1;
      } else {
        --lives_;
        spawn_ball();
      }
    }
    ++t_;
    done_ = lives_ == 0 || t_ >= spec_.max_steps;
    return StepResult{render(), reward, done_, t_};
  }

  int action_count() const override { return 3; }

  int expert_action() const override {
    if (ball_col_ < paddle_) return kLeft;
    if (ball_col_ > paddle_) return kRight;
    return kNoop;
  }

  int lives() const { return lives_; }
  int paddle() const { return paddle_; }
  int ball_row() const { return ball_row_; }
  int ball_col() const { return ball_col_; }

 private:
  void spawn_ball() {
    ball_row_ = 0;
    ball_col_ = int(rng_.below(std::uint64_t(spec_.shape.width)));
    ball_dc_ = rng_.below(2) == 0 ? -1 : 1;
    ball_dr_ = 1;
  }

  Frame render() const {
    Frame f(spec_.shape.height, spec_.shape.width);
    for (int c = paddle_ - 1; c <= paddle_ + 1; ++c) f.set(spec_.shape.height - 1, c, kPaddle);
    f.set(ball_row_, ball_col_, kBall);
    return f;
  }

  int lives_ = 0;
  int paddle_ = 0;
  int ball_row_ = 0;
  int ball_col_ = 0;
  int ball_dr_ = 1;
  int ball_dc_ = 1;
};

// Actions {UP, DOWN, LEFT, RIGHT}. The agent walks one cell per step (walls
// block); stepping onto the target scores +1 and the target respawns on a
// seed-determined free cell. Runs for exactly max_steps steps.
class GridChase final : public Environment {
 public:
  enum Action { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

  explicit GridChase(EnvSpec spec) : Environment(spec) {
    if (spec.shape.plane_size() < 2) throw ConfigError("grid_chase needs at least two cells");
    if (spec.max_steps < 1) throw ConfigError("max_steps must be positive");
  }

  Frame reset() override {
    begin_reset();
    agent_row_ = int(rng_.below(std::uint64_t(spec_.shape.height)));
    agent_col_ = int(rng_.below(std::uint64_t(spec_.shape.width)));
    spawn_target();
    return render();
  }

  StepResult step(int action) override {
    begin_step(action);
    switch (action) {
      case kUp: agent_row_ = std::max(0, agent_row_ - 1); break;
      case kDown: agent_row_ = std::min(spec_.shape.height - 1, agent_row_ + 1); break;
      case kLeft: agent_col_ = std::max(0, agent_col_ - 1); break;
      case kRight: agent_col_ = std::min(spec_.shape.width - 1, agent_col_ + 1); break;
    }
    double reward = 0.0;
    if (agent_row_ == target_row_ && agent_col_ == target_col_) {
      reward = 1.0;
      spawn_target();
    }
    ++t_;
    done_ = t_ >= spec_.max_steps;
    return StepResult{render(), reward, done_, t_};
  }

  int action_count() const override { return 4; }

  int expert_action() const override {
    if (target_row_ < agent_row_) return kUp;
    if (target_row_ > agent_row_) return kDown;
    return target_col_ < agent_col_ ? kLeft : kRight;
  }

  int agent_row() const { return agent_row_; }
  int agent_col() const { return agent_col_; }
  int target_row() const { return target_row_; }
  int target_col() const { return target_col_; }

 private:
  void spawn_target() {
    do {
      target_row_ = int(rng_.below(std::uint64_t(spec_.shape.height)));
      target_col_ = int(rng_.below(std::uint64_t(spec_.shape.width)));
    } while (target_row_ == agent_row_ && target_col_ == agent_col_);
  }

  Frame render() const {
    Frame f(spec_.shape.height, spec_.shape.width);
    f.set(agent_row_, agent_col_, kPaddle);
    f.set(target_row_, target_col_, kBall);
    return f;
  }

  int agent_row_ = 0;
  int agent_col_ = 0;
  int target_row_ = 0;
  int target_col_ = 0;
};

inline std::unique_ptr<Environment> make_environment(const EnvSpec &spec) {
  switch (spec.kind) {
    case EnvKind::mini_pong: return std::make_unique<MiniPong>(spec);
    case EnvKind::grid_chase: return std::make_unique<GridChase>(spec);
  }
  throw ConfigError("unknown environment kind");
}

inline int env_action_count(EnvKind kind) { return kind == EnvKind::mini_pong ? 3 : 4; }

}  // namespace sparse_strike
