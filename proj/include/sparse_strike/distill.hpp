#pragma once

// Hand-built policies. None of these are trained: the weights are written
// down directly so the network computes a known function of the screen.

#include <vector>

#include "envs.hpp"
#include "errors.hpp"
#include "policy.hpp"
#include "state.hpp"

namespace sparse_strike {

struct PongExpertWeights {
  double gain = 4.0;       // logit slope per column of ball/paddle offset
  double noop_bias = 2.0;  // NOOP logit; must stay below gain so a 1-column offset moves the paddle
};

// Linear clone of MiniPong's scripted tracker. With v = pixel / 255 on the
// newest channel, the only pixels above the bottom row belong to the ball and
// the bottom row holds exactly the 3-cell paddle, so
//   d = sum_j j * v(ball rows, j) - sum_j j * v(h-1, j) / (3 * 128/255)
// is ball column minus paddle center. Logits are [noop_bias, -gain*d, gain*d].
inline PolicySpec distill_mini_pong(const StateShape &shape, PongExpertWeights k = {}) {
  if (shape.width < 3 || shape.height < 4) throw ConfigError("mini_pong needs at least a 4x3 screen");
  const std::size_t n = shape.size();
  const double paddle_mass = 3.0 * kPaddle / 255.0;
  LayerSpec dense;
  dense.kind = LayerKind::dense;
  dense.out_features = 3;
  dense.weights.assign(3 * n, 0.0);
  dense.bias = {k.noop_bias, 0.0, 0.0};
  FrameState probe(shape);
  const int newest = shape.channels - 1;
  for (int x = 0; x < shape.height; ++x) {
    for (int y = 0; y < shape.width; ++y) {
      const double coeff = x == shape.height - 1 ? -double(y) / paddle_mass : double(y);
      const std::size_t i = probe.offset(x, y, newest);
      dense.weights[1 * n + i] = -k.gain * coeff;
      dense.weights[2 * n + i] = k.gain * coeff;
    }
  }
  PolicySpec spec;
  spec.input_shape = shape;
  spec.head = HeadKind::probabilities;
  spec.action_count = 3;
  spec.layers.push_back(std::move(dense));
  validate_policy(spec);
  return spec;
}

// Conv(1x1) + dense clone of GridChase's scripted controller. The 1x1 conv
// separates the target (255) from the agent (128) on the newest channel:
//   ch0 = relu(4v - 3)  -> 1 on the target, 0 elsewhere
//   ch1 = relu(4v - 1)  -> 3 on the target, 4*128/255 - 1 on the agent
// The dense layer turns these into row/column offsets of target minus agent
// and scores UP/DOWN by gain * width * row offset, LEFT/RIGHT by gain * column
// offset, so any row offset outranks every column offset (rows first, like
// the scripted controller).
inline PolicySpec distill_grid_chase(const StateShape &shape, double gain = 4.0) {
  const int C = shape.channels;
  LayerSpec conv;
  conv.kind = LayerKind::conv;
  conv.out_channels = 2;
  conv.kernel_rows = conv.kernel_cols = 1;
  conv.weights.assign(std::size_t(2) * C, 0.0);
  conv.weights[0 * C + (C - 1)] = 4.0;
  conv.weights[1 * C + (C - 1)] = 4.0;
  conv.bias = {-3.0, -1.0};
  conv.activation = Activation::relu;

  const double agent_level = 4.0 * kPaddle / 255.0 - 1.0;
  const std::size_t plane = shape.plane_size();
  const std::size_t n = 2 * plane;
  LayerSpec dense;
  dense.kind = LayerKind::dense;
  dense.out_features = 4;
  dense.weights.assign(4 * n, 0.0);
  dense.bias = {0.0, 0.0, 0.0, 0.0};
  for (int x = 0; x < shape.height; ++x) {
    for (int y = 0; y < shape.width; ++y) {
      const std::size_t p = std::size_t(x) * shape.width + y;
      // target position minus agent position, via ch0 and (ch1 - 3 ch0) / agent_level
      const double row_ch0 = shape.width * x * (1.0 + 3.0 / agent_level);
      const double row_ch1 = -shape.width * x / agent_level;
      const double col_ch0 = y * (1.0 + 3.0 / agent_level);
      const double col_ch1 = -y / agent_level;
      dense.weights[0 * n + p] = -gain * row_ch0;
      dense.weights[0 * n + plane + p] = -gain * row_ch1;
      dense.weights[1 * n + p] = gain * row_ch0;
      dense.weights[1 * n + plane + p] = gain * row_ch1;
      dense.weights[2 * n + p] = -gain * col_ch0;
      dense.weights[2 * n + plane + p] = -gain * col_ch1;
      dense.weights[3 * n + p] = gain * col_ch0;
      dense.weights[3 * n + plane + p] = gain * col_ch1;
    }
  }
  PolicySpec spec;
  spec.input_shape = shape;
  spec.head = HeadKind::probabilities;
  spec.action_count = 4;
  spec.layers.push_back(std::move(conv));
  spec.layers.push_back(LayerSpec{.kind = LayerKind::flatten});
  spec.layers.push_back(std::move(dense));
  validate_policy(spec);
  return spec;
}

inline PolicySpec distill_expert(EnvKind kind, const StateShape &shape) {
  return kind == EnvKind::mini_pong ? distill_mini_pong(shape) : distill_grid_chase(shape);
}

// Two-action linear policy whose only sensitivity is pixel (0, 0) of the
// newest channel: logits [bias, weight * v(0,0)]. On a state with u = 0 there
// it picks action 0, and any single-pixel push of that pixel above
// bias / weight * 255 flips it to action 1.
inline PolicySpec pixel_trigger_policy(const StateShape &shape, double weight = 10.0, double bias = 1.0) {
  const std::size_t n = shape.size();
  LayerSpec dense;
  dense.kind = LayerKind::dense;
  dense.out_features = 2;
  dense.weights.assign(2 * n, 0.0);
  dense.weights[n + FrameState(shape).offset(0, 0, shape.channels - 1)] = weight;
  dense.bias = {bias, 0.0};
  PolicySpec spec;
  spec.input_shape = shape;
  spec.head = HeadKind::probabilities;
  spec.action_count = 2;
  spec.layers.push_back(std::move(dense));
  validate_policy(spec);
  return spec;
}

// All-zero network: uniform output on every state.
inline PolicySpec frozen_uniform_policy(const StateShape &shape, int action_count) {
  LayerSpec dense;
  dense.kind = LayerKind::dense;
  dense.out_features = action_count;
  dense.weights.assign(std::size_t(action_count) * shape.size(), 0.0);
  dense.bias.assign(std::size_t(action_count), 0.0);
  PolicySpec spec;
  spec.input_shape = shape;
  spec.head = HeadKind::q_values;
  spec.action_count = action_count;
  spec.layers.push_back(std::move(dense));
  validate_policy(spec);
  return spec;
}

}  // namespace sparse_strike
