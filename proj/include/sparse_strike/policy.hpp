#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "state.hpp"

namespace sparse_strike {

enum class HeadKind { q_values, probabilities };
enum class LayerKind { conv, dense, flatten };
enum class Activation { relu, linear };

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  // conv
  int out_channels = 0;
  int kernel_rows = 0;
  int kernel_cols = 0;
  int stride_rows = 1;
  int stride_cols = 1;
  // dense
  int out_features = 0;

  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::linear;
};

struct PolicySpec {
  StateShape input_shape{};
  std::vector<LayerSpec> layers;
  HeadKind head = HeadKind::probabilities;
  int action_count = 0;
  // Only applied to q_values heads.
  double softmax_temperature = 1.0;

  bool wraps_q_values() const { return head == HeadKind::q_values; }
};

// Probability vector over the m actions.
struct ActionDistribution {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }

  bool is_valid(double tol = 1e-6) const {
    if (probs.empty()) return false;
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0 && p <= 1.0)) return false;
      sum += p;
    }
    return std::abs(sum - 1.0) <= tol;
  }

  static ActionDistribution checked(std::vector<double> probs) {
    ActionDistribution d{std::move(probs)};
    if (!d.is_valid()) throw DomainError("not a probability distribution");
    return d;
  }
};

inline std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0) {
  if (logits.empty()) return {};
  const double hi = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - hi) / temperature);
    sum += out[i];
  }
  for (double &v : out) v /= sum;
  return out;
}

// Lowest index wins on ties.
inline int greedy_action(const ActionDistribution &dist) {
  return static_cast<int>(std::max_element(dist.probs.begin(), dist.probs.end()) - dist.probs.begin());
}

namespace detail {

struct TensorShape {
  int channels = 0;
  int rows = 0;
  int cols = 0;
  bool flat = false;
  std::size_t size() const { return std::size_t(channels) * rows * cols; }
};

inline TensorShape flattened(const TensorShape &s) { return TensorShape{int(s.size()), 1, 1, true}; }

inline const char *kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::dense: return "dense";
    case LayerKind::flatten: return "flatten";
  }
  return "?";
}

// Walks the layer chain, checking parameter counts, and returns the output shape.
inline TensorShape validate_chain(const PolicySpec &spec) {
  TensorShape cur{spec.input_shape.channels, spec.input_shape.height, spec.input_shape.width, false};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec &l = spec.layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" + kind_name(l.kind) + "): ";
    switch (l.kind) {
      case LayerKind::flatten:
        if (!l.weights.empty() || !l.bias.empty()) throw ValidationError(where + "flatten takes no parameters");
        cur = flattened(cur);
        break;
      case LayerKind::conv: {
        if (cur.flat) throw ValidationError(where + "conv cannot follow a flattened tensor");
        if (l.out_channels <= 0 || l.kernel_rows <= 0 || l.kernel_cols <= 0 || l.stride_rows <= 0 ||
            l.stride_cols <= 0)
          throw ValidationError(where + "out_channels, kernel and stride must be positive");
        if (l.kernel_rows > cur.rows || l.kernel_cols > cur.cols)
          throw ValidationError(where + "kernel larger than input " + std::to_string(cur.rows) + "x" +
                                std::to_string(cur.cols));
        const std::size_t expect = std::size_t(l.out_channels) * cur.channels * l.kernel_rows * l.kernel_cols;
        if (l.weights.size() != expect)
          throw ValidationError(where + "expected " + std::to_string(expect) + " weights, got " +
                                std::to_string(l.weights.size()));
        if (l.bias.size() != std::size_t(l.out_channels))
          throw ValidationError(where + "expected " + std::to_string(l.out_channels) + " bias values, got " +
                                std::to_string(l.bias.size()));
        cur = TensorShape{l.out_channels, (cur.rows - l.kernel_rows) / l.stride_rows + 1,
                          (cur.cols - l.kernel_cols) / l.stride_cols + 1, false};
        break;
      }
      case LayerKind::dense: {
        if (l.out_features <= 0) throw ValidationError(where + "out_features must be positive");
        const std::size_t expect = std::size_t(l.out_features) * cur.size();
        if (l.weights.size() != expect)
          throw ValidationError(where + "expected " + std::to_string(expect) + " weights, got " +
                                std::to_string(l.weights.size()));
        if (l.bias.size() != std::size_t(l.out_features))
          throw ValidationError(where + "expected " + std::to_string(l.out_features) + " bias values, got " +
                                std::to_string(l.bias.size()));
        cur = TensorShape{l.out_features, 1, 1, true};
        break;
      }
    }
  }
  return cur;
}

inline void activate(std::vector<double> &v, Activation a) {
  if (a == Activation::relu)
    for (double &x : v) x = std::max(0.0, x);
}

// Valid-padding cross-correlation; weights laid out [out][in][kr][kc].
inline std::vector<double> conv_forward(const LayerSpec &l, const TensorShape &in, std::span<const double> x,
                                        TensorShape &out) {
  out = TensorShape{l.out_channels, (in.rows - l.kernel_rows) / l.stride_rows + 1,
                    (in.cols - l.kernel_cols) / l.stride_cols + 1, false};
  std::vector<double> y(out.size());
  const std::size_t kplane = std::size_t(l.kernel_rows) * l.kernel_cols;
  for (int oc = 0; oc < out.channels; ++oc) {
    const double *w_oc = l.weights.data() + std::size_t(oc) * in.channels * kplane;
    for (int r = 0; r < out.rows; ++r) {
      for (int c = 0; c < out.cols; ++c) {
        double acc = l.bias[oc];
        for (int ic = 0; ic < in.channels; ++ic) {
          const double *w = w_oc + std::size_t(ic) * kplane;
          for (int kr = 0; kr < l.kernel_rows; ++kr) {
            const std::size_t row = std::size_t(ic) * in.rows + std::size_t(r) * l.stride_rows + kr;
            const double *xin = x.data() + row * in.cols + std::size_t(c) * l.stride_cols;
            const double *wr = w + std::size_t(kr) * l.kernel_cols;
            for (int kc = 0; kc < l.kernel_cols; ++kc) acc += wr[kc] * xin[kc];
          }
        }
        y[(std::size_t(oc) * out.rows + r) * out.cols + c] = acc;
      }
    }
  }
  activate(y, l.activation);
  return y;
}

// Row-major [out][in] weights over the flattened (channel-major) input.
inline std::vector<double> dense_forward(const LayerSpec &l, std::span<const double> x) {
  std::vector<double> y(std::size_t(l.out_features));
  const std::size_t n = x.size();
  for (int o = 0; o < l.out_features; ++o) {
    const double *w = l.weights.data() + std::size_t(o) * n;
    double acc = l.bias[o];
    for (std::size_t i = 0; i < n; ++i) acc += w[i] * x[i];
    y[o] = acc;
  }
  activate(y, l.activation);
  return y;
}

inline LayerKind parse_kind(const std::string &s) {
  if (s == "conv") return LayerKind::conv;
  if (s == "dense") return LayerKind::dense;
  if (s == "flatten") return LayerKind::flatten;
  throw ParseError("unknown layer kind '" + s + "'");
}

inline Activation parse_activation(const std::string &s) {
  if (s == "relu") return Activation::relu;
  if (s == "linear") return Activation::linear;
  throw ParseError("unknown activation '" + s + "'");
}

inline std::pair<int, int> parse_pair(const nlohmann::json &j, const char *key) {
  if (j.is_number_integer()) return {j.get<int>(), j.get<int>()};
  if (j.is_array() && j.size() == 2) return {j[0].get<int>(), j[1].get<int>()};
  throw ParseError(std::string("'") + key + "' must be an integer or a pair of integers");
}

}  // namespace detail

// Checks parameter counts, shape chaining and the action count.
inline void validate_policy(const PolicySpec &spec) {
  if (spec.action_count < 2) throw ValidationError("action_count must be at least 2");
  if (spec.layers.empty()) throw ValidationError("policy has no layers");
  if (!(spec.softmax_temperature > 0.0)) throw ValidationError("softmax_temperature must be positive");
  const auto out = detail::validate_chain(spec);
  if (out.size() != std::size_t(spec.action_count))
    throw ValidationError("network output has " + std::to_string(out.size()) + " values but action_count is " +
                          std::to_string(spec.action_count));
}

inline PolicySpec load_policy(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("policy file is not valid JSON: ") + e.what());
  }
  PolicySpec spec;
  try {
    const auto &shape = doc.at("input_shape");
    if (!shape.is_array() || shape.size() != 3) throw ParseError("input_shape must be [height, width, channels]");
    try {
      spec.input_shape = StateShape(shape[0].get<int>(), shape[1].get<int>(), shape[2].get<int>());
    } catch (const ShapeError &e) {
      throw ValidationError(e.what());
    }
    spec.action_count = doc.at("action_count").get<int>();
    const auto head = doc.at("head").get<std::string>();
    if (head == "q_values")
      spec.head = HeadKind::q_values;
    else if (head == "probabilities")
      spec.head = HeadKind::probabilities;
    else
      throw ParseError("unknown head '" + head + "'");
    spec.softmax_temperature = doc.value("softmax_temperature", 1.0);
    for (const auto &jl : doc.at("layers")) {
      LayerSpec l;
      l.kind = detail::parse_kind(jl.at("kind").get<std::string>());
      if (l.kind == LayerKind::conv) {
        l.out_channels = jl.at("out_channels").get<int>();
        std::tie(l.kernel_rows, l.kernel_cols) = detail::parse_pair(jl.at("kernel"), "kernel");
        std::tie(l.stride_rows, l.stride_cols) = detail::parse_pair(jl.value("stride", json(1)), "stride");
      } else if (l.kind == LayerKind::dense) {
        l.out_features = jl.at("out_features").get<int>();
      }
      if (l.kind != LayerKind::flatten) {
        l.weights = jl.at("weights").get<std::vector<double>>();
        l.bias = jl.at("bias").get<std::vector<double>>();
        l.activation = detail::parse_activation(jl.value("activation", std::string("linear")));
      }
      spec.layers.push_back(std::move(l));
    }
  } catch (const json::exception &e) {
    throw ParseError(std::string("malformed policy file: ") + e.what());
  }
  validate_policy(spec);
  return spec;
}

inline PolicySpec load_policy_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open policy file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_policy(ss.str());
}

inline nlohmann::json policy_to_json(const PolicySpec &spec) {
  using nlohmann::json;
  json doc;
  doc["input_shape"] = {spec.input_shape.height, spec.input_shape.width, spec.input_shape.channels};
  doc["action_count"] = spec.action_count;
  doc["head"] = spec.head == HeadKind::q_values ? "q_values" : "probabilities";
  if (spec.head == HeadKind::q_values && spec.softmax_temperature != 1.0)
    doc["softmax_temperature"] = spec.softmax_temperature;
  json layers = json::array();
  for (const auto &l : spec.layers) {
    json jl;
    jl["kind"] = detail::kind_name(l.kind);
    if (l.kind == LayerKind::conv) {
      jl["out_channels"] = l.out_channels;
      jl["kernel"] = {l.kernel_rows, l.kernel_cols};
      jl["stride"] = {l.stride_rows, l.stride_cols};
    } else if (l.kind == LayerKind::dense) {
      jl["out_features"] = l.out_features;
    }
    if (l.kind != LayerKind::flatten) {
      jl["activation"] = l.activation == Activation::relu ? "relu" : "linear";
      jl["weights"] = l.weights;
      jl["bias"] = l.bias;
    }
    layers.push_back(std::move(jl));
  }
  doc["layers"] = std::move(layers);
  return doc;
}

// Raw network outputs (Q-values or logits) before the softmax head.
inline std::vector<double> forward_logits(const PolicySpec &policy, const FrameState &state) {
  if (!(state.shape() == policy.input_shape))
    throw ShapeError("state shape " + state.shape().to_string() + " does not match policy input " +
                     policy.input_shape.to_string());
  const auto px = state.pixels();
  std::vector<double> x(px.size());
  for (std::size_t i = 0; i < px.size(); ++i) x[i] = px[i] / 255.0;

  detail::TensorShape shape{policy.input_shape.channels, policy.input_shape.height, policy.input_shape.width, false};
  for (const auto &l : policy.layers) {
    switch (l.kind) {
      case LayerKind::flatten: shape = detail::flattened(shape); break;
      case LayerKind::conv: {
        detail::TensorShape out;
        x = detail::conv_forward(l, shape, x, out);
        shape = out;
        break;
      }
      case LayerKind::dense:
        x = detail::dense_forward(l, x);
        shape = detail::TensorShape{l.out_features, 1, 1, true};
        break;
    }
  }
  return x;
}

// Stateless forward pass. Both head kinds end in a softmax; q_values heads use
// the configured temperature.
inline ActionDistribution query(const PolicySpec &policy, const FrameState &state) {
  const auto logits = forward_logits(policy, state);
  const double temperature = policy.head == HeadKind::q_values ? policy.softmax_temperature : 1.0;
  return ActionDistribution{softmax(logits, temperature)};
}

// Counts oracle queries against one policy. The policy must outlive the session.
class QuerySession {
 public:
  explicit QuerySession(const PolicySpec &policy) : policy_(&policy) {}
  QuerySession(const QuerySession &) = delete;
  QuerySession &operator=(const QuerySession &) = delete;

  ActionDistribution query(const FrameState &state) {
    auto dist = sparse_strike::query(*policy_, state);
    count_.fetch_add(1, std::memory_order_relaxed);
    return dist;
  }

  std::uint64_t query_count() const { return count_.load(std::memory_order_relaxed); }
  void reset() { count_.store(0, std::memory_order_relaxed); }
  const PolicySpec &policy() const { return *policy_; }

 private:
  const PolicySpec *policy_;
  std::atomic<std::uint64_t> count_{0};
};

}  // namespace sparse_strike
