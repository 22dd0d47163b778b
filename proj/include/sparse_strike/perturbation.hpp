#pragma once

#include <compare>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "state.hpp"

namespace sparse_strike {

// One perturbed pixel: row x, column y, additive delta p.
struct Gene {
  int x = 0;
  int y = 0;
  int p = 0;
  friend auto operator<=>(const Gene &, const Gene &) = default;
};

// Ordering is lexicographic over the flattened [x1, y1, p1, ..., xn, yn, pn].
struct AdversaryGenome {
  std::vector<Gene> genes;

  std::size_t size() const { return genes.size(); }
  friend auto operator<=>(const AdversaryGenome &, const AdversaryGenome &) = default;
  friend bool operator==(const AdversaryGenome &, const AdversaryGenome &) = default;

  std::vector<int> flatten() const {
    std::vector<int> out;
    out.reserve(genes.size() * 3);
    for (const auto &g : genes) out.insert(out.end(), {g.x, g.y, g.p});
    return out;
  }

  static AdversaryGenome unflatten(const std::vector<int> &flat) {
    if (flat.size() % 3 != 0 || flat.empty()) throw ConfigError("flattened genome length must be a positive multiple of 3");
    AdversaryGenome g;
    for (std::size_t i = 0; i < flat.size(); i += 3) g.genes.push_back({flat[i], flat[i + 1], flat[i + 2]});
    return g;
  }
};

inline nlohmann::json genome_to_json(const AdversaryGenome &g) {
  auto arr = nlohmann::json::array();
  for (const auto &gene : g.genes) arr.push_back({gene.x, gene.y, gene.p});
  return arr;
}

inline AdversaryGenome genome_from_json(const nlohmann::json &j) {
  AdversaryGenome g;
  for (const auto &t : j) {
    if (!t.is_array() || t.size() != 3) throw ParseError("genome entries must be [x, y, p] triples");
    g.genes.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
  }
  return g;
}

enum class TargetChannels { newest_only, all_channels };

struct FsaConfig {
  int n = 1;
  TargetChannels target_channels = TargetChannels::newest_only;
  int max_value = kMaxPixel;

  void validate() const {
    if (n < 1) throw ConfigError("FSA size n must be at least 1, got " + std::to_string(n));
    if (max_value < 1 || max_value > kMaxPixel) throw ConfigError("max pixel value must be in [1, 255]");
  }
};

inline const char *to_string(TargetChannels t) {
  return t == TargetChannels::newest_only ? "newest_only" : "all_channels";
}

inline TargetChannels parse_target_channels(const std::string &s) {
  if (s == "newest_only" || s == "newest") return TargetChannels::newest_only;
  if (s == "all_channels" || s == "all") return TargetChannels::all_channels;
  throw ConfigError("unknown target channels '" + s + "'");
}

template <typename Rng>
AdversaryGenome random_genome(const StateShape &shape, const FsaConfig &config, Rng &rng) {
  config.validate();
  std::uniform_int_distribution<int> xs(0, shape.height - 1);
  std::uniform_int_distribution<int> ys(0, shape.width - 1);
  std::uniform_int_distribution<int> ps(-config.max_value, config.max_value);
  AdversaryGenome g;
  g.genes.reserve(config.n);
  for (int i = 0; i < config.n; ++i) {
    const int x = xs(rng);
    const int y = ys(rng);
    g.genes.push_back({x, y, ps(rng)});
  }
  return g;
}

// Writes clamp(u + p, 0, max_value) at every gene, in order, so a later gene
// wins over an earlier one at the same coordinate. The input is untouched.
inline FrameState apply(const FrameState &state, const AdversaryGenome &genome, const FsaConfig &config) {
  const auto &shape = state.shape();
  const auto src = state.pixels();
  std::vector<std::uint8_t> px(src.begin(), src.end());
  const int first_channel = config.target_channels == TargetChannels::newest_only ? shape.channels - 1 : 0;
  for (const auto &g : genome.genes) {
    if (g.x < 0 || g.x >= shape.height || g.y < 0 || g.y >= shape.width)
      throw BoundsError("gene (" + std::to_string(g.x) + ", " + std::to_string(g.y) + ") outside " +
                        std::to_string(shape.height) + "x" + std::to_string(shape.width));
    for (int c = first_channel; c < shape.channels; ++c) {
      auto &slot = px[state.offset(g.x, g.y, c)];
      const int v = int(src[state.offset(g.x, g.y, c)]) + g.p;
      slot = static_cast<std::uint8_t>(std::clamp(v, 0, config.max_value));
    }
  }
  return FrameState(shape, std::move(px));
}

inline double perturbed_fraction(const StateShape &shape, const FsaConfig &config) {
  return double(config.n) / double(shape.plane_size());
}

}  // namespace sparse_strike
