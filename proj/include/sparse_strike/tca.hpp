#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "errors.hpp"
#include "policy.hpp"

namespace sparse_strike {

struct TcaConfig {
  double threshold = 0.5;

  void validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0))
      throw ConfigError("TCA threshold must lie in [0, 1], got " + std::to_string(threshold));
  }
};

// Shannon entropy of the distribution normalized by log(m); 0 log 0 = 0.
inline double attack_uncertainty(const ActionDistribution &dist) {
  const std::size_t m = dist.size();
  if (m < 2) throw ConfigError("attack uncertainty needs at least two actions");
  double h = 0.0;
  for (double p : dist.probs)
    if (p > 0.0) h -= p * std::log(p);
  return std::clamp(h / std::log(double(m)), 0.0, 1.0);
}

inline bool should_attack(double zeta, const TcaConfig &config) { return zeta < config.threshold; }

inline double mean_uncertainty_threshold(std::span<const ActionDistribution> trajectory) {
  if (trajectory.empty()) throw InputError("cannot average uncertainty over an empty trajectory");
  double sum = 0.0;
  for (const auto &d : trajectory) sum += attack_uncertainty(d);
  return sum / double(trajectory.size());
}

}  // namespace sparse_strike
