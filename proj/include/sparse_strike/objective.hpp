#pragma once

#include <string>

#include "errors.hpp"
#include "perturbation.hpp"
#include "policy.hpp"

namespace sparse_strike {

// max_{j != o} probs[j] - probs[o]. A positive value certifies that the
// greedy action of `perturbed` differs from o.
inline double discrepancy(const ActionDistribution &perturbed, int original_action) {
  const int m = static_cast<int>(perturbed.size());
  if (m < 2) throw IndexError("discrepancy needs at least two actions");
  if (original_action < 0 || original_action >= m)
    throw IndexError("original action " + std::to_string(original_action) + " not in [0, " + std::to_string(m) + ")");
  double best_other = -1.0;
  for (int j = 0; j < m; ++j)
    if (j != original_action) best_other = std::max(best_other, perturbed[j]);
  return best_other - perturbed[original_action];
}

struct AttackOutcome {
  double discrepancy = 0.0;
  int original_action = 0;
  int perturbed_action = 0;
  bool success = false;

  // Builds the outcome from a perturbed distribution and enforces
  // success => perturbed_action != original_action on every construction.
  static AttackOutcome from(const ActionDistribution &perturbed, int original_action) {
    AttackOutcome out;
    out.discrepancy = sparse_strike::discrepancy(perturbed, original_action);
    out.original_action = original_action;
    out.perturbed_action = greedy_action(perturbed);
    out.success = out.discrepancy > 0.0;
    if (out.success && out.perturbed_action == out.original_action)
      throw InvariantViolation("positive discrepancy without an action change");
    return out;
  }
};

// One oracle query on apply(state, genome).
inline AttackOutcome evaluate(QuerySession &session, const FrameState &state, const AdversaryGenome &genome,
                              int original_action, const FsaConfig &config) {
  const auto perturbed = apply(state, genome, config);
  return AttackOutcome::from(session.query(perturbed), original_action);
}

}  // namespace sparse_strike
