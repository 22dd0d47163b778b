#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "objective.hpp"
#include "perturbation.hpp"
#include "policy.hpp"

namespace sparse_strike {

enum class InitMode { random_init, warm_start };

inline const char *to_string(InitMode m) { return m == InitMode::random_init ? "random_init" : "warm_start"; }

inline InitMode parse_init_mode(const std::string &s) {
  if (s == "random_init" || s == "random" || s == "ri") return InitMode::random_init;
  if (s == "warm_start" || s == "warm" || s == "wsi") return InitMode::warm_start;
  throw ConfigError("unknown init mode '" + s + "'");
}

struct GaConfig {
  int population_size = 10;
  double selection_rate = 0.2;
  double mutation_rate = 0.1;
  int max_evaluations = 400;
  InitMode init_mode = InitMode::random_init;

  // ceil(lambda * beta), guarded against 10 * 0.2 landing a hair above 2.
  int elite_count() const { return static_cast<int>(std::ceil(population_size * selection_rate - 1e-9)); }

  void validate() const {
    if (population_size < 2) throw ConfigError("population size must be at least 2");
    if (!(selection_rate > 0.0 && selection_rate < 1.0)) throw ConfigError("selection rate must lie in (0, 1)");
    if (!(mutation_rate > 0.0)) throw ConfigError("mutation rate must be positive");
    if (max_evaluations < 1) throw ConfigError("evaluation budget must be at least 1");
    const int elites = elite_count();
    if (elites < 1 || elites > population_size - 1)
      throw ConfigError("elite count " + std::to_string(elites) + " not in [1, population_size - 1]");
    if ((population_size - elites) % 2 != 0)
      throw ConfigError("population_size - elite_count must be even, got " + std::to_string(population_size - elites));
  }
};

struct GaResult {
  AdversaryGenome best_genome;
  AttackOutcome best_outcome;
  int evaluations_used = 0;
  int generations = 0;
  bool terminated_early = false;
  // Best discrepancy seen after each evaluation.
  std::vector<double> best_history;
};

// Child takes a's first `cut` flattened values and b's remainder.
inline AdversaryGenome crossover_at(const AdversaryGenome &a, const AdversaryGenome &b, int cut) {
  if (a.size() != b.size()) throw ConfigError("crossover parents differ in size");
  const auto fa = a.flatten();
  const auto fb = b.flatten();
  if (cut < 1 || cut >= int(fa.size())) throw ConfigError("crossover cut " + std::to_string(cut) + " out of range");
  std::vector<int> child(fa.begin(), fa.begin() + cut);
  child.insert(child.end(), fb.begin() + cut, fb.end());
  return AdversaryGenome::unflatten(child);
}

// One-point crossover with the cut drawn uniformly from [1, 3n - 1].
template <typename Rng>
AdversaryGenome crossover(const AdversaryGenome &a, const AdversaryGenome &b, Rng &rng) {
  if (a.size() != b.size()) throw ConfigError("crossover parents differ in size");
  if (a.size() == 0) throw ConfigError("cannot cross empty genomes");
  std::uniform_int_distribution<int> cut(1, int(3 * a.size()) - 1);
  return crossover_at(a, b, cut(rng));
}

// Adds round(gamma * width * eps) to every component, where width is the
// component's domain size, then clamps back into the box. `noise` yields the
// standard-normal draws.
template <typename Noise>
AdversaryGenome mutate_with_noise(const AdversaryGenome &genome, double gamma, const StateShape &shape, Noise &&noise,
                                  int max_value = kMaxPixel) {
  AdversaryGenome out = genome;
  const double wx = gamma * shape.height;
  const double wy = gamma * shape.width;
  const double wp = gamma * (2.0 * max_value + 1.0);
  for (auto &g : out.genes) {
    g.x = std::clamp(g.x + int(std::lround(wx * noise())), 0, shape.height - 1);
    g.y = std::clamp(g.y + int(std::lround(wy * noise())), 0, shape.width - 1);
    g.p = std::clamp(g.p + int(std::lround(wp * noise())), -max_value, max_value);
  }
  return out;
}

template <typename Rng>
AdversaryGenome mutate(const AdversaryGenome &genome, double gamma, const StateShape &shape, Rng &rng,
                       int max_value = kMaxPixel) {
  if (!(gamma > 0.0)) throw ConfigError("mutation rate must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  return mutate_with_noise(genome, gamma, shape, [&] { return normal(rng); }, max_value);
}

namespace detail {

inline bool fitter(double da, const AdversaryGenome &a, double db, const AdversaryGenome &b) {
  return da > db || (da == db && a < b);
}

inline void check_genome_fits(const AdversaryGenome &g, const StateShape &shape, const FsaConfig &fsa) {
  if (int(g.size()) != fsa.n)
    throw ConfigError("warm seed has " + std::to_string(g.size()) + " genes, expected " + std::to_string(fsa.n));
  for (const auto &gene : g.genes)
    if (gene.x < 0 || gene.x >= shape.height || gene.y < 0 || gene.y >= shape.width)
      throw ConfigError("warm seed gene outside the state");
}

}  // namespace detail

// Elitist GA maximizing the discrepancy of apply(state, genome). Stops at the
// first evaluation with positive discrepancy or when the budget is spent.
// Elites keep their scores, so only new individuals cost evaluations.
template <typename Rng>
GaResult optimize(QuerySession &session, const FrameState &state, int original_action, const FsaConfig &fsa,
                  const GaConfig &ga, const std::optional<AdversaryGenome> &warm_seed, Rng &rng) {
  fsa.validate();
  ga.validate();
  if (warm_seed && ga.init_mode != InitMode::warm_start)
    throw ConfigError("a warm seed was supplied but init mode is random_init");
  const auto &shape = state.shape();

  struct Individual {
    AdversaryGenome genome;
    std::optional<AttackOutcome> outcome;
  };
  std::vector<Individual> pop;
  pop.reserve(ga.population_size);
  for (int i = 0; i < ga.population_size; ++i) pop.push_back({random_genome(shape, fsa, rng), std::nullopt});
  if (warm_seed) {
    detail::check_genome_fits(*warm_seed, shape, fsa);
    pop[0].genome = *warm_seed;
  }

  GaResult result;
  bool have_best = false;

  // Scores every unscored individual in order; true means stop.
  auto score_pending = [&]() {
    for (auto &ind : pop) {
      if (ind.outcome) continue;
      if (result.evaluations_used >= ga.max_evaluations) return true;
      ind.outcome = evaluate(session, state, ind.genome, original_action, fsa);
      ++result.evaluations_used;
      if (!have_best || detail::fitter(ind.outcome->discrepancy, ind.genome, result.best_outcome.discrepancy,
                                       result.best_genome)) {
        result.best_genome = ind.genome;
        result.best_outcome = *ind.outcome;
        have_best = true;
      }
      result.best_history.push_back(result.best_outcome.discrepancy);
      if (ind.outcome->success) {
        result.terminated_early = true;
        return true;
      }
    }
    return false;
  };

  const int elites = ga.elite_count();
  const int pairs = (ga.population_size - elites) / 2;
  std::uniform_int_distribution<int> pick(0, elites - 1);
  std::uniform_int_distribution<int> cut(1, 3 * fsa.n - 1);

  while (!score_pending() && result.evaluations_used < ga.max_evaluations) {
    std::sort(pop.begin(), pop.end(), [](const Individual &a, const Individual &b) {
      return detail::fitter(a.outcome->discrepancy, a.genome, b.outcome->discrepancy, b.genome);
    });
    pop.resize(elites);
    for (int j = 0; j < pairs; ++j) {
      const int ia = pick(rng);
      int ib = pick(rng);
      if (elites >= 2)
        while (ib == ia) ib = pick(rng);
      const AdversaryGenome a = pop[ia].genome;
      const AdversaryGenome b = pop[ib].genome;
      const int at = cut(rng);
      pop.push_back({mutate(crossover_at(a, b, at), ga.mutation_rate, shape, rng, fsa.max_value), std::nullopt});
      pop.push_back({mutate(crossover_at(b, a, at), ga.mutation_rate, shape, rng, fsa.max_value), std::nullopt});
    }
    ++result.generations;
  }
  return result;
}

}  // namespace sparse_strike
