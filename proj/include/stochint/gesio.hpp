#ifndef STOCHINT_GESIO_HPP_
#define STOCHINT_GESIO_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stochint/dataset.hpp"
#include "stochint/error.hpp"
#include "stochint/nuisance.hpp"
#include "stochint/random.hpp"
#include "stochint/sie.hpp"

namespace stochint {

struct DeltaBounds {
  double lo = 0.0;
  double hi = 10.0;

  double clamp(double v) const { return std::clamp(v, lo, hi); }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

// Per-unit stochastic degrees Delta = (delta_1, ..., delta_n), the genome.
struct InterventionVector {
  std::vector<double> deltas;
  DeltaBounds bounds;

  std::size_t size() const { return deltas.size(); }
  bool within_bounds() const {
    return std::all_of(deltas.begin(), deltas.end(),
                       [this](double v) { return bounds.contains(v); });
  }
  double mean() const {
    double s = 0.0;
    for (double v : deltas) s += v;
    return deltas.empty() ? 0.0 : s / static_cast<double>(deltas.size());
  }
};

enum class CrossoverKind { sbx, uniform };

inline CrossoverKind crossover_kind_from_string(const std::string& s) {
  if (s == "sbx") return CrossoverKind::sbx;
  if (s == "uniform") return CrossoverKind::uniform;
  throw InvalidArgument("unknown crossover '" + s + "' (expected sbx or uniform)");
}

inline std::string to_string(CrossoverKind k) { return k == CrossoverKind::sbx ? "sbx" : "uniform"; }

struct GaConfig {
  std::size_t population_size = 50;  // even, >= 4
  int generations = 100;
  double crossover_rate = 0.9;
  double mutation_rate = 0.05;
  // Half-width of the mutation window as a fraction of hi - lo. Values >= 1
  // redraw uniformly over the whole box.
  double mutation_scale = 1.0;
  std::size_t elitism_count = 2;
  std::size_t tournament_size = 3;
  CrossoverKind crossover = CrossoverKind::sbx;
  double sbx_eta = 15.0;
  std::uint64_t seed = 0;
  double init_mean = 1.0;
  double init_std = 1.0;
  DeltaBounds bounds;
  int snapshot_every = 10;  // 0 disables best-vector snapshots

  void validate() const {
    if (population_size < 4 || population_size % 2 != 0) {
      throw InvalidArgument("population size must be even and at least 4");
    }
    if (generations < 1) throw InvalidArgument("generations must be at least 1");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
      throw InvalidArgument("crossover_rate must lie in [0, 1]");
    }
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
      throw InvalidArgument("mutation_rate must lie in [0, 1]");
    }
    if (!(mutation_scale > 0.0)) throw InvalidArgument("mutation_scale must be positive");
    if (elitism_count < 1 || elitism_count >= population_size) {
      throw InvalidArgument("elitism_count must be at least 1 and below the population size");
    }
    if (tournament_size < 2) throw InvalidArgument("tournament_size must be at least 2");
    if (!(sbx_eta >= 0.0)) throw InvalidArgument("sbx_eta must be non-negative");
    if (!(init_std > 0.0)) throw InvalidArgument("init_std must be positive");
    if (!(bounds.lo >= 0.0 && bounds.hi > bounds.lo) || !std::isfinite(bounds.hi)) {
      throw InvalidArgument("delta bounds need 0 <= lo < hi < infinity");
    }
  }
};

struct GaTrace {
  std::vector<double> best_fitness;  // one entry per generation
  std::vector<double> mean_fitness;
  std::vector<std::pair<int, std::vector<double>>> snapshots;  // (generation, best vector)
};

// Precomputed per-unit terms; nuisances are fitted once and reused by every
// fitness call. phi_i(delta) = m0_i + q(p_i, delta) (m1_i - m0_i).
class FitnessRecords {
 public:
  explicit FitnessRecords(std::span<const UnitNuisance> units) {
    p_.reserve(units.size());
    for (const auto& u : units) {
      if (!(u.p_hat > 0.0 && u.p_hat < 1.0)) {
        throw InvalidArgument("fitness records need propensities strictly inside (0, 1)");
      }
      p_.push_back(u.p_hat);
      m1_.push_back(u.m1());
      m0_.push_back(u.m0());
    }
  }

  std::size_t size() const { return p_.size(); }
  double p(std::size_t i) const { return p_[i]; }
  double m1(std::size_t i) const { return m1_[i]; }
  double m0(std::size_t i) const { return m0_[i]; }

  // Phi(Delta) = sum_i phi(z_i, delta_i).
  double fitness(std::span<const double> deltas) const {
    if (deltas.size() != p_.size()) {
      throw InvalidArgument("intervention vector has " + std::to_string(deltas.size()) +
                            " entries, records have " + std::to_string(p_.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) {
      const double q = deltas[i] * p_[i] / (1.0 + (deltas[i] - 1.0) * p_[i]);
      s += influence(q, m1_[i], m0_[i]);
    }
    return s;
  }

 private:
  std::vector<double> p_, m1_, m0_;
};

inline double fitness(const InterventionVector& v, const FitnessRecords& records) {
  return records.fitness(v.deltas);
}

inline std::vector<InterventionVector> initialize_population(std::size_t n, const GaConfig& cfg) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed, 0x696e6974ULL);
  std::vector<InterventionVector> pop(cfg.population_size);
  for (auto& ind : pop) {
    ind.bounds = cfg.bounds;
    ind.deltas.resize(n);
    for (auto& d : ind.deltas) d = cfg.bounds.clamp(cfg.init_mean + cfg.init_std * standard_normal(rng));
  }
  return pop;
}

// Tournament selection with replacement. Returns indices into the population.
inline std::vector<std::size_t> select_parents(std::span<const double> fitnesses,
                                               const GaConfig& cfg, Rng& rng) {
  const std::size_t m = fitnesses.size();
  if (m == 0) throw InvalidArgument("empty population");
  std::vector<std::size_t> out(m);
  for (auto& slot : out) {
    std::size_t best = uniform_index(rng, m);
    for (std::size_t k = 1; k < cfg.tournament_size; ++k) {
      const std::size_t c = uniform_index(rng, m);
      if (fitnesses[c] > fitnesses[best] || (fitnesses[c] == fitnesses[best] && c < best)) {
        best = c;
      }
    }
    slot = best;
  }
  return out;
}

inline std::vector<InterventionVector> select_parents(std::span<const InterventionVector> population,
                                                      std::span<const double> fitnesses,
                                                      const GaConfig& cfg, Rng& rng) {
  if (population.size() != fitnesses.size()) {
    throw InvalidArgument("population and fitnesses differ in length");
  }
  std::vector<InterventionVector> out;
  for (std::size_t i : select_parents(fitnesses, cfg, rng)) out.push_back(population[i]);
  return out;
}

// Each coordinate takes part with probability crossover_rate. SBX draws a
// spread factor beta and sets c = ((1 +- beta) a + (1 -+ beta) b) / 2, which
// keeps the coordinate mean of the pair. Uniform swaps the coordinate with
// probability 1/2. Children are clamped to the bounds.
inline std::pair<InterventionVector, InterventionVector> crossover(const InterventionVector& a,
                                                                   const InterventionVector& b,
                                                                   const GaConfig& cfg, Rng& rng) {
  if (a.size() != b.size()) throw InvalidArgument("crossover parents differ in length");
  InterventionVector ca = a, cb = b;
  ca.bounds = cb.bounds = cfg.bounds;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(uniform01(rng) < cfg.crossover_rate)) continue;
    if (cfg.crossover == CrossoverKind::uniform) {
      if (uniform01(rng) < 0.5) std::swap(ca.deltas[i], cb.deltas[i]);
      continue;
    }
    const double u = uniform01(rng);
    const double beta = u <= 0.5 ? std::pow(2.0 * u, 1.0 / (cfg.sbx_eta + 1.0))
                                 : std::pow(1.0 / (2.0 * (1.0 - u)), 1.0 / (cfg.sbx_eta + 1.0));
    const double x1 = a.deltas[i], x2 = b.deltas[i];
    ca.deltas[i] = cfg.bounds.clamp(0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2));
    cb.deltas[i] = cfg.bounds.clamp(0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2));
  }
  return {std::move(ca), std::move(cb)};
}

// Each coordinate, with probability mutation_rate, is redrawn uniformly from
// [v - w, v + w] intersected with the bounds, w = mutation_scale (hi - lo).
inline InterventionVector mutate(InterventionVector ind, const GaConfig& cfg, Rng& rng) {
  const double width = cfg.mutation_scale * (cfg.bounds.hi - cfg.bounds.lo);
  ind.bounds = cfg.bounds;
  for (auto& v : ind.deltas) {
    if (!(uniform01(rng) < cfg.mutation_rate)) {
      v = cfg.bounds.clamp(v);
      continue;
    }
    const double lo = std::max(cfg.bounds.lo, v - width);
    const double hi = std::min(cfg.bounds.hi, v + width);
    v = cfg.bounds.clamp(lo + (hi - lo) * uniform01(rng));
  }
  return ind;
}

struct GaResult {
  InterventionVector best;
  double best_fitness = 0.0;
  GaTrace trace;
  double initial_best_fitness = 0.0;
};

namespace detail {

inline std::vector<std::size_t> rank_by_fitness(std::span<const double> f) {
  std::vector<std::size_t> idx(f.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&f](std::size_t a, std::size_t b) { return f[a] > f[b]; });
  return idx;
}

}  // namespace detail

// The evolutionary loop on precomputed records: evaluate, select, pair,
// crossover, mutate, replace. The elitism_count best individuals survive
// unchanged, so the best fitness never decreases.
inline GaResult run_ga(const FitnessRecords& records, const GaConfig& cfg) {
  cfg.validate();
  const std::size_t m = cfg.population_size;
  std::vector<InterventionVector> pop = initialize_population(records.size(), cfg);
  std::vector<double> fit(m);
  for (std::size_t k = 0; k < m; ++k) fit[k] = fitness(pop[k], records);

  GaResult result;
  result.initial_best_fitness = *std::max_element(fit.begin(), fit.end());

  for (int gen = 1; gen <= cfg.generations; ++gen) {
    Rng sel_rng = make_rng(cfg.seed, 0x73656c00ULL + static_cast<std::uint64_t>(gen));
    const auto parents = select_parents(fit, cfg, sel_rng);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order.begin(), order.end(), sel_rng);

    std::vector<InterventionVector> children;
    children.reserve(m);
    for (std::size_t pair = 0; pair < m / 2; ++pair) {
      // One stream per pair so results do not depend on evaluation order.
      Rng rng = make_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(gen)), pair);
      const auto& a = pop[parents[order[2 * pair]]];
      const auto& b = pop[parents[order[2 * pair + 1]]];
      auto [ca, cb] = crossover(a, b, cfg, rng);
      children.push_back(mutate(std::move(ca), cfg, rng));
      children.push_back(mutate(std::move(cb), cfg, rng));
    }

    const auto ranked = detail::rank_by_fitness(fit);
    std::vector<InterventionVector> next;
    std::vector<double> next_fit;
    next.reserve(m);
    for (std::size_t e = 0; e < cfg.elitism_count; ++e) {
      next.push_back(pop[ranked[e]]);
      next_fit.push_back(fit[ranked[e]]);
    }
    for (std::size_t c = 0; next.size() < m; ++c) {
      next_fit.push_back(fitness(children[c], records));
      next.push_back(std::move(children[c]));
    }
    pop = std::move(next);
    fit = std::move(next_fit);

    double mean = 0.0;
    for (double f : fit) mean += f;
    const auto best_it = std::max_element(fit.begin(), fit.end());
    result.trace.best_fitness.push_back(*best_it);
    result.trace.mean_fitness.push_back(mean / static_cast<double>(m));
    if (cfg.snapshot_every > 0 && (gen % cfg.snapshot_every == 0 || gen == cfg.generations)) {
      result.trace.snapshots.emplace_back(
          gen, pop[static_cast<std::size_t>(best_it - fit.begin())].deltas);
    }
  }
  const auto best = static_cast<std::size_t>(std::max_element(fit.begin(), fit.end()) - fit.begin());
  result.best = pop[best];
  result.best_fitness = fit[best];
  return result;
}

// A single vector drawn from the initialization distribution, on its own
// stream. The baseline policy the optimizer is compared against.
inline InterventionVector random_policy(std::size_t n, const GaConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = make_rng(seed, 0x72616e64ULL);
  InterventionVector v;
  v.bounds = cfg.bounds;
  v.deltas.resize(n);
  for (auto& d : v.deltas) d = cfg.bounds.clamp(cfg.init_mean + cfg.init_std * standard_normal(rng));
  return v;
}

struct OptimizeResult {
  GaResult ga;
  std::vector<UnitNuisance> units;  // cross-fitted nuisance values
};

// Fits cross-fitted nuisances once, then searches Delta.
inline OptimizeResult optimize(const ObservationalDataset& data, const GaConfig& cfg,
                               const NuisanceConfig& nuisance, int k, std::uint64_t seed) {
  cfg.validate();
  OptimizeResult out;
  out.units = cross_fit(data, k, seed, nuisance).units;
  out.ga = run_ga(FitnessRecords(out.units), cfg);
  return out;
}

}  // namespace stochint

#endif  // STOCHINT_GESIO_HPP_
