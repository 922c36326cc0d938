#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "stochint/generators.hpp"
#include "stochint/gesio.hpp"
#include "stochint/random.hpp"

using namespace stochint;

namespace {

// Oracle records where treatment raises (sign = +1) or lowers (sign = -1)
// every unit's response.
std::vector<UnitNuisance> monotone_units(std::size_t n, double sign, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  std::vector<UnitNuisance> units(n);
  for (auto& u : units) {
    u.p_hat = 0.05 + 0.9 * uniform01(rng);
    u.mu0 = uniform01(rng);
    u.mu1 = u.mu0 + sign * (0.1 + uniform01(rng));
    u.t = 0;
    u.y = u.mu0;
  }
  return units;
}

InterventionVector constant_vector(std::size_t n, double v) {
  InterventionVector iv;
  iv.deltas.assign(n, v);
  return iv;
}

}  // namespace

TEST(Fitness, SingleUnitHandValue) {
  const std::vector<UnitNuisance> u = {{0.5, 1.0, 3.0, 0, 1.0}};
  EXPECT_DOUBLE_EQ(FitnessRecords(u).fitness(std::vector<double>{1.0}), 2.0);
}

TEST(Fitness, AllOnesIsNTimesPsiAtOne) {
  const auto data = generate_ihdp_like(120, 3, 1);
  const auto units = oracle_nuisance(data);
  const FitnessRecords rec(units);
  EXPECT_NEAR(rec.fitness(std::vector<double>(120, 1.0)), 120.0 * summarize_influence(units, 1.0).psi_hat,
              1e-9);
  EXPECT_THROW(rec.fitness(std::vector<double>(119, 1.0)), InvalidArgument);
}

TEST(Fitness, UpperBoundDominatesRandomVectors) {
  const auto units = monotone_units(50, 1.0, 2);
  const FitnessRecords rec(units);
  const double top = fitness(constant_vector(50, 10.0), rec);
  Rng rng = make_rng(2, 1);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> v(50);
    for (auto& d : v) d = 10.0 * uniform01(rng);
    EXPECT_GE(top, rec.fitness(v));
  }
}

TEST(InitializePopulation, ClampedDeterministicAndDegenerate) {
  GaConfig cfg;
  cfg.init_mean = 5.0;
  const auto a = initialize_population(30, cfg);
  ASSERT_EQ(a.size(), cfg.population_size);
  for (const auto& ind : a) EXPECT_TRUE(ind.within_bounds());
  const auto b = initialize_population(30, cfg);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].deltas, b[k].deltas);

  cfg.init_std = 1e-12;
  cfg.init_mean = 12.0;
  for (const auto& ind : initialize_population(10, cfg)) {
    for (double d : ind.deltas) EXPECT_EQ(d, 10.0);
  }
  cfg.init_mean = 3.0;
  for (const auto& ind : initialize_population(10, cfg)) {
    for (double d : ind.deltas) EXPECT_NEAR(d, 3.0, 1e-9);
  }
}

TEST(SelectParents, TiesGoToLowestDrawnIndex) {
  GaConfig cfg;
  Rng rng = make_rng(3, 0);
  const std::vector<double> f(10, 1.0);
  for (int round = 0; round < 50; ++round) {
    Rng probe = rng;
    for (std::size_t i : select_parents(f, cfg, rng)) {
      std::size_t lowest = 10;
      for (std::size_t k = 0; k < cfg.tournament_size; ++k) lowest = std::min<std::size_t>(lowest, uniform_index(probe, 10));
      EXPECT_EQ(i, lowest);
    }
  }
}

TEST(SelectParents, DominantIndividualWinsEveryTournamentItEnters) {
  GaConfig cfg;
  cfg.population_size = 10;
  std::vector<double> f = {0, 1, 2, 3, 100, 4, 5, 6, 7, 8};
  Rng rng = make_rng(4, 0);
  std::size_t copies = 0;
  for (int round = 0; round < 200; ++round) {
    Rng probe = rng;
    const auto picks = select_parents(f, cfg, rng);
    // Replay the draws: a slot must be 4 whenever 4 was drawn for it.
    for (std::size_t slot = 0; slot < picks.size(); ++slot) {
      bool drawn = false;
      for (std::size_t k = 0; k < cfg.tournament_size; ++k) drawn |= uniform_index(probe, 10) == 4;
      if (drawn) {
        EXPECT_EQ(picks[slot], 4u);
      }
      copies += picks[slot] == 4;
    }
  }
  EXPECT_GT(static_cast<double>(copies) / 200.0, 1.0);
}

TEST(SelectParents, LargeTournamentPicksBestWithLowestIndexOnTies) {
  GaConfig cfg;
  cfg.population_size = 6;
  // Draws are with replacement; 200 draws miss index 1 with probability ~1e-16.
  cfg.tournament_size = 200;
  Rng rng = make_rng(5, 0);
  const std::vector<double> f = {3, 9, 1, 9, 2, 0};
  for (std::size_t i : select_parents(f, cfg, rng)) EXPECT_EQ(i, 1u);
}

TEST(Crossover, ZeroRateAndIdenticalParentsAreNoOps) {
  GaConfig cfg;
  Rng rng = make_rng(6, 0);
  InterventionVector a = constant_vector(20, 2.0), b = constant_vector(20, 7.0);
  for (std::size_t i = 0; i < 20; ++i) a.deltas[i] += 0.1 * static_cast<double>(i);
  cfg.crossover_rate = 0.0;
  for (auto kind : {CrossoverKind::sbx, CrossoverKind::uniform}) {
    cfg.crossover = kind;
    auto [ca, cb] = crossover(a, b, cfg, rng);
    EXPECT_EQ(ca.deltas, a.deltas);
    EXPECT_EQ(cb.deltas, b.deltas);
  }
  cfg.crossover_rate = 1.0;
  for (auto kind : {CrossoverKind::sbx, CrossoverKind::uniform}) {
    cfg.crossover = kind;
    auto [ca, cb] = crossover(a, a, cfg, rng);
    for (std::size_t i = 0; i < 20; ++i) {
      EXPECT_NEAR(ca.deltas[i], a.deltas[i], 1e-12);
      EXPECT_NEAR(cb.deltas[i], a.deltas[i], 1e-12);
    }
  }
}

TEST(Crossover, SbxPreservesCoordinateMeans) {
  GaConfig cfg;
  cfg.crossover_rate = 1.0;
  cfg.bounds = {0.0, 1e9};
  Rng rng = make_rng(7, 0);
  for (int draw = 0; draw < 1000; ++draw) {
    InterventionVector a = constant_vector(3, 0.0), b = constant_vector(3, 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
      a.deltas[i] = 400.0 + 200.0 * uniform01(rng);
      b.deltas[i] = 400.0 + 200.0 * uniform01(rng);
    }
    auto [ca, cb] = crossover(a, b, cfg, rng);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(ca.deltas[i] + cb.deltas[i], a.deltas[i] + b.deltas[i], 1e-9);
    }
  }
}

TEST(Crossover, ChildrenClampedToBounds) {
  GaConfig cfg;
  cfg.crossover_rate = 1.0;
  cfg.sbx_eta = 0.0;
  Rng rng = make_rng(8, 0);
  for (int draw = 0; draw < 200; ++draw) {
    auto [ca, cb] = crossover(constant_vector(5, 0.1), constant_vector(5, 9.9), cfg, rng);
    EXPECT_TRUE(ca.within_bounds());
    EXPECT_TRUE(cb.within_bounds());
  }
}

TEST(Mutate, ZeroRateIsIdentity) {
  GaConfig cfg;
  cfg.mutation_rate = 0.0;
  Rng rng = make_rng(9, 0);
  InterventionVector v = constant_vector(50, 0.0);
  for (std::size_t i = 0; i < 50; ++i) v.deltas[i] = 0.2 * static_cast<double>(i);
  EXPECT_EQ(mutate(v, cfg, rng).deltas, v.deltas);
}

TEST(Mutate, FullRateIsUniformOnBounds) {
  GaConfig cfg;
  cfg.mutation_rate = 1.0;
  Rng rng = make_rng(10, 0);
  const std::size_t n = 10000;
  std::vector<double> draws;
  for (std::size_t k = 0; k < n; ++k) {
    const auto out = mutate(constant_vector(1, 10.0 * uniform01(rng)), cfg, rng);
    ASSERT_TRUE(out.within_bounds());
    draws.push_back(out.deltas[0]);
  }
  std::sort(draws.begin(), draws.end());
  double ks = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double cdf = draws[k] / 10.0;
    ks = std::max({ks, static_cast<double>(k + 1) / n - cdf, cdf - static_cast<double>(k) / n});
  }
  // Asymptotic critical value at alpha = 0.01.
  EXPECT_LT(ks, 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST(Mutate, NarrowWindowStaysLocal) {
  GaConfig cfg;
  cfg.mutation_rate = 1.0;
  cfg.mutation_scale = 0.05;
  Rng rng = make_rng(11, 0);
  for (int k = 0; k < 500; ++k) {
    const auto out = mutate(constant_vector(1, 9.9), cfg, rng);
    EXPECT_GE(out.deltas[0], 9.4);
    EXPECT_LE(out.deltas[0], 10.0);
  }
}

TEST(GaConfig, Validation) {
  GaConfig cfg;
  cfg.population_size = 7;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.population_size = 4;
  cfg.elitism_count = 4;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.elitism_count = 1;
  cfg.generations = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.generations = 1;
  cfg.bounds = {2.0, 1.0};
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  EXPECT_THROW(crossover_kind_from_string("two_point"), InvalidArgument);
}

TEST(RunGa, MonotoneOracleReachesUpperBound) {
  const auto units = monotone_units(20, 1.0, 12);
  GaConfig cfg;
  cfg.seed = 1;
  const auto res = run_ga(FitnessRecords(units), cfg);
  EXPECT_GE(res.best.mean(), 9.0);
  EXPECT_TRUE(res.best.within_bounds());
}

TEST(RunGa, HarmfulTreatmentPushesTowardZero) {
  const auto units = monotone_units(20, -1.0, 13);
  GaConfig cfg;
  cfg.seed = 2;
  EXPECT_LE(run_ga(FitnessRecords(units), cfg).best.mean(), 1.0);
}

TEST(RunGa, ElitismTraceAndGuarantees) {
  const auto units = oracle_nuisance(generate_op_like(200, 3));
  const FitnessRecords rec(units);
  GaConfig cfg;
  cfg.generations = 40;
  cfg.snapshot_every = 1;
  const auto res = run_ga(rec, cfg);
  ASSERT_EQ(res.trace.best_fitness.size(), 40u);
  ASSERT_EQ(res.trace.mean_fitness.size(), 40u);
  for (std::size_t g = 1; g < 40; ++g) EXPECT_GE(res.trace.best_fitness[g], res.trace.best_fitness[g - 1]);
  for (std::size_t g = 0; g < 40; ++g) EXPECT_LE(res.trace.mean_fitness[g], res.trace.best_fitness[g]);
  EXPECT_GE(res.best_fitness, res.initial_best_fitness);
  EXPECT_GE(res.best_fitness, rec.fitness(std::vector<double>(200, 1.0)));
  EXPECT_EQ(res.best_fitness, rec.fitness(res.best.deltas));
  ASSERT_EQ(res.trace.snapshots.size(), 40u);
  for (const auto& [gen, deltas] : res.trace.snapshots) {
    for (double d : deltas) {
      EXPECT_GE(d, 0.0);
      EXPECT_LE(d, 10.0);
    }
  }
}

TEST(RunGa, MinimalRunAndDeterminism) {
  const auto units = monotone_units(15, 1.0, 14);
  GaConfig cfg;
  cfg.population_size = 4;
  cfg.generations = 1;
  cfg.elitism_count = 1;
  const auto a = run_ga(FitnessRecords(units), cfg);
  EXPECT_EQ(a.trace.best_fitness.size(), 1u);
  const auto b = run_ga(FitnessRecords(units), cfg);
  EXPECT_EQ(a.best.deltas, b.best.deltas);
  EXPECT_EQ(a.trace.mean_fitness, b.trace.mean_fitness);
}

TEST(Optimize, FitsNuisancesOncePerFold) {
  const auto data = generate_op_like(300, 4);
  GaConfig cfg;
  cfg.generations = 10;
  NuisanceConfig nc;
  nc.outcome.boosting.n_trees = 20;
  const std::size_t before = nuisance_fit_counter().load();
  const auto res = optimize(data, cfg, nc, 5, 1);
  EXPECT_EQ(nuisance_fit_counter().load() - before, 5u);
  EXPECT_EQ(res.units.size(), 300u);
  EXPECT_GE(res.ga.best_fitness / 300.0, expected_response(res.units, std::vector<double>(300, 1.0)));
}

TEST(RandomPolicy, DrawnFromInitDistribution) {
  GaConfig cfg;
  const auto a = random_policy(5000, cfg, 3);
  EXPECT_TRUE(a.within_bounds());
  EXPECT_EQ(a.deltas, random_policy(5000, cfg, 3).deltas);
  EXPECT_NE(a.deltas, random_policy(5000, cfg, 4).deltas);
  // N(1, 1) clamped at 0 has mean 1 + phi(1) - Phi(-1) = 1.0833.
  EXPECT_NEAR(a.mean(), 1.0833, 0.04);
}
