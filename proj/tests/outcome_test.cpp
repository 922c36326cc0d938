#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "stochint/generators.hpp"
#include "stochint/linear.hpp"
#include "stochint/nuisance.hpp"
#include "stochint/outcome.hpp"

using namespace stochint;

namespace {

ObservationalDataset with_outcome(const ObservationalDataset& base, const std::vector<double>& y) {
  return ObservationalDataset(base.covariates(), base.treatments(), y);
}

}  // namespace

TEST(LinearRegressor, RecoversExactLine) {
  const auto base = generate_ihdp_like(100, 3, 1);
  std::vector<double> y(100);
  for (std::size_t i = 0; i < 100; ++i) y[i] = 2.0 * base.row(i)[0];
  const auto fit = LinearRegressor::fit(base.covariates(), y, 1e-6);
  EXPECT_NEAR(fit.coef()[0], 2.0, 1e-5);
  EXPECT_NEAR(fit.coef()[1], 0.0, 1e-5);
  EXPECT_NEAR(fit.intercept(), 0.0, 1e-5);
  const auto ols = LinearRegressor::fit(base.covariates(), y, 0.0);
  EXPECT_NEAR(ols.coef()[0], 2.0, 1e-12);
  EXPECT_FALSE(ols.ridge_fallback());
}

TEST(LinearRegressor, RankDeficientDesignFallsBackToRidge) {
  Matrix x(10, 2);
  std::vector<double> y(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i;
    x(i, 1) = 2.0 * i;
    y[static_cast<std::size_t>(i)] = 3.0 * i + 1.0;
  }
  const auto fit = LinearRegressor::fit(x, y, 0.0);
  EXPECT_TRUE(fit.ridge_fallback());
  for (int i = 0; i < 10; ++i) {
    const std::vector<double> row = {static_cast<double>(i), 2.0 * i};
    EXPECT_NEAR(fit.predict(row), 3.0 * i + 1.0, 1e-6);
  }
}

TEST(OutcomeModel, ConstantOutcomeIsConstantEverywhere) {
  const auto base = generate_ihdp_like(80, 4, 2);
  const auto data = with_outcome(base, std::vector<double>(80, -1.25));
  for (auto kind : {OutcomeKind::boosted_trees, OutcomeKind::ridge_linear}) {
    for (bool per_arm : {true, false}) {
      OutcomeConfig cfg;
      cfg.kind = kind;
      cfg.per_arm = per_arm;
      const auto model = fit_outcome(data, cfg);
      for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_NEAR(model.predict(data.row(i), 0), -1.25, 1e-9);
        EXPECT_NEAR(model.predict(data.row(i), 1), -1.25, 1e-9);
      }
    }
  }
}

TEST(OutcomeModel, PerArmRoutesToSubModels) {
  const auto base = generate_ihdp_like(200, 3, 3);
  std::vector<double> y(200);
  for (std::size_t i = 0; i < 200; ++i) y[i] = base.treatment(i) == 1 ? 10.0 : -10.0;
  const auto model = fit_outcome(with_outcome(base, y));
  const std::vector<double> x = {0.1, 0.2, 0.3};
  EXPECT_NEAR(model.predict(x, 1), 10.0, 1e-9);
  EXPECT_NEAR(model.predict(x, 0), -10.0, 1e-9);
  EXPECT_EQ(model.predict(x, 1), model.predict(x, 1));
  EXPECT_THROW(model.predict(x, 2), InvalidArgument);
}

TEST(OutcomeModel, JointModelUsesTreatmentColumn) {
  const auto base = generate_ihdp_like(300, 3, 4);
  std::vector<double> y(300);
  for (std::size_t i = 0; i < 300; ++i) y[i] = base.row(i)[0] + 2.0 * base.treatment(i);
  OutcomeConfig cfg;
  cfg.kind = OutcomeKind::ridge_linear;
  cfg.per_arm = false;
  const auto model = fit_outcome(with_outcome(base, y), cfg);
  EXPECT_FALSE(model.per_arm());
  const std::vector<double> x = {0.5, 0.0, 0.0};
  EXPECT_NEAR(model.predict(x, 1) - model.predict(x, 0), 2.0, 1e-4);
}

TEST(OutcomeModel, SmallOrEmptyArmIsAnError) {
  const auto base = generate_ihdp_like(60, 3, 5);
  std::vector<int> t(60, 0);
  for (std::size_t i = 0; i < 5; ++i) t[i] = 1;
  const ObservationalDataset few(base.covariates(), t, base.outcomes());
  EXPECT_THROW(fit_outcome(few), FitError);
  const ObservationalDataset none(base.covariates(), std::vector<int>(60, 0), base.outcomes());
  EXPECT_THROW(fit_outcome(none), FitError);
}

TEST(OutcomeModel, NoiselessNonlinearFitIsTight) {
  DgpConfig dgp;
  dgp.noise_scale = 0.0;
  dgp.treated_fraction_target = 0.4;
  const auto data = generate_ihdp_like(2000, 5, 6, dgp);
  const auto model = fit_outcome(data);
  for (const auto& r : model.models()) {
    const auto& loss = std::get<BoostedTrees>(r).training_loss();
    for (std::size_t k = 1; k < loss.size(); ++k) EXPECT_LE(loss[k], loss[k - 1]);
  }
  double mean = data.mean_outcome(), var = 0.0, sse = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    var += (data.outcome(i) - mean) * (data.outcome(i) - mean);
    const double r = data.outcome(i) - model.predict(data.row(i), data.treatment(i));
    sse += r * r;
  }
  EXPECT_LT(std::sqrt(sse / 2000.0), 0.1 * std::sqrt(var / 2000.0));
}

TEST(NuisanceModels, JsonRoundTripPreservesPredictions) {
  const auto data = generate_ihdp_like(200, 4, 7);
  for (auto kind : {BasisKind::polynomial2, BasisKind::rbf}) {
    NuisanceConfig cfg;
    cfg.basis.kind = kind;
    const auto models = fit_nuisance(data, cfg, 3);
    const auto back = nuisance_from_json(nlohmann::json::parse(nuisance_to_json(models).dump()));
    for (std::size_t i = 0; i < data.size(); ++i) {
      EXPECT_EQ(back.propensity.predict(data.row(i)), models.propensity.predict(data.row(i)));
      EXPECT_EQ(back.outcome.predict(data.row(i), 1), models.outcome.predict(data.row(i), 1));
    }
  }
}

TEST(NuisanceModels, FileRoundTripAndVersionCheck) {
  const auto data = generate_op_like(150, 8);
  NuisanceConfig cfg;
  cfg.outcome.kind = OutcomeKind::ridge_linear;
  const auto models = fit_nuisance(data, cfg, 0);
  const auto path = std::filesystem::temp_directory_path() / "stochint_model_roundtrip.json";
  save_nuisance(models, path);
  const auto back = load_nuisance(path);
  EXPECT_EQ(back.outcome.predict(data.row(3), 0), models.outcome.predict(data.row(3), 0));
  std::filesystem::remove(path);

  auto j = nuisance_to_json(models);
  j.erase("version");
  EXPECT_THROW(nuisance_from_json(j), ParseError);
  j["version"] = 99;
  EXPECT_THROW(nuisance_from_json(j), ParseError);
  EXPECT_THROW(load_nuisance(path), ParseError);
}

TEST(NuisanceModels, FitIsBitDeterministic) {
  const auto data = generate_ihdp_like(150, 3, 9);
  const auto a = nuisance_to_json(fit_nuisance(data, NuisanceConfig{}, 4)).dump();
  const auto b = nuisance_to_json(fit_nuisance(data, NuisanceConfig{}, 4)).dump();
  EXPECT_EQ(a, b);
}
