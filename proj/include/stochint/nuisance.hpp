#ifndef STOCHINT_NUISANCE_HPP_
#define STOCHINT_NUISANCE_HPP_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stochint/basis.hpp"
#include "stochint/boosting.hpp"
#include "stochint/dataset.hpp"
#include "stochint/error.hpp"
#include "stochint/linear.hpp"
#include "stochint/outcome.hpp"
#include "stochint/propensity.hpp"

namespace stochint {

struct NuisanceConfig {
  BasisOptions basis;
  SolverConfig solver;
  OutcomeConfig outcome;
};

// The pair of fitted nuisance functions (p_hat, mu_hat).
struct NuisanceModels {
  PropensityModel propensity;
  OutcomeModel outcome;
};

// Number of fit_nuisance calls in this process. Test instrumentation.
inline std::atomic<std::size_t>& nuisance_fit_counter() {
  static std::atomic<std::size_t> counter{0};
  return counter;
}

inline NuisanceModels fit_nuisance(const ObservationalDataset& train, const NuisanceConfig& cfg,
                                   std::uint64_t seed) {
  nuisance_fit_counter().fetch_add(1, std::memory_order_relaxed);
  NuisanceModels m;
  m.propensity = fit_propensity(train, cfg.basis, cfg.solver, seed);
  m.outcome = fit_outcome(train, cfg.outcome);
  return m;
}

// ---- JSON model files ------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

namespace detail {

using nlohmann::json;

inline json basis_to_json(const BasisExpansion& b) {
  return json{{"kind", to_string(b.kind())},
              {"input_dim", b.input_dim()},
              {"shift", b.shift()},
              {"scale", b.scale()},
              {"centers", b.centers()},
              {"widths", b.widths()}};
}

inline BasisExpansion basis_from_json(const json& j) {
  const auto kind = basis_kind_from_string(j.at("kind").get<std::string>());
  const auto d = j.at("input_dim").get<std::size_t>();
  BasisExpansion b;
  switch (kind) {
    case BasisKind::raw: b = BasisExpansion::raw(d); break;
    case BasisKind::polynomial2: b = BasisExpansion::polynomial2(d); break;
    case BasisKind::rbf:
      b = BasisExpansion::rbf(d, j.at("centers").get<std::vector<std::vector<double>>>(),
                              j.at("widths").get<std::vector<double>>());
      break;
  }
  auto shift = j.at("shift").get<std::vector<double>>();
  if (!shift.empty()) b.set_standardization(std::move(shift), j.at("scale").get<std::vector<double>>());
  return b;
}

inline json regressor_to_json(const Regressor& r) {
  if (const auto* bt = std::get_if<BoostedTrees>(&r)) {
    json trees = json::array();
    for (const auto& t : bt->trees()) {
      trees.push_back(json{{"feature", t.feature},
                           {"threshold", t.threshold},
                           {"left", t.left},
                           {"right", t.right},
                           {"value", t.value}});
    }
    return json{{"type", "boosted_trees"},
                {"init", bt->init()},
                {"learning_rate", bt->learning_rate()},
                {"trees", trees}};
  }
  const auto& lin = std::get<LinearRegressor>(r);
  return json{{"type", "linear"}, {"intercept", lin.intercept()}, {"coef", lin.coef()}};
}

inline Regressor regressor_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "boosted_trees") {
    std::vector<RegressionTree> trees;
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      tree.feature = t.at("feature").get<std::vector<int>>();
      tree.threshold = t.at("threshold").get<std::vector<double>>();
      tree.left = t.at("left").get<std::vector<int>>();
      tree.right = t.at("right").get<std::vector<int>>();
      tree.value = t.at("value").get<std::vector<double>>();
      const std::size_t m = tree.feature.size();
      if (m == 0 || tree.threshold.size() != m || tree.left.size() != m ||
          tree.right.size() != m || tree.value.size() != m) {
        throw ParseError("model file: malformed tree arrays");
      }
      for (std::size_t k = 0; k < m; ++k) {
        if (tree.feature[k] >= 0 &&
            (tree.left[k] <= static_cast<int>(k) || tree.right[k] <= static_cast<int>(k) ||
             tree.left[k] >= static_cast<int>(m) || tree.right[k] >= static_cast<int>(m))) {
          throw ParseError("model file: tree child index out of range");
        }
      }
      trees.push_back(std::move(tree));
    }
    return BoostedTrees(j.at("init").get<double>(), j.at("learning_rate").get<double>(),
                        std::move(trees));
  }
  if (type == "linear") {
    return LinearRegressor(j.at("intercept").get<double>(), j.at("coef").get<std::vector<double>>());
  }
  throw ParseError("model file: unknown regressor type '" + type + "'");
}

}  // namespace detail

inline nlohmann::json nuisance_to_json(const NuisanceModels& m) {
  using nlohmann::json;
  json outcome_models = json::array();
  for (const auto& r : m.outcome.models()) outcome_models.push_back(detail::regressor_to_json(r));
  return json{
      {"version", kModelFormatVersion},
      {"propensity",
       {{"basis", detail::basis_to_json(m.propensity.basis())},
        {"beta", m.propensity.beta()},
        {"clip", m.propensity.clip()}}},
      {"outcome",
       {{"kind", to_string(m.outcome.kind())},
        {"per_arm", m.outcome.per_arm()},
        {"models", outcome_models}}},
  };
}

inline NuisanceModels nuisance_from_json(const nlohmann::json& j) {
  try {
    if (!j.contains("version")) throw ParseError("model file: missing version field");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw ParseError("model file: unsupported version " + std::to_string(version));
    }
    NuisanceModels m;
    const auto& p = j.at("propensity");
    m.propensity = PropensityModel(detail::basis_from_json(p.at("basis")),
                                   p.at("beta").get<std::vector<double>>(),
                                   p.at("clip").get<double>());
    const auto& o = j.at("outcome");
    std::vector<Regressor> models;
    for (const auto& r : o.at("models")) models.push_back(detail::regressor_from_json(r));
    m.outcome = OutcomeModel(outcome_kind_from_string(o.at("kind").get<std::string>()),
                             o.at("per_arm").get<bool>(), std::move(models));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
}

inline void save_nuisance(const NuisanceModels& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << nuisance_to_json(m).dump(1) << '\n';
  if (!out) throw Error("failed writing file: " + path.string());
}

inline NuisanceModels load_nuisance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return nuisance_from_json(j);
}

}  // namespace stochint

#endif  // STOCHINT_NUISANCE_HPP_
