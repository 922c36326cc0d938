#ifndef STOCHINT_OUTCOME_HPP_
#define STOCHINT_OUTCOME_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "stochint/boosting.hpp"
#include "stochint/dataset.hpp"
#include "stochint/error.hpp"
#include "stochint/linear.hpp"

namespace stochint {

enum class OutcomeKind { boosted_trees, ridge_linear };

inline std::string to_string(OutcomeKind k) {
  return k == OutcomeKind::boosted_trees ? "boosted_trees" : "ridge_linear";
}

inline OutcomeKind outcome_kind_from_string(const std::string& s) {
  if (s == "boosted_trees") return OutcomeKind::boosted_trees;
  if (s == "ridge_linear") return OutcomeKind::ridge_linear;
  throw InvalidArgument("unknown outcome model '" + s + "' (expected boosted_trees or ridge_linear)");
}

struct OutcomeConfig {
  OutcomeKind kind = OutcomeKind::boosted_trees;
  // One regressor per arm (T-learner). Otherwise a single regressor on (x, t).
  bool per_arm = true;
  BoostingConfig boosting;
  double ridge = 1e-6;
  std::size_t min_arm_size = 10;
};

using Regressor = std::variant<BoostedTrees, LinearRegressor>;

inline double predict(const Regressor& r, std::span<const double> x) {
  return std::visit([&](const auto& m) { return m.predict(x); }, r);
}

// mu_hat(x, t).
class OutcomeModel {
 public:
  OutcomeModel() = default;
  OutcomeModel(OutcomeKind kind, bool per_arm, std::vector<Regressor> models)
      : kind_(kind), per_arm_(per_arm), models_(std::move(models)) {
    if (models_.size() != (per_arm_ ? 2u : 1u)) {
      throw InvalidArgument("outcome model needs two per-arm regressors or one joint regressor");
    }
  }

  double predict(std::span<const double> x, int t) const {
    if (t != 0 && t != 1) throw InvalidArgument("treatment must be 0 or 1");
    if (per_arm_) return stochint::predict(models_[static_cast<std::size_t>(t)], x);
    std::vector<double> xt(x.begin(), x.end());
    xt.push_back(static_cast<double>(t));
    return stochint::predict(models_[0], xt);
  }

  OutcomeKind kind() const { return kind_; }
  bool per_arm() const { return per_arm_; }
  const std::vector<Regressor>& models() const { return models_; }

 private:
  OutcomeKind kind_ = OutcomeKind::boosted_trees;
  bool per_arm_ = true;
  std::vector<Regressor> models_;
};

namespace detail {

inline Regressor fit_regressor(const Matrix& x, std::span<const double> y,
                               const OutcomeConfig& cfg) {
  if (cfg.kind == OutcomeKind::boosted_trees) return BoostedTrees::fit(x, y, cfg.boosting);
  return LinearRegressor::fit(x, y, cfg.ridge);
}

}  // namespace detail

inline OutcomeModel fit_outcome(const ObservationalDataset& data, const OutcomeConfig& cfg = {}) {
  if (cfg.per_arm) {
    std::vector<Regressor> models;
    for (int arm = 0; arm <= 1; ++arm) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.treatment(i) == arm) idx.push_back(i);
      }
      if (idx.empty()) {
        throw FitError("outcome fit: arm t=" + std::to_string(arm) + " is empty");
      }
      if (idx.size() < cfg.min_arm_size) {
        throw FitError("outcome fit: arm t=" + std::to_string(arm) + " has " +
                       std::to_string(idx.size()) + " units, minimum is " +
                       std::to_string(cfg.min_arm_size));
      }
      Matrix x(static_cast<Eigen::Index>(idx.size()), data.covariates().cols());
      std::vector<double> y(idx.size());
      for (std::size_t r = 0; r < idx.size(); ++r) {
        x.row(static_cast<Eigen::Index>(r)) = data.covariates().row(static_cast<Eigen::Index>(idx[r]));
        y[r] = data.outcome(idx[r]);
      }
      models.push_back(detail::fit_regressor(x, y, cfg));
    }
    return OutcomeModel(cfg.kind, true, std::move(models));
  }
  if (data.size() < cfg.min_arm_size) {
    throw FitError("outcome fit: " + std::to_string(data.size()) + " units, minimum is " +
                   std::to_string(cfg.min_arm_size));
  }
  Matrix x(static_cast<Eigen::Index>(data.size()), data.covariates().cols() + 1);
  x.leftCols(data.covariates().cols()) = data.covariates();
  for (std::size_t i = 0; i < data.size(); ++i) {
    x(static_cast<Eigen::Index>(i), data.covariates().cols()) = data.treatment(i);
  }
  std::vector<Regressor> models;
  models.push_back(detail::fit_regressor(x, data.outcomes(), cfg));
  return OutcomeModel(cfg.kind, false, std::move(models));
}

}  // namespace stochint

#endif  // STOCHINT_OUTCOME_HPP_
