#ifndef STOCHINT_SIE_HPP_
#define STOCHINT_SIE_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stochint/dataset.hpp"
#include "stochint/error.hpp"
#include "stochint/linear.hpp"
#include "stochint/nuisance.hpp"
#include "stochint/random.hpp"

namespace stochint {

// Multiplicative odds shift on the propensity. delta = 1 leaves the
// observational assignment unchanged.
class StochasticDegree {
 public:
  constexpr StochasticDegree() = default;
  explicit StochasticDegree(double delta) : delta_(delta) {
    if (!(delta >= 0.0) || !std::isfinite(delta)) {
      throw InvalidArgument("stochastic degree must be finite and non-negative");
    }
  }
  double value() const { return delta_; }

 private:
  double delta_ = 1.0;
};

// q(x, delta) = delta p / (delta p + 1 - p), evaluated as
// delta p / (1 + (delta - 1) p) so that delta = 1 returns p exactly.
inline double stochastic_propensity(double p_hat, double delta) {
  if (!(p_hat > 0.0 && p_hat < 1.0)) {
    throw InvalidArgument("propensity must lie strictly inside (0, 1)");
  }
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw InvalidArgument("stochastic degree must be finite and non-negative");
  }
  return delta * p_hat / (1.0 + (delta - 1.0) * p_hat);
}

inline double stochastic_propensity(double p_hat, StochasticDegree delta) {
  return stochastic_propensity(p_hat, delta.value());
}

// m_arm(x, y) = 1[t = arm] (y - mu_arm) / (arm p + (1 - arm)(1 - p)) + mu_arm,
// where mu_arm = mu_hat(x, arm).
inline double m_term(int t, double y, double mu_arm, double p_hat, int arm) {
  const double denom = arm == 1 ? p_hat : 1.0 - p_hat;
  const double residual = t == arm ? (y - mu_arm) / denom : 0.0;
  return residual + mu_arm;
}

// phi = q m1 + (1 - q) m0.
inline double influence(double q, double m1, double m0) { return q * m1 + (1.0 - q) * m0; }

// Nuisance values for one unit, evaluated by models that never saw it.
// These are also the fitness records of the optimizer.
struct UnitNuisance {
  double p_hat = 0.5;
  double mu0 = 0.0;
  double mu1 = 0.0;
  int t = 0;
  double y = 0.0;

  double m1() const { return m_term(t, y, mu1, p_hat, 1); }
  double m0() const { return m_term(t, y, mu0, p_hat, 0); }
  double phi(double delta) const {
    return influence(stochastic_propensity(p_hat, delta), m1(), m0());
  }
};

struct InfluenceRecord {
  std::size_t unit_index = 0;
  double q = 0.0;
  double m1 = 0.0;
  double m0 = 0.0;
  double phi = 0.0;
  double tau_plugin = 0.0;  // p_hat mu1 + (1 - p_hat) mu0
};

struct FoldDiagnostics {
  int fold = 0;
  std::size_t held_out = 0;
  std::size_t train = 0;
  std::size_t train_treated = 0;
  int propensity_iterations = 0;
  double propensity_gradient_norm = 0.0;
  double held_out_mean_p_hat = 0.0;
  double held_out_outcome_rmse = 0.0;  // factual outcome vs mu_hat(x, t)
};

struct CrossFit {
  FoldAssignment folds;
  std::vector<UnitNuisance> units;
  std::vector<FoldDiagnostics> per_fold;
};

// Evaluates fitted nuisances on every unit of `data`.
inline std::vector<UnitNuisance> evaluate_nuisance(const NuisanceModels& models,
                                                   const ObservationalDataset& data) {
  std::vector<UnitNuisance> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    out[i] = {models.propensity.predict(x), models.outcome.predict(x, 0),
              models.outcome.predict(x, 1), data.treatment(i), data.outcome(i)};
  }
  return out;
}

// Nuisances replaced by the generator's ground truth.
inline std::vector<UnitNuisance> oracle_nuisance(const ObservationalDataset& data) {
  const GroundTruth& g = data.truth();
  if (!g.true_propensity) throw InvalidArgument("dataset has no true propensity");
  std::vector<UnitNuisance> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out[i] = {(*g.true_propensity)[i], g.mu0[i], g.mu1[i], data.treatment(i), data.outcome(i)};
  }
  return out;
}

// For each of k folds, fits (p_hat, mu_hat) on the other folds and evaluates
// them on the held-out fold. Every unit is therefore scored by models that
// never saw it.
inline CrossFit cross_fit(const ObservationalDataset& data, int k, std::uint64_t seed,
                          const NuisanceConfig& cfg) {
  CrossFit cf;
  cf.folds = split_folds(data.size(), k, seed);
  cf.units.resize(data.size());
  for (int f = 0; f < k; ++f) {
    const auto train_idx = cf.folds.complement(f);
    const auto test_idx = cf.folds.members(f);
    const ObservationalDataset train = data.subset(train_idx);
    const std::size_t treated = train.treated_count();
    if (treated == 0 || treated == train.size()) {
      throw FitError("fold " + std::to_string(f) +
                     ": training complement contains a single treatment arm");
    }
    NuisanceModels models;
    try {
      models = fit_nuisance(train, cfg, derive_seed(seed, static_cast<std::uint64_t>(f) + 1));
    } catch (const Error& e) {
      throw FitError("fold " + std::to_string(f) + ": " + e.what());
    }
    FoldDiagnostics diag;
    diag.fold = f;
    diag.held_out = test_idx.size();
    diag.train = train_idx.size();
    diag.train_treated = treated;
    diag.propensity_iterations = models.propensity.summary().iterations;
    diag.propensity_gradient_norm = models.propensity.summary().gradient_norm;
    double psum = 0.0, sq = 0.0;
    for (std::size_t i : test_idx) {
      const auto x = data.row(i);
      UnitNuisance u{models.propensity.predict(x), models.outcome.predict(x, 0),
                     models.outcome.predict(x, 1), data.treatment(i), data.outcome(i)};
      psum += u.p_hat;
      const double r = u.y - (u.t == 1 ? u.mu1 : u.mu0);
      sq += r * r;
      cf.units[i] = u;
    }
    diag.held_out_mean_p_hat = psum / static_cast<double>(test_idx.size());
    diag.held_out_outcome_rmse = std::sqrt(sq / static_cast<double>(test_idx.size()));
    cf.per_fold.push_back(diag);
  }
  return cf;
}

struct EstimateReport {
  double tau_ate_alg1 = 0.0;   // mean of p_hat mu1 + (1 - p_hat) mu0
  double tau_sie = 0.0;        // mean(phi - y)
  double psi_hat = 0.0;        // mean(phi)
  double ate_plugin = 0.0;     // mean(mu1 - mu0)
  double ate_influence = 0.0;  // mean(m1 - m0)
  double delta = 1.0;
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<FoldDiagnostics> per_fold;
  std::vector<InfluenceRecord> records;
};

// Per-unit influence records and their aggregates. Sums run in unit order.
inline EstimateReport summarize_influence(std::span<const UnitNuisance> units,
                                          std::span<const double> deltas) {
  if (units.empty()) throw InvalidArgument("no units to summarize");
  if (deltas.size() != units.size() && deltas.size() != 1) {
    throw InvalidArgument("need one stochastic degree per unit (or a single shared one)");
  }
  EstimateReport rep;
  rep.records.resize(units.size());
  double s_phi = 0.0, s_phi_y = 0.0, s_tau = 0.0, s_plugin = 0.0, s_if = 0.0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const UnitNuisance& u = units[i];
    const double delta = deltas.size() == 1 ? deltas[0] : deltas[i];
    InfluenceRecord r;
    r.unit_index = i;
    r.q = stochastic_propensity(u.p_hat, delta);
    r.m1 = u.m1();
    r.m0 = u.m0();
    r.phi = influence(r.q, r.m1, r.m0);
    r.tau_plugin = u.p_hat * u.mu1 + (1.0 - u.p_hat) * u.mu0;
    rep.records[i] = r;
    s_phi += r.phi;
    s_phi_y += r.phi - u.y;
    s_tau += r.tau_plugin;
    s_plugin += u.mu1 - u.mu0;
    s_if += r.m1 - r.m0;
  }
  const auto n = static_cast<double>(units.size());
  rep.psi_hat = s_phi / n;
  rep.tau_sie = s_phi_y / n;
  rep.tau_ate_alg1 = s_tau / n;
  rep.ate_plugin = s_plugin / n;
  rep.ate_influence = s_if / n;
  if (deltas.size() == 1) rep.delta = deltas[0];
  return rep;
}

inline EstimateReport summarize_influence(std::span<const UnitNuisance> units, double delta) {
  const double d[1] = {delta};
  return summarize_influence(units, std::span<const double>(d, 1));
}

// Cross-fitted stochastic intervention effect at a single degree.
inline EstimateReport estimate_sie(const ObservationalDataset& data, StochasticDegree delta, int k,
                                   std::uint64_t seed, const NuisanceConfig& cfg = {}) {
  CrossFit cf = cross_fit(data, k, seed, cfg);
  EstimateReport rep = summarize_influence(cf.units, delta.value());
  rep.k = k;
  rep.seed = seed;
  rep.per_fold = std::move(cf.per_fold);
  return rep;
}

// psi_hat for each degree of a grid, sharing one cross-fit.
inline std::vector<double> psi_curve(std::span<const UnitNuisance> units,
                                     std::span<const double> grid) {
  std::vector<double> out;
  out.reserve(grid.size());
  for (double delta : grid) {
    double s = 0.0;
    for (const auto& u : units) s += u.phi(delta);
    out.push_back(s / static_cast<double>(units.size()));
  }
  return out;
}

inline double plugin_ate(std::span<const UnitNuisance> units) {
  double s = 0.0;
  for (const auto& u : units) s += u.mu1 - u.mu0;
  return s / static_cast<double>(units.size());
}

// mean(m1 - m0): the influence-function contrast between delta -> infinity
// (everyone treated) and delta = 0 (no one treated).
inline double influence_ate(std::span<const UnitNuisance> units) {
  double s = 0.0;
  for (const auto& u : units) s += u.m1() - u.m0();
  return s / static_cast<double>(units.size());
}

// Cross-fitted plug-in contrast mean(mu_hat(x, 1) - mu_hat(x, 0)).
inline double estimate_ate_difference(const ObservationalDataset& data, int k, std::uint64_t seed,
                                      const NuisanceConfig& cfg = {}) {
  return plugin_ate(cross_fit(data, k, seed, cfg).units);
}

// Mean over units of phi(z_i, delta_i).
inline double expected_response(std::span<const UnitNuisance> units,
                                std::span<const double> deltas) {
  if (deltas.size() != units.size()) {
    throw InvalidArgument("intervention vector has " + std::to_string(deltas.size()) +
                          " entries, dataset has " + std::to_string(units.size()) + " units");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (!(deltas[i] >= 0.0)) throw InvalidArgument("stochastic degrees must be non-negative");
    s += units[i].phi(deltas[i]);
  }
  return s / static_cast<double>(units.size());
}

inline double expected_response(const ObservationalDataset& data, std::span<const double> deltas,
                                int k, std::uint64_t seed, const NuisanceConfig& cfg = {}) {
  if (deltas.size() != data.size()) {
    throw InvalidArgument("intervention vector length differs from dataset size");
  }
  return expected_response(cross_fit(data, k, seed, cfg).units, deltas);
}

// ---- baselines -------------------------------------------------------------

struct OlsTLearner {
  LinearRegressor control;
  LinearRegressor treated;
  bool ridge_fallback = false;

  double effect(std::span<const double> x) const {
    return treated.predict(x) - control.predict(x);
  }
  double ate(const ObservationalDataset& data) const {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) s += effect(data.row(i));
    return s / static_cast<double>(data.size());
  }
};

// Least squares per arm; rank-deficient arms fall back to ridge 1e-8.
inline OlsTLearner fit_ols_tlearner(const ObservationalDataset& data) {
  OlsTLearner out;
  for (int arm = 0; arm <= 1; ++arm) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.treatment(i) == arm) idx.push_back(i);
    }
    if (idx.empty()) throw FitError("OLS baseline: arm t=" + std::to_string(arm) + " is empty");
    const ObservationalDataset part = data.subset(idx);
    LinearRegressor fit = LinearRegressor::fit(part.covariates(), part.outcomes(), 0.0, 1e-8);
    out.ridge_fallback = out.ridge_fallback || fit.ridge_fallback();
    (arm == 0 ? out.control : out.treated) = std::move(fit);
  }
  return out;
}

inline double baseline_ols(const ObservationalDataset& data) {
  return fit_ols_tlearner(data).ate(data);
}

// Horvitz-Thompson: mean(t y / p) - mean((1 - t) y / (1 - p)).
inline double ipwe_from_propensity(const ObservationalDataset& data, std::span<const double> p) {
  if (p.size() != data.size()) throw InvalidArgument("one propensity per unit required");
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double y = data.outcome(i);
    s += data.treatment(i) == 1 ? y / p[i] : -y / (1.0 - p[i]);
  }
  return s / static_cast<double>(data.size());
}

inline double baseline_ipwe(const ObservationalDataset& data, const NuisanceConfig& cfg,
                            std::uint64_t seed) {
  const PropensityModel model = fit_propensity(data, cfg.basis, cfg.solver, seed);
  return ipwe_from_propensity(data, model.predict_all(data));
}

inline double epsilon_ate(double estimated, double truth) {
  if (!std::isfinite(estimated) || !std::isfinite(truth)) {
    throw InvalidArgument("epsilon_ate needs finite inputs");
  }
  return std::abs(estimated - truth);
}

}  // namespace stochint

#endif  // STOCHINT_SIE_HPP_
