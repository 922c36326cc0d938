#ifndef STOCHINT_PROPENSITY_HPP_
#define STOCHINT_PROPENSITY_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stochint/basis.hpp"
#include "stochint/dataset.hpp"
#include "stochint/error.hpp"

namespace stochint {

struct SolverConfig {
  double l2 = 1e-4;
  double tolerance = 1e-8;  // on the Euclidean norm of the gradient
  int max_iterations = 100;
  double clip = 0.01;
};

// L2-penalized mean negative log-likelihood of t under
// p(x) = exp(beta . g(x)) / (1 + exp(beta . g(x))).
// The intercept (feature 0) is not penalized.
class LogisticObjective {
 public:
  LogisticObjective(Matrix design, std::vector<int> labels, double l2)
      : g_(std::move(design)), l2_(l2) {
    t_.resize(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) t_[static_cast<Eigen::Index>(i)] = labels[i];
  }

  std::size_t dim() const { return static_cast<std::size_t>(g_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(g_.rows()); }

  double value(const Eigen::VectorXd& beta) const {
    const Eigen::VectorXd eta = g_ * beta;
    double s = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) s += softplus(eta[i]) - t_[i] * eta[i];
    s /= static_cast<double>(eta.size());
    return s + 0.5 * l2_ * beta.tail(beta.size() - 1).squaredNorm();
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& beta) const {
    const Eigen::VectorXd p = probabilities(beta);
    Eigen::VectorXd grad = g_.transpose() * (p - t_) / static_cast<double>(p.size());
    grad.tail(grad.size() - 1) += l2_ * beta.tail(beta.size() - 1);
    return grad;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& beta) const {
    const Eigen::VectorXd p = probabilities(beta);
    const Eigen::VectorXd w = (p.array() * (1.0 - p.array())).matrix();
    const Matrix gw = g_.array().colwise() * w.array();
    Eigen::MatrixXd h = g_.transpose() * gw / static_cast<double>(p.size());
    for (Eigen::Index j = 1; j < h.rows(); ++j) h(j, j) += l2_;
    return h;
  }

  Eigen::VectorXd probabilities(const Eigen::VectorXd& beta) const {
    Eigen::VectorXd eta = g_ * beta;
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = logistic(eta[i]);
    return eta;
  }

  static double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  }
  static double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }

 private:
  Matrix g_;
  Eigen::VectorXd t_;
  double l2_;
};

struct PropensityFitSummary {
  int iterations = 0;
  double gradient_norm = 0.0;
  double objective = 0.0;
  std::size_t n = 0;
  std::size_t treated = 0;
};

class PropensityModel {
 public:
  PropensityModel() = default;
  PropensityModel(BasisExpansion basis, std::vector<double> beta, double clip,
                  PropensityFitSummary summary = {})
      : basis_(std::move(basis)), beta_(std::move(beta)), clip_(clip), summary_(summary) {
    if (beta_.size() != basis_.output_dim()) {
      throw InvalidArgument("propensity coefficients do not match basis dimension");
    }
    if (!(clip_ > 0.0 && clip_ < 0.5)) throw InvalidArgument("clip must lie in (0, 0.5)");
    for (double b : beta_) {
      if (!std::isfinite(b)) throw InvalidArgument("propensity coefficients must be finite");
    }
  }

  double logit(std::span<const double> x) const {
    const std::vector<double> g = basis_.expand(x);
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) s += beta_[j] * g[j];
    return s;
  }

  // Clipped to [clip, 1 - clip].
  double predict(std::span<const double> x) const {
    return std::clamp(LogisticObjective::logistic(logit(x)), clip_, 1.0 - clip_);
  }

  std::vector<double> predict_all(const ObservationalDataset& data) const {
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict(data.row(i));
    return out;
  }

  const BasisExpansion& basis() const { return basis_; }
  const std::vector<double>& beta() const { return beta_; }
  double clip() const { return clip_; }
  const PropensityFitSummary& summary() const { return summary_; }

 private:
  BasisExpansion basis_;
  std::vector<double> beta_;
  double clip_ = 0.01;
  PropensityFitSummary summary_;
};

// Damped Newton: the full step is halved until the objective decreases.
inline PropensityModel fit_propensity(const ObservationalDataset& data,
                                      const BasisExpansion& basis,
                                      const SolverConfig& solver = {}) {
  const std::size_t treated = data.treated_count();
  if (treated == 0 || treated == data.size()) {
    throw FitError("propensity fit needs both treated and control units (got " +
                   std::to_string(treated) + " treated of " + std::to_string(data.size()) + ")");
  }
  if (!(solver.l2 >= 0.0)) throw InvalidArgument("l2 penalty must be non-negative");

  const LogisticObjective obj(basis.design(data.covariates()), data.treatments(), solver.l2);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(obj.dim()));
  // Start from the marginal log-odds.
  const double rate = static_cast<double>(treated) / static_cast<double>(data.size());
  beta[0] = std::log(rate / (1.0 - rate));

  double f = obj.value(beta);
  Eigen::VectorXd grad = obj.gradient(beta);
  int it = 0;
  while (grad.norm() > solver.tolerance) {
    if (it >= solver.max_iterations) {
      throw FitError("propensity Newton solver did not converge in " +
                     std::to_string(solver.max_iterations) +
                     " iterations (gradient norm " + std::to_string(grad.norm()) + ")");
    }
    ++it;
    const Eigen::MatrixXd h = obj.hessian(beta);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    Eigen::VectorXd step = ldlt.solve(-grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      // Singular curvature (unpenalized collinear features): fall back to a
      // lightly regularized system.
      Eigen::MatrixXd hr = h;
      hr.diagonal().array() += 1e-8 + solver.l2;
      step = hr.ldlt().solve(-grad);
    }
    // Near the optimum the objective decrease falls below rounding noise, so
    // a step that keeps f within rounding and shrinks the gradient is taken.
    const double slack = 1e-14 * (1.0 + std::abs(f));
    double scale = 1.0;
    Eigen::VectorXd next;
    double fn = 0.0;
    bool accepted = false;
    for (int halvings = 0; halvings <= 60 && !accepted; ++halvings, scale *= 0.5) {
      next = beta + scale * step;
      fn = obj.value(next);
      accepted = fn <= f || (fn <= f + slack && obj.gradient(next).norm() < grad.norm());
    }
    if (!accepted) {
      throw FitError("propensity Newton solver stalled (gradient norm " +
                     std::to_string(grad.norm()) + ")");
    }
    beta = next;
    f = fn;
    grad = obj.gradient(beta);
  }

  PropensityFitSummary summary;
  summary.iterations = it;
  summary.gradient_norm = grad.norm();
  summary.objective = f;
  summary.n = data.size();
  summary.treated = treated;
  return PropensityModel(basis, std::vector<double>(beta.data(), beta.data() + beta.size()),
                         solver.clip, summary);
}

// Convenience: builds the basis from the training covariates, then fits.
inline PropensityModel fit_propensity(const ObservationalDataset& data, const BasisOptions& opt,
                                      const SolverConfig& solver, std::uint64_t seed) {
  return fit_propensity(data, make_basis(data.covariates(), opt, seed), solver);
}

}  // namespace stochint

#endif  // STOCHINT_PROPENSITY_HPP_
