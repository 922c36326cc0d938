#ifndef STOCHINT_LINEAR_HPP_
#define STOCHINT_LINEAR_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "stochint/dataset.hpp"
#include "stochint/error.hpp"

namespace stochint {

// y ~ intercept + coef . x
class LinearRegressor {
 public:
  LinearRegressor() = default;
  LinearRegressor(double intercept, std::vector<double> coef, bool ridge_fallback = false)
      : intercept_(intercept), coef_(std::move(coef)), ridge_fallback_(ridge_fallback) {}

  double predict(std::span<const double> x) const {
    double s = intercept_;
    for (std::size_t j = 0; j < coef_.size(); ++j) s += coef_[j] * x[j];
    return s;
  }

  double intercept() const { return intercept_; }
  const std::vector<double>& coef() const { return coef_; }
  // True when the least-squares design was rank deficient and the ridge
  // fallback was used.
  bool ridge_fallback() const { return ridge_fallback_; }

  // Minimizes (1/n) |y - b0 - X b|^2 + ridge |b|^2 (intercept unpenalized)
  // on centered data. ridge == 0 is ordinary least squares; a rank-deficient
  // design then falls back to ridge = fallback_ridge.
  static LinearRegressor fit(const Matrix& x, std::span<const double> y, double ridge,
                             double fallback_ridge = 1e-8) {
    const auto n = static_cast<Eigen::Index>(y.size());
    if (x.rows() != n || n == 0) throw InvalidArgument("linear fit needs one target per row");
    if (!(ridge >= 0.0)) throw InvalidArgument("ridge penalty must be non-negative");
    const Eigen::RowVectorXd xmean = x.colwise().mean();
    double ymean = 0.0;
    for (double v : y) ymean += v;
    ymean /= static_cast<double>(n);
    const Eigen::MatrixXd xc = x.rowwise() - xmean;
    Eigen::VectorXd yc(n);
    for (Eigen::Index i = 0; i < n; ++i) yc[i] = y[static_cast<std::size_t>(i)] - ymean;

    Eigen::VectorXd b;
    bool fallback = false;
    if (ridge == 0.0) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
      qr.setThreshold(1e-10);
      if (qr.rank() == xc.cols()) {
        b = qr.solve(yc);
      } else {
        fallback = true;
        ridge = fallback_ridge;
      }
    }
    if (b.size() == 0) {
      const double nn = static_cast<double>(n);
      Eigen::MatrixXd a = xc.transpose() * xc / nn;
      a.diagonal().array() += ridge;
      b = a.ldlt().solve(xc.transpose() * yc / nn);
    }
    if (!b.allFinite()) throw FitError("linear fit produced non-finite coefficients");
    const double b0 = ymean - xmean.dot(b);
    return LinearRegressor(b0, std::vector<double>(b.data(), b.data() + b.size()), fallback);
  }

 private:
  double intercept_ = 0.0;
  std::vector<double> coef_;
  bool ridge_fallback_ = false;
};

}  // namespace stochint

#endif  // STOCHINT_LINEAR_HPP_
