#ifndef STOCHINT_DATASET_HPP_
#define STOCHINT_DATASET_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stochint/error.hpp"
#include "stochint/random.hpp"

namespace stochint {

// Row-major so that one unit's covariates are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Oracle quantities of a simulated dataset.
struct GroundTruth {
  std::vector<double> mu0;  // E[y | x, t = 0]
  std::vector<double> mu1;  // E[y | x, t = 1]
  std::optional<std::vector<double>> true_propensity;

  // Mean of mu1 - mu0. The library reports effects as treated minus control.
  double ate() const {
    double s = 0.0;
    for (std::size_t i = 0; i < mu0.size(); ++i) s += mu1[i] - mu0[i];
    return s / static_cast<double>(mu0.size());
  }
};

// Observational data Z = {x_i, y_i, t_i}. Immutable after construction; the
// constructor enforces shape, binary treatment and finiteness.
class ObservationalDataset {
 public:
  ObservationalDataset(Matrix covariates, std::vector<int> treatments,
                       std::vector<double> outcomes,
                       std::optional<GroundTruth> truth = std::nullopt)
      : x_(std::move(covariates)),
        t_(std::move(treatments)),
        y_(std::move(outcomes)),
        truth_(std::move(truth)) {
    validate();
  }

  std::size_t size() const { return t_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(x_.cols()); }

  const Matrix& covariates() const { return x_; }
  std::span<const double> row(std::size_t i) const {
    return {x_.data() + i * dim(), dim()};
  }
  const std::vector<int>& treatments() const { return t_; }
  const std::vector<double>& outcomes() const { return y_; }
  int treatment(std::size_t i) const { return t_[i]; }
  double outcome(std::size_t i) const { return y_[i]; }

  bool has_truth() const { return truth_.has_value(); }
  const GroundTruth& truth() const {
    if (!truth_) throw InvalidArgument("dataset has no ground truth");
    return *truth_;
  }
  const std::optional<GroundTruth>& maybe_truth() const { return truth_; }

  std::size_t treated_count() const {
    return static_cast<std::size_t>(std::count(t_.begin(), t_.end(), 1));
  }

  double mean_outcome() const {
    double s = 0.0;
    for (double v : y_) s += v;
    return s / static_cast<double>(y_.size());
  }

  // Units in the given order. Indices may repeat.
  ObservationalDataset subset(std::span<const std::size_t> idx) const {
    Matrix x(static_cast<Eigen::Index>(idx.size()), x_.cols());
    std::vector<int> t(idx.size());
    std::vector<double> y(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      if (idx[r] >= size()) throw InvalidArgument("subset index out of range");
      x.row(static_cast<Eigen::Index>(r)) = x_.row(static_cast<Eigen::Index>(idx[r]));
      t[r] = t_[idx[r]];
      y[r] = y_[idx[r]];
    }
    std::optional<GroundTruth> truth;
    if (truth_) {
      GroundTruth g;
      g.mu0.resize(idx.size());
      g.mu1.resize(idx.size());
      if (truth_->true_propensity) g.true_propensity.emplace(idx.size());
      for (std::size_t r = 0; r < idx.size(); ++r) {
        g.mu0[r] = truth_->mu0[idx[r]];
        g.mu1[r] = truth_->mu1[idx[r]];
        if (g.true_propensity) (*g.true_propensity)[r] = (*truth_->true_propensity)[idx[r]];
      }
      truth = std::move(g);
    }
    return ObservationalDataset(std::move(x), std::move(t), std::move(y), std::move(truth));
  }

  // Same units with outcomes replaced.
  ObservationalDataset with_outcomes(std::vector<double> y) const {
    return ObservationalDataset(x_, t_, std::move(y), truth_);
  }

 private:
  void validate() const {
    const std::size_t n = t_.size();
    if (n == 0) throw InvalidArgument("dataset must contain at least one unit");
    if (x_.cols() < 1) throw InvalidArgument("dataset must have at least one covariate");
    if (static_cast<std::size_t>(x_.rows()) != n || y_.size() != n) {
      throw InvalidArgument("covariates, treatments and outcomes differ in length");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (t_[i] != 0 && t_[i] != 1) {
        throw InvalidArgument("treatment of unit " + std::to_string(i) + " is not 0 or 1");
      }
      if (!std::isfinite(y_[i])) {
        throw InvalidArgument("outcome of unit " + std::to_string(i) + " is not finite");
      }
    }
    if (!x_.allFinite()) throw InvalidArgument("covariates contain non-finite values");
    if (truth_) {
      if (truth_->mu0.size() != n || truth_->mu1.size() != n) {
        throw InvalidArgument("ground truth length differs from dataset size");
      }
      if (truth_->true_propensity) {
        if (truth_->true_propensity->size() != n) {
          throw InvalidArgument("true propensity length differs from dataset size");
        }
        for (double p : *truth_->true_propensity) {
          if (!(p > 0.0 && p < 1.0)) {
            throw InvalidArgument("true propensity must lie strictly inside (0, 1)");
          }
        }
      }
    }
  }

  Matrix x_;
  std::vector<int> t_;
  std::vector<double> y_;
  std::optional<GroundTruth> truth_;
};

struct FoldAssignment {
  std::vector<int> fold_of_unit;
  int k = 0;

  std::vector<std::size_t> members(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of_unit.size(); ++i) {
      if (fold_of_unit[i] == fold) out.push_back(i);
    }
    return out;
  }
  std::vector<std::size_t> complement(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of_unit.size(); ++i) {
      if (fold_of_unit[i] != fold) out.push_back(i);
    }
    return out;
  }
  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(static_cast<std::size_t>(k), 0);
    for (int f : fold_of_unit) ++s[static_cast<std::size_t>(f)];
    return s;
  }
};

// Random partition into k folds whose sizes differ by at most one: the units
// are shuffled and dealt round-robin.
inline FoldAssignment split_folds(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("number of folds must be at least 2");
  if (static_cast<std::size_t>(k) > n) {
    throw InvalidArgument("number of folds (" + std::to_string(k) +
                          ") exceeds number of units (" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, 0x666f6c6473ULL);
  shuffle(order.begin(), order.end(), rng);
  FoldAssignment out;
  out.k = k;
  out.fold_of_unit.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    out.fold_of_unit[order[r]] = static_cast<int>(r % static_cast<std::size_t>(k));
  }
  return out;
}

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Test side gets round(n * test_fraction) units. Both index lists are sorted.
inline SplitIndices train_test_indices(std::size_t n, double test_fraction,
                                       std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("test fraction must lie strictly between 0 and 1");
  }
  const auto n_test =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  if (n_test == 0 || n_test >= n) {
    throw InvalidArgument("test fraction " + std::to_string(test_fraction) +
                          " leaves an empty side for n = " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, 0x73706c6974ULL);
  shuffle(order.begin(), order.end(), rng);
  SplitIndices s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

inline std::pair<ObservationalDataset, ObservationalDataset> train_test_split(
    const ObservationalDataset& data, double test_fraction, std::uint64_t seed) {
  const SplitIndices s = train_test_indices(data.size(), test_fraction, seed);
  return {data.subset(s.train), data.subset(s.test)};
}

}  // namespace stochint

#endif  // STOCHINT_DATASET_HPP_
