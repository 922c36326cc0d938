#ifndef STOCHINT_BOOSTING_HPP_
#define STOCHINT_BOOSTING_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "stochint/dataset.hpp"
#include "stochint/error.hpp"

namespace stochint {

// Flat binary regression tree. Node 0 is the root; a node with feature < 0
// is a leaf. Samples with x[feature] <= threshold go left.
struct RegressionTree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;

  std::size_t node_count() const { return feature.size(); }

  double predict(std::span<const double> x) const {
    int node = 0;
    while (feature[static_cast<std::size_t>(node)] >= 0) {
      const auto k = static_cast<std::size_t>(node);
      node = x[static_cast<std::size_t>(feature[k])] <= threshold[k] ? left[k] : right[k];
    }
    return value[static_cast<std::size_t>(node)];
  }

  int add_leaf(double v) {
    feature.push_back(-1);
    threshold.push_back(0.0);
    left.push_back(-1);
    right.push_back(-1);
    value.push_back(v);
    return static_cast<int>(feature.size() - 1);
  }

  int depth() const {
    std::vector<int> depth_of(node_count(), 0);
    int best = 0;
    for (std::size_t k = 0; k < node_count(); ++k) {
      best = std::max(best, depth_of[k]);
      if (feature[k] >= 0) {
        depth_of[static_cast<std::size_t>(left[k])] = depth_of[k] + 1;
        depth_of[static_cast<std::size_t>(right[k])] = depth_of[k] + 1;
      }
    }
    return best;
  }
};

struct TreeConfig {
  int max_depth = 3;
  std::size_t min_samples_leaf = 1;
};

// Column-major copy of the training covariates with every feature's row
// order presorted once. Shared by all trees of a boosting run.
class PresortedMatrix {
 public:
  explicit PresortedMatrix(const Matrix& x)
      : n_(static_cast<std::size_t>(x.rows())), d_(static_cast<std::size_t>(x.cols())) {
    cols_.resize(d_);
    order_.resize(d_);
    for (std::size_t j = 0; j < d_; ++j) {
      cols_[j].resize(n_);
      for (std::size_t i = 0; i < n_; ++i) {
        cols_[j][i] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
      order_[j].resize(n_);
      std::iota(order_[j].begin(), order_[j].end(), std::size_t{0});
      const auto& c = cols_[j];
      std::stable_sort(order_[j].begin(), order_[j].end(),
                       [&c](std::size_t a, std::size_t b) { return c[a] < c[b]; });
    }
  }

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return d_; }
  double at(std::size_t i, std::size_t j) const { return cols_[j][i]; }
  const std::vector<std::size_t>& order(std::size_t j) const { return order_[j]; }

 private:
  std::size_t n_, d_;
  std::vector<std::vector<double>> cols_;
  std::vector<std::vector<std::size_t>> order_;
};

namespace detail {

// Threshold strictly between a < b that sends a left and b right.
inline double split_point(double a, double b) {
  const double mid = a + 0.5 * (b - a);
  return (mid >= b) ? a : mid;
}

}  // namespace detail

// Grows a least-squares tree level by level with exact greedy search. For
// every level each feature's presorted order is scanned once, keeping
// running left sums per open node. Candidate thresholds are midpoints of
// consecutive distinct values. The best split maximises the reduction in
// squared error; ties keep the lowest feature index, then the lowest
// threshold. Leaves hold the mean target of their samples.
inline RegressionTree fit_tree(const PresortedMatrix& x, std::span<const double> target,
                               const TreeConfig& cfg) {
  const std::size_t n = x.rows();
  if (target.size() != n || n == 0) throw InvalidArgument("tree target has wrong length");
  const std::size_t min_leaf = std::max<std::size_t>(1, cfg.min_samples_leaf);

  RegressionTree tree;
  std::vector<int> node_of(n, 0);
  double total = 0.0;
  for (double v : target) total += v;
  tree.add_leaf(total / static_cast<double>(n));

  struct Open {
    int node;
    double sum;
    std::size_t count;
  };
  std::vector<Open> open{{0, total, n}};

  for (int depth = 0; depth < cfg.max_depth && !open.empty(); ++depth) {
    const std::size_t m = open.size();
    std::vector<int> slot_of_node(tree.node_count(), -1);
    for (std::size_t s = 0; s < m; ++s) slot_of_node[static_cast<std::size_t>(open[s].node)] = static_cast<int>(s);

    struct Best {
      double gain = 0.0;
      int feature = -1;
      double threshold = 0.0;
    };
    std::vector<Best> best(m);
    std::vector<double> lsum(m), last(m);
    std::vector<std::size_t> lcnt(m);

    for (std::size_t j = 0; j < x.cols(); ++j) {
      std::fill(lsum.begin(), lsum.end(), 0.0);
      std::fill(lcnt.begin(), lcnt.end(), std::size_t{0});
      for (std::size_t i : x.order(j)) {
        const int slot_i = slot_of_node[static_cast<std::size_t>(node_of[i])];
        if (slot_i < 0) continue;
        const auto s = static_cast<std::size_t>(slot_i);
        const double v = x.at(i, j);
        if (lcnt[s] >= min_leaf && v > last[s] && open[s].count - lcnt[s] >= min_leaf) {
          const double rsum = open[s].sum - lsum[s];
          const auto rcnt = static_cast<double>(open[s].count - lcnt[s]);
          const auto lc = static_cast<double>(lcnt[s]);
          const double gain = lsum[s] * lsum[s] / lc + rsum * rsum / rcnt -
                              open[s].sum * open[s].sum / static_cast<double>(open[s].count);
          if (gain > best[s].gain) {
            best[s] = {gain, static_cast<int>(j), detail::split_point(last[s], v)};
          }
        }
        lsum[s] += target[i];
        ++lcnt[s];
        last[s] = v;
      }
    }

    std::vector<Open> next;
    std::vector<int> split_slot(m, 0);
    for (std::size_t s = 0; s < m; ++s) {
      const auto& b = best[s];
      // Gains at rounding level are not real improvements.
      const double noise = 1e-12 * (std::abs(open[s].sum * open[s].sum) /
                                        static_cast<double>(open[s].count) + 1.0);
      if (b.feature < 0 || b.gain <= noise) continue;
      const auto k = static_cast<std::size_t>(open[s].node);
      const int l = tree.add_leaf(0.0);
      const int r = tree.add_leaf(0.0);
      tree.feature[k] = b.feature;
      tree.threshold[k] = b.threshold;
      tree.left[k] = l;
      tree.right[k] = r;
      split_slot[s] = 1;
    }
    std::vector<double> sums(tree.node_count(), 0.0);
    std::vector<std::size_t> counts(tree.node_count(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(node_of[i]);
      if (tree.feature[k] < 0) continue;
      const int child = x.at(i, static_cast<std::size_t>(tree.feature[k])) <= tree.threshold[k]
                            ? tree.left[k]
                            : tree.right[k];
      node_of[i] = child;
      sums[static_cast<std::size_t>(child)] += target[i];
      ++counts[static_cast<std::size_t>(child)];
    }
    for (std::size_t s = 0; s < m; ++s) {
      if (!split_slot[s]) continue;
      const auto k = static_cast<std::size_t>(open[s].node);
      for (int child : {tree.left[k], tree.right[k]}) {
        const auto c = static_cast<std::size_t>(child);
        tree.value[c] = sums[c] / static_cast<double>(counts[c]);
        if (counts[c] >= 2 * min_leaf) next.push_back({child, sums[c], counts[c]});
      }
    }
    open = std::move(next);
  }
  return tree;
}

struct BoostingConfig {
  int n_trees = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  std::size_t min_samples_leaf = 1;
};

// Gradient boosting for squared error: F_0 = mean(y), F_r = F_{r-1} +
// learning_rate * tree_r, tree_r fitted to the residuals y - F_{r-1}.
class BoostedTrees {
 public:
  BoostedTrees() = default;
  BoostedTrees(double init, double learning_rate, std::vector<RegressionTree> trees)
      : init_(init), learning_rate_(learning_rate), trees_(std::move(trees)) {}

  double predict(std::span<const double> x) const {
    double f = init_;
    for (const auto& t : trees_) f += learning_rate_ * t.predict(x);
    return f;
  }

  double init() const { return init_; }
  double learning_rate() const { return learning_rate_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  // Mean squared training error before round 1 and after each round.
  const std::vector<double>& training_loss() const { return loss_; }

  static BoostedTrees fit(const Matrix& x, std::span<const double> y, const BoostingConfig& cfg) {
    if (static_cast<std::size_t>(x.rows()) != y.size() || y.empty()) {
      throw InvalidArgument("boosting needs one target per row");
    }
    if (cfg.n_trees < 0 || cfg.max_depth < 0) throw InvalidArgument("invalid boosting config");
    if (!(cfg.learning_rate > 0.0 && cfg.learning_rate <= 1.0)) {
      throw InvalidArgument("learning_rate must lie in (0, 1]");
    }
    const PresortedMatrix px(x);
    const std::size_t n = y.size();
    double init = 0.0;
    for (double v : y) init += v;
    init /= static_cast<double>(n);

    std::vector<double> f(n, init), resid(n);
    auto mse = [&] {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        resid[i] = y[i] - f[i];
        s += resid[i] * resid[i];
      }
      return s / static_cast<double>(n);
    };

    BoostedTrees model;
    model.init_ = init;
    model.learning_rate_ = cfg.learning_rate;
    model.loss_.push_back(mse());
    const TreeConfig tcfg{cfg.max_depth, cfg.min_samples_leaf};
    std::vector<double> row(px.cols());
    for (int r = 0; r < cfg.n_trees; ++r) {
      RegressionTree tree = fit_tree(px, resid, tcfg);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < px.cols(); ++j) row[j] = px.at(i, j);
        f[i] += cfg.learning_rate * tree.predict(row);
      }
      model.trees_.push_back(std::move(tree));
      model.loss_.push_back(mse());
    }
    return model;
  }

 private:
  double init_ = 0.0;
  double learning_rate_ = 0.1;
  std::vector<RegressionTree> trees_;
  std::vector<double> loss_;
};

}  // namespace stochint

#endif  // STOCHINT_BOOSTING_HPP_
