#ifndef STOCHINT_BASIS_HPP_
#define STOCHINT_BASIS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stochint/dataset.hpp"
#include "stochint/error.hpp"
#include "stochint/random.hpp"

namespace stochint {

enum class BasisKind { raw, polynomial2, rbf };

inline std::string to_string(BasisKind k) {
  switch (k) {
    case BasisKind::raw: return "raw";
    case BasisKind::polynomial2: return "polynomial2";
    case BasisKind::rbf: return "rbf";
  }
  return "?";
}

inline BasisKind basis_kind_from_string(const std::string& s) {
  if (s == "raw") return BasisKind::raw;
  if (s == "polynomial2") return BasisKind::polynomial2;
  if (s == "rbf") return BasisKind::rbf;
  throw InvalidArgument("unknown basis '" + s + "' (expected raw, polynomial2 or rbf)");
}

// Feature map x -> (g_1(x), ..., g_s(x)) feeding the logistic propensity
// model. Inputs are optionally standardized first, z_j = (x_j - shift_j) /
// scale_j. Layout of the output:
//   raw          1, z_1..z_d
//   polynomial2  1, z_1..z_d, z_j z_l for j <= l (row-major upper triangle)
//   rbf          1, z_1..z_d, exp(-|z - c_k|^2 / (2 w_k^2)) per center
class BasisExpansion {
 public:
  BasisExpansion() = default;

  static BasisExpansion raw(std::size_t d) { return BasisExpansion(BasisKind::raw, d); }
  static BasisExpansion polynomial2(std::size_t d) {
    return BasisExpansion(BasisKind::polynomial2, d);
  }
  // centers are given in the (standardized) input space, one row each.
  static BasisExpansion rbf(std::size_t d, std::vector<std::vector<double>> centers,
                            std::vector<double> widths) {
    BasisExpansion b(BasisKind::rbf, d);
    if (centers.size() != widths.size() || centers.empty()) {
      throw InvalidArgument("rbf basis needs one width per center and at least one center");
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (centers[k].size() != d) throw InvalidArgument("rbf center has wrong dimension");
      if (!(widths[k] > 0.0) || !std::isfinite(widths[k])) {
        throw InvalidArgument("rbf widths must be positive and finite");
      }
    }
    b.centers_ = std::move(centers);
    b.widths_ = std::move(widths);
    return b;
  }

  void set_standardization(std::vector<double> shift, std::vector<double> scale) {
    if (shift.size() != d_ || scale.size() != d_) {
      throw InvalidArgument("standardization vectors must have length d");
    }
    for (double s : scale) {
      if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("scales must be positive");
    }
    shift_ = std::move(shift);
    scale_ = std::move(scale);
  }

  BasisKind kind() const { return kind_; }
  std::size_t input_dim() const { return d_; }
  std::size_t output_dim() const {
    switch (kind_) {
      case BasisKind::raw: return 1 + d_;
      case BasisKind::polynomial2: return 1 + d_ + d_ * (d_ + 1) / 2;
      case BasisKind::rbf: return 1 + d_ + centers_.size();
    }
    return 0;
  }
  const std::vector<double>& shift() const { return shift_; }
  const std::vector<double>& scale() const { return scale_; }
  const std::vector<std::vector<double>>& centers() const { return centers_; }
  const std::vector<double>& widths() const { return widths_; }

  // Writes output_dim() features into out.
  void expand_into(std::span<const double> x, std::span<double> out) const {
    if (x.size() != d_) {
      throw InvalidArgument("basis expects " + std::to_string(d_) + " inputs, got " +
                            std::to_string(x.size()));
    }
    if (out.size() != output_dim()) throw InvalidArgument("basis output has wrong size");
    out[0] = 1.0;
    for (std::size_t j = 0; j < d_; ++j) {
      if (!std::isfinite(x[j])) throw InvalidArgument("basis input is not finite");
      out[1 + j] = shift_.empty() ? x[j] : (x[j] - shift_[j]) / scale_[j];
    }
    const auto z = out.subspan(1, d_);
    std::size_t o = 1 + d_;
    if (kind_ == BasisKind::polynomial2) {
      for (std::size_t j = 0; j < d_; ++j) {
        for (std::size_t l = j; l < d_; ++l) out[o++] = z[j] * z[l];
      }
    } else if (kind_ == BasisKind::rbf) {
      for (std::size_t k = 0; k < centers_.size(); ++k) {
        double dist2 = 0.0;
        for (std::size_t j = 0; j < d_; ++j) {
          const double diff = z[j] - centers_[k][j];
          dist2 += diff * diff;
        }
        out[o++] = std::exp(-dist2 / (2.0 * widths_[k] * widths_[k]));
      }
    }
  }

  std::vector<double> expand(std::span<const double> x) const {
    std::vector<double> out(output_dim());
    expand_into(x, out);
    return out;
  }

  // Design matrix with one expanded row per unit.
  Matrix design(const Matrix& x) const {
    Matrix g(x.rows(), static_cast<Eigen::Index>(output_dim()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      expand_into(std::span<const double>(x.data() + i * x.cols(), static_cast<std::size_t>(x.cols())),
                  std::span<double>(g.data() + i * g.cols(), static_cast<std::size_t>(g.cols())));
    }
    return g;
  }

 private:
  BasisExpansion(BasisKind kind, std::size_t d) : kind_(kind), d_(d) {
    if (d == 0) throw InvalidArgument("basis input dimension must be positive");
  }

  BasisKind kind_ = BasisKind::raw;
  std::size_t d_ = 0;
  std::vector<double> shift_, scale_;
  std::vector<std::vector<double>> centers_;
  std::vector<double> widths_;
};

struct BasisOptions {
  BasisKind kind = BasisKind::polynomial2;
  bool standardize = true;
  std::size_t rbf_centers = 10;
  std::size_t rbf_subsample = 500;
  int rbf_iterations = 20;
};

// Builds a basis adapted to the training covariates: standardization from
// column means and standard deviations; for rbf, centers from k-means
// (k-means++ seeding) on a seeded subsample and widths from the RMS distance
// of the subsample points assigned to each center.
inline BasisExpansion make_basis(const Matrix& x, const BasisOptions& opt, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  std::vector<double> shift(d, 0.0), scale(d, 1.0);
  if (opt.standardize) {
    for (std::size_t j = 0; j < d; ++j) {
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      m /= static_cast<double>(n);
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - m;
        v += r * r;
      }
      v /= static_cast<double>(n);
      shift[j] = m;
      scale[j] = v > 1e-24 ? std::sqrt(v) : 1.0;
    }
  }

  BasisExpansion b;
  switch (opt.kind) {
    case BasisKind::raw: b = BasisExpansion::raw(d); break;
    case BasisKind::polynomial2: b = BasisExpansion::polynomial2(d); break;
    case BasisKind::rbf: {
      Rng rng = make_rng(seed, 0x726266ULL);
      std::vector<std::size_t> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
      shuffle(idx.begin(), idx.end(), rng);
      idx.resize(std::min(n, opt.rbf_subsample));
      std::vector<std::vector<double>> pts;
      for (std::size_t i : idx) {
        std::vector<double> z(d);
        for (std::size_t j = 0; j < d; ++j) {
          z[j] = (x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - shift[j]) / scale[j];
        }
        pts.push_back(std::move(z));
      }
      const std::size_t k = std::max<std::size_t>(1, std::min(opt.rbf_centers, pts.size()));
      auto dist2 = [&](const std::vector<double>& a, const std::vector<double>& c) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += (a[j] - c[j]) * (a[j] - c[j]);
        return s;
      };
      std::vector<std::vector<double>> centers{pts[0]};
      std::vector<double> best(pts.size(), std::numeric_limits<double>::infinity());
      while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t p = 0; p < pts.size(); ++p) {
          best[p] = std::min(best[p], dist2(pts[p], centers.back()));
          total += best[p];
        }
        if (total <= 0.0) break;
        double target = uniform01(rng) * total;
        std::size_t pick = pts.size() - 1;
        for (std::size_t p = 0; p < pts.size(); ++p) {
          target -= best[p];
          if (target < 0.0) {
            pick = p;
            break;
          }
        }
        centers.push_back(pts[pick]);
      }
      std::vector<std::size_t> assign(pts.size(), 0);
      for (int it = 0; it < opt.rbf_iterations; ++it) {
        for (std::size_t p = 0; p < pts.size(); ++p) {
          double bd = std::numeric_limits<double>::infinity();
          for (std::size_t c = 0; c < centers.size(); ++c) {
            const double dd = dist2(pts[p], centers[c]);
            if (dd < bd) {
              bd = dd;
              assign[p] = c;
            }
          }
        }
        std::vector<std::vector<double>> sums(centers.size(), std::vector<double>(d, 0.0));
        std::vector<std::size_t> counts(centers.size(), 0);
        for (std::size_t p = 0; p < pts.size(); ++p) {
          ++counts[assign[p]];
          for (std::size_t j = 0; j < d; ++j) sums[assign[p]][j] += pts[p][j];
        }
        for (std::size_t c = 0; c < centers.size(); ++c) {
          if (counts[c] == 0) continue;
          for (std::size_t j = 0; j < d; ++j) {
            centers[c][j] = sums[c][j] / static_cast<double>(counts[c]);
          }
        }
      }
      std::vector<double> widths(centers.size(), 0.0);
      std::vector<std::size_t> counts(centers.size(), 0);
      for (std::size_t p = 0; p < pts.size(); ++p) {
        widths[assign[p]] += dist2(pts[p], centers[assign[p]]);
        ++counts[assign[p]];
      }
      for (std::size_t c = 0; c < centers.size(); ++c) {
        const double w = counts[c] ? std::sqrt(widths[c] / static_cast<double>(counts[c])) : 0.0;
        widths[c] = std::max(w, 1e-3 * std::sqrt(static_cast<double>(d)));
      }
      b = BasisExpansion::rbf(d, std::move(centers), std::move(widths));
      break;
    }
  }
  if (opt.standardize) b.set_standardization(std::move(shift), std::move(scale));
  return b;
}

}  // namespace stochint

#endif  // STOCHINT_BASIS_HPP_
