#ifndef STOCHINT_GENERATORS_HPP_
#define STOCHINT_GENERATORS_HPP_

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stochint/dataset.hpp"
#include "stochint/error.hpp"
#include "stochint/random.hpp"

namespace stochint {

// Semi-synthetic data with known potential outcomes.
//
// IHDP-like surface (d covariates, all standard normal):
//   A        = up to 6 "active" covariates, drawn from the coefficient stream
//   mu0(x)   = b0 + sum_{j in A} b_j x_j + c x_A0 x_A1 + e exp(x_A2 / 2)
//   tau(x)   = tau0 + g x_A0 + h (x_A1^2 - 1)
//   mu1(x)   = mu0(x) + effect_scale * tau(x)
//   logit(x) = alpha + sum_{j in A} w_j x_j + kappa (x_A0^2 - 1)
// The linear surface drops the interaction, exp and square terms. alpha is
// calibrated (on a reference sample drawn from the coefficient stream) so the
// mean clipped propensity hits treated_fraction_target; the response surface
// therefore depends on coefficient_seed only and data on seed only.
enum class ResponseSurface { nonlinear, linear };

struct DgpConfig {
  double noise_scale = 1.0;
  double treated_fraction_target = 139.0 / 747.0;
  double propensity_clip = 0.01;
  // Defaults to the data seed when unset, i.e. every seed is a new surface.
  std::optional<std::uint64_t> coefficient_seed;
  ResponseSurface response = ResponseSurface::nonlinear;
  double effect_scale = 1.0;
};

namespace detail {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double uniform_in(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline double random_sign(Rng& rng) { return uniform01(rng) < 0.5 ? -1.0 : 1.0; }

struct IhdpSurface {
  std::vector<std::size_t> active;
  double b0 = 0.0;
  std::vector<double> b, w;
  double c = 0.0, e = 0.0, tau0 = 0.0, g = 0.0, h = 0.0, kappa = 0.0;
  double alpha = 0.0;
  bool linear = false;
  double effect_scale = 1.0;
  double clip = 0.01;

  std::size_t a(std::size_t k) const { return active[k % active.size()]; }

  double mu0(std::span<const double> x) const {
    double v = b0;
    for (std::size_t k = 0; k < active.size(); ++k) v += b[k] * x[active[k]];
    if (!linear) v += c * x[a(0)] * x[a(1)] + e * std::exp(0.5 * x[a(2)]);
    return v;
  }
  double tau(std::span<const double> x) const {
    double v = tau0 + g * x[a(0)];
    if (!linear) v += h * (x[a(1)] * x[a(1)] - 1.0);
    return effect_scale * v;
  }
  double logit_without_intercept(std::span<const double> x) const {
    double v = 0.0;
    for (std::size_t k = 0; k < active.size(); ++k) v += w[k] * x[active[k]];
    if (!linear) v += kappa * (x[a(0)] * x[a(0)] - 1.0);
    return v;
  }
  double propensity(double logit) const {
    return std::clamp(sigmoid(logit), clip, 1.0 - clip);
  }
};

inline IhdpSurface draw_ihdp_surface(std::size_t d, std::uint64_t coef_seed,
                                     const DgpConfig& cfg) {
  Rng rng = make_rng(coef_seed, 0x69686470ULL);
  IhdpSurface s;
  s.linear = cfg.response == ResponseSurface::linear;
  s.effect_scale = cfg.effect_scale;
  s.clip = cfg.propensity_clip;

  std::vector<std::size_t> idx(d);
  for (std::size_t j = 0; j < d; ++j) idx[j] = j;
  shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min<std::size_t>(d, 6));
  s.active = idx;

  s.b0 = uniform_in(rng, 0.0, 2.0);
  for (std::size_t k = 0; k < s.active.size(); ++k) {
    s.b.push_back(random_sign(rng) * uniform_in(rng, 0.5, 1.5));
    s.w.push_back(random_sign(rng) * (k < 2 ? uniform_in(rng, 0.6, 1.0) : uniform_in(rng, 0.2, 0.5)));
  }
  s.c = random_sign(rng) * uniform_in(rng, 0.5, 1.0);
  s.e = uniform_in(rng, 1.0, 2.0);
  s.tau0 = uniform_in(rng, 3.0, 5.0);
  s.g = random_sign(rng) * uniform_in(rng, 0.5, 1.0);
  s.h = uniform_in(rng, 1.5, 2.5);
  s.kappa = random_sign(rng) * uniform_in(rng, 0.2, 0.4);

  // Calibrate the intercept by bisection on a reference sample. The mean
  // clipped propensity is non-decreasing in alpha.
  constexpr std::size_t kReference = 20000;
  std::vector<double> base(kReference);
  std::vector<double> x(d);
  for (std::size_t r = 0; r < kReference; ++r) {
    for (auto& v : x) v = standard_normal(rng);
    base[r] = s.logit_without_intercept(x);
  }
  auto mean_ps = [&](double alpha) {
    double m = 0.0;
    for (double l : base) m += s.propensity(alpha + l);
    return m / static_cast<double>(kReference);
  };
  double lo = -30.0, hi = 30.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_ps(mid) < cfg.treated_fraction_target ? lo : hi) = mid;
  }
  s.alpha = 0.5 * (lo + hi);
  return s;
}

inline void check_dgp_config(const DgpConfig& cfg) {
  if (!(cfg.propensity_clip > 0.0 && cfg.propensity_clip < 0.5)) {
    throw InvalidArgument("propensity_clip must lie in (0, 0.5)");
  }
  if (!(cfg.treated_fraction_target > cfg.propensity_clip &&
        cfg.treated_fraction_target < 1.0 - cfg.propensity_clip)) {
    throw InvalidArgument(
        "treated_fraction_target must lie inside (propensity_clip, 1 - propensity_clip); "
        "all-treated or all-control assignment is degenerate");
  }
  if (!(cfg.noise_scale >= 0.0) || !std::isfinite(cfg.noise_scale)) {
    throw InvalidArgument("noise_scale must be finite and non-negative");
  }
  if (!std::isfinite(cfg.effect_scale)) throw InvalidArgument("effect_scale must be finite");
}

}  // namespace detail

inline ObservationalDataset generate_ihdp_like(std::size_t n, std::size_t d, std::uint64_t seed,
                                               const DgpConfig& cfg = {}) {
  if (n < 20) throw InvalidArgument("generate_ihdp_like needs n >= 20");
  if (d < 2) throw InvalidArgument("generate_ihdp_like needs d >= 2");
  detail::check_dgp_config(cfg);
  const detail::IhdpSurface s =
      detail::draw_ihdp_surface(d, cfg.coefficient_seed.value_or(seed), cfg);

  Rng rng = make_rng(seed, 0x64617461ULL);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<int> t(n);
  std::vector<double> y(n);
  GroundTruth g;
  g.mu0.resize(n);
  g.mu1.resize(n);
  g.true_propensity.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = standard_normal(rng);
    }
    const std::span<const double> xi(x.data() + i * d, d);
    g.mu0[i] = s.mu0(xi);
    g.mu1[i] = g.mu0[i] + s.tau(xi);
    const double p = s.propensity(s.alpha + s.logit_without_intercept(xi));
    (*g.true_propensity)[i] = p;
    t[i] = uniform01(rng) < p ? 1 : 0;
    const double eps = standard_normal(rng);
    y[i] = (t[i] == 1 ? g.mu1[i] : g.mu0[i]) + cfg.noise_scale * eps;
  }
  return ObservationalDataset(std::move(x), std::move(t), std::move(y), std::move(g));
}

// Online-promotion-like data: 11 customer covariates, treatment = discount
// flag, outcome = revenue >= 0.
//   x1..x8 ~ N(0,1), x9 ~ Bernoulli(0.4), x10 ~ Bernoulli(0.5),
//   x11 = visit count, floor(exp(N(0.5, 0.5)))
//   mu0(x)  = 10 exp(0.25 x1 + 0.15 x2 - 0.1 x3 + 0.2 x9 + 0.05 x11)
//   mu1(x)  = mu0(x) (1 + uplift_scale tanh(1.5 (x4 + z)))
//             z = Phi^{-1}(positive_uplift_fraction), so mu1 > mu0 on that
//             fraction of customers
//   logit   = 0.4 x1 - 0.3 x5 + 0.3 x9 - 0.15
//   y       = mu_t exp(s eps - s^2 / 2), eps ~ N(0,1), s = noise_scale
struct OpConfig {
  double noise_scale = 0.2;
  double positive_uplift_fraction = 0.8;
  double uplift_scale = 0.25;
  double propensity_clip = 0.01;
};

namespace detail {

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("quantile level must lie in (0, 1)");
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline constexpr std::size_t kOpCovariates = 11;

inline ObservationalDataset generate_op_like(std::size_t n, std::uint64_t seed,
                                             const OpConfig& cfg = {}) {
  if (n < 20) throw InvalidArgument("generate_op_like needs n >= 20");
  if (!(cfg.noise_scale >= 0.0)) throw InvalidArgument("noise_scale must be non-negative");
  if (!(cfg.propensity_clip > 0.0 && cfg.propensity_clip < 0.5)) {
    throw InvalidArgument("propensity_clip must lie in (0, 0.5)");
  }
  if (!(cfg.uplift_scale >= 0.0 && cfg.uplift_scale < 1.0)) {
    throw InvalidArgument("uplift_scale must lie in [0, 1)");
  }
  const double z = detail::normal_quantile(cfg.positive_uplift_fraction);

  Rng rng = make_rng(seed, 0x6f70ULL);
  constexpr std::size_t d = kOpCovariates;
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<int> t(n);
  std::vector<double> y(n);
  GroundTruth g;
  g.mu0.resize(n);
  g.mu1.resize(n);
  g.true_propensity.emplace(n);
  const double s = cfg.noise_scale;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, d> v{};
    for (std::size_t j = 0; j < 8; ++j) v[j] = standard_normal(rng);
    v[8] = uniform01(rng) < 0.4 ? 1.0 : 0.0;
    v[9] = uniform01(rng) < 0.5 ? 1.0 : 0.0;
    v[10] = std::floor(std::exp(0.5 + 0.5 * standard_normal(rng)));
    for (std::size_t j = 0; j < d; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
    }
    const double mu0 =
        10.0 * std::exp(0.25 * v[0] + 0.15 * v[1] - 0.1 * v[2] + 0.2 * v[8] + 0.05 * v[10]);
    const double mu1 = mu0 * (1.0 + cfg.uplift_scale * std::tanh(1.5 * (v[3] + z)));
    const double logit = 0.4 * v[0] - 0.3 * v[4] + 0.3 * v[8] - 0.15;
    const double p =
        std::clamp(detail::sigmoid(logit), cfg.propensity_clip, 1.0 - cfg.propensity_clip);
    g.mu0[i] = mu0;
    g.mu1[i] = mu1;
    (*g.true_propensity)[i] = p;
    t[i] = uniform01(rng) < p ? 1 : 0;
    const double eps = standard_normal(rng);
    y[i] = (t[i] == 1 ? mu1 : mu0) * (s > 0.0 ? std::exp(s * eps - 0.5 * s * s) : 1.0);
  }
  return ObservationalDataset(std::move(x), std::move(t), std::move(y), std::move(g));
}

// Generator settings read from key = value config files. Documented keys:
//   generator                  ihdp | op
//   n, d, seed
//   noise_scale
//   treated_fraction_target
//   propensity_clip
//   coefficient_seed           (ihdp only)
//   response                   nonlinear | linear (ihdp only)
//   effect_scale               (ihdp only)
//   positive_uplift_fraction   (op only)
struct GeneratorSpec {
  std::string generator = "ihdp";
  std::size_t n = 747;
  std::size_t d = 25;
  std::uint64_t seed = 0;
  DgpConfig dgp;
  OpConfig op;

  ObservationalDataset generate() const { return generate_with_seed(seed); }
  ObservationalDataset generate_with_seed(std::uint64_t s) const {
    if (generator == "ihdp") return generate_ihdp_like(n, d, s, dgp);
    if (generator == "op") return generate_op_like(n, s, op);
    throw InvalidArgument("unknown generator '" + generator + "' (expected ihdp or op)");
  }
};

inline std::map<std::string, std::string> generator_spec_to_map(const GeneratorSpec& spec) {
  auto num = [](double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
  };
  std::map<std::string, std::string> m;
  m["generator"] = spec.generator;
  m["n"] = std::to_string(spec.n);
  m["seed"] = std::to_string(spec.seed);
  if (spec.generator == "op") {
    m["noise_scale"] = num(spec.op.noise_scale);
    m["propensity_clip"] = num(spec.op.propensity_clip);
    m["positive_uplift_fraction"] = num(spec.op.positive_uplift_fraction);
  } else {
    m["d"] = std::to_string(spec.d);
    m["noise_scale"] = num(spec.dgp.noise_scale);
    m["treated_fraction_target"] = num(spec.dgp.treated_fraction_target);
    m["propensity_clip"] = num(spec.dgp.propensity_clip);
    m["response"] = spec.dgp.response == ResponseSurface::linear ? "linear" : "nonlinear";
    m["effect_scale"] = num(spec.dgp.effect_scale);
    if (spec.dgp.coefficient_seed) {
      m["coefficient_seed"] = std::to_string(*spec.dgp.coefficient_seed);
    }
  }
  return m;
}

namespace detail {

inline double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) {
    throw ParseError("config key '" + key + "': '" + v + "' is not a number");
  }
  return out;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) {
    throw ParseError("config key '" + key + "': '" + v + "' is not a non-negative integer");
  }
  return out;
}

}  // namespace detail

// Applies recognised generator keys; unknown keys are left for the caller.
inline void apply_generator_config(const std::map<std::string, std::string>& kv,
                                   GeneratorSpec& spec) {
  for (const auto& [key, value] : kv) {
    if (key == "generator") {
      spec.generator = value;
    } else if (key == "n") {
      spec.n = detail::to_uint(key, value);
    } else if (key == "d") {
      spec.d = detail::to_uint(key, value);
    } else if (key == "seed") {
      spec.seed = detail::to_uint(key, value);
    } else if (key == "noise_scale") {
      spec.dgp.noise_scale = spec.op.noise_scale = detail::to_real(key, value);
    } else if (key == "treated_fraction_target") {
      spec.dgp.treated_fraction_target = detail::to_real(key, value);
    } else if (key == "propensity_clip") {
      spec.dgp.propensity_clip = spec.op.propensity_clip = detail::to_real(key, value);
    } else if (key == "coefficient_seed") {
      spec.dgp.coefficient_seed = detail::to_uint(key, value);
    } else if (key == "response") {
      if (value == "linear") {
        spec.dgp.response = ResponseSurface::linear;
      } else if (value == "nonlinear") {
        spec.dgp.response = ResponseSurface::nonlinear;
      } else {
        throw ParseError("config key 'response' must be linear or nonlinear");
      }
    } else if (key == "effect_scale") {
      spec.dgp.effect_scale = detail::to_real(key, value);
    } else if (key == "positive_uplift_fraction") {
      spec.op.positive_uplift_fraction = detail::to_real(key, value);
    }
  }
  if (spec.generator == "op") spec.d = kOpCovariates;
}

}  // namespace stochint

#endif  // STOCHINT_GENERATORS_HPP_
