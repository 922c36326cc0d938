#ifndef STOCHINT_EXPERIMENT_HPP_
#define STOCHINT_EXPERIMENT_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "stochint/dataset.hpp"
#include "stochint/dataset_io.hpp"
#include "stochint/error.hpp"
#include "stochint/generators.hpp"
#include "stochint/gesio.hpp"
#include "stochint/nuisance.hpp"
#include "stochint/report.hpp"
#include "stochint/sie.hpp"

namespace stochint {

// ---- delta grids -------------------------------------------------------------

struct DeltaGrid {
  double lo = 0.0;
  double hi = 10.0;
  double step = 0.5;

  std::vector<double> values() const {
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
    return out;
  }

  std::string str() const {
    return format_double(lo) + ":" + format_double(hi) + ":" + format_double(step);
  }
};

// "lo:hi:step"
inline DeltaGrid parse_delta_grid(const std::string& text) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    const auto v = parse_double(trim(std::string_view(text).substr(
        start, colon == std::string::npos ? std::string::npos : colon - start)));
    if (!v) throw InvalidArgument("delta grid '" + text + "' is not lo:hi:step");
    parts.push_back(*v);
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 3) throw InvalidArgument("delta grid '" + text + "' is not lo:hi:step");
  DeltaGrid g{parts[0], parts[1], parts[2]};
  if (!(g.lo >= 0.0) || !(g.hi >= g.lo) || !(g.step > 0.0) || !std::isfinite(g.hi)) {
    throw InvalidArgument("delta grid needs 0 <= lo <= hi and step > 0");
  }
  if ((g.hi - g.lo) / g.step > 1e6) throw InvalidArgument("delta grid has too many points");
  return g;
}

// ---- configuration -----------------------------------------------------------

enum class ReplicateMode { dgp, seed };

struct ExperimentConfig {
  std::uint64_t seed = 0;
  GeneratorSpec generator;  // generator.seed follows `seed`
  std::string data;         // CSV path; empty means generate
  std::string truth;        // optional truth side-file for `data`
  std::string model_in;     // optional saved nuisance models
  double delta = 1.0;
  std::optional<DeltaGrid> delta_grid;
  int folds = 5;
  std::vector<std::string> methods = {"sie", "ols", "ipwe"};
  std::size_t replications = 10;
  ReplicateMode replicate = ReplicateMode::dgp;
  double test_fraction = 0.2;
  std::vector<std::size_t> sizes;
  NuisanceConfig nuisance;
  GaConfig ga;
};

struct Setting {
  std::string key;
  std::string help;
  std::function<nlohmann::json(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

namespace detail {

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError("config key '" + key + "': '" + v + "' is not a boolean");
}

inline int to_int(const std::string& key, const std::string& v) {
  const std::uint64_t u = to_uint(key, v);
  if (u > 1000000000ULL) throw ParseError("config key '" + key + "': value too large");
  return static_cast<int>(u);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  for (auto piece : split_csv_line(v)) out.emplace_back(trim(piece));
  return out;
}

inline nlohmann::json optional_path(const std::string& s) {
  return s.empty() ? nlohmann::json(nullptr) : nlohmann::json(s);
}

template <class Get, class Set>
Setting make_setting(std::string key, std::string help, Get get, Set set) {
  return Setting{std::move(key), std::move(help), get, set};
}

}  // namespace detail

// Every configurable parameter. Config files and command-line flags both go
// through this table.
inline const std::vector<Setting>& settings() {
  using detail::make_setting;
  using detail::to_bool;
  using detail::to_int;
  using detail::to_real;
  using detail::to_uint;
  using C = ExperimentConfig;
  using J = nlohmann::json;
  static const std::vector<Setting> table = {
      // run
      make_setting("seed", "master seed", [](const C& c) { return J(c.seed); },
                   [](C& c, const std::string& v) { c.seed = to_uint("seed", v); }),
      make_setting("data", "input dataset CSV (empty: use the generator)",
                   [](const C& c) { return detail::optional_path(c.data); },
                   [](C& c, const std::string& v) { c.data = v; }),
      make_setting("truth", "truth side-file for --data",
                   [](const C& c) { return detail::optional_path(c.truth); },
                   [](C& c, const std::string& v) { c.truth = v; }),
      make_setting("model_in", "saved nuisance models to evaluate instead of cross-fitting",
                   [](const C& c) { return detail::optional_path(c.model_in); },
                   [](C& c, const std::string& v) { c.model_in = v; }),
      make_setting("delta", "stochastic degree", [](const C& c) { return J(c.delta); },
                   [](C& c, const std::string& v) { c.delta = to_real("delta", v); }),
      make_setting("delta_grid", "sweep lo:hi:step",
                   [](const C& c) { return c.delta_grid ? J(c.delta_grid->str()) : J(nullptr); },
                   [](C& c, const std::string& v) {
                     if (v.empty()) {
                       c.delta_grid.reset();
                     } else {
                       c.delta_grid = parse_delta_grid(v);
                     }
                   }),
      make_setting("folds", "cross-fitting folds", [](const C& c) { return J(c.folds); },
                   [](C& c, const std::string& v) { c.folds = to_int("folds", v); }),
      make_setting("methods", "benchmark methods: sie, ols, ipwe",
                   [](const C& c) { return J(c.methods); },
                   [](C& c, const std::string& v) { c.methods = detail::split_list(v); }),
      make_setting("replications", "benchmark replications",
                   [](const C& c) { return J(c.replications); },
                   [](C& c, const std::string& v) { c.replications = to_uint("replications", v); }),
      make_setting("replicate", "dgp (new data per replication) or seed (new split per replication)",
                   [](const C& c) { return J(c.replicate == ReplicateMode::dgp ? "dgp" : "seed"); },
                   [](C& c, const std::string& v) {
                     if (v == "dgp") {
                       c.replicate = ReplicateMode::dgp;
                     } else if (v == "seed") {
                       c.replicate = ReplicateMode::seed;
                     } else {
                       throw ParseError("config key 'replicate' must be dgp or seed");
                     }
                   }),
      make_setting("test_fraction", "held-out fraction", [](const C& c) { return J(c.test_fraction); },
                   [](C& c, const std::string& v) { c.test_fraction = to_real("test_fraction", v); }),
      make_setting("sizes", "data-size grid n1,n2,...", [](const C& c) { return J(c.sizes); },
                   [](C& c, const std::string& v) {
                     c.sizes.clear();
                     for (const auto& s : detail::split_list(v)) c.sizes.push_back(to_uint("sizes", s));
                   }),
      // generator
      make_setting("generator", "ihdp or op", [](const C& c) { return J(c.generator.generator); },
                   [](C& c, const std::string& v) { c.generator.generator = v; }),
      make_setting("n", "generated units", [](const C& c) { return J(c.generator.n); },
                   [](C& c, const std::string& v) { c.generator.n = to_uint("n", v); }),
      make_setting("d", "generated covariates (ihdp)", [](const C& c) { return J(c.generator.d); },
                   [](C& c, const std::string& v) { c.generator.d = to_uint("d", v); }),
      make_setting("noise_scale", "outcome noise scale",
                   [](const C& c) {
                     return J(c.generator.generator == "op" ? c.generator.op.noise_scale
                                                             : c.generator.dgp.noise_scale);
                   },
                   [](C& c, const std::string& v) {
                     c.generator.dgp.noise_scale = c.generator.op.noise_scale = to_real("noise_scale", v);
                   }),
      make_setting("treated_fraction_target", "mean true propensity (ihdp)",
                   [](const C& c) { return J(c.generator.dgp.treated_fraction_target); },
                   [](C& c, const std::string& v) {
                     c.generator.dgp.treated_fraction_target = to_real("treated_fraction_target", v);
                   }),
      make_setting("propensity_clip", "clip on true propensities",
                   [](const C& c) { return J(c.generator.dgp.propensity_clip); },
                   [](C& c, const std::string& v) {
                     c.generator.dgp.propensity_clip = c.generator.op.propensity_clip =
                         to_real("propensity_clip", v);
                   }),
      make_setting("coefficient_seed", "fixed response-surface seed (ihdp)",
                   [](const C& c) {
                     return c.generator.dgp.coefficient_seed ? J(*c.generator.dgp.coefficient_seed)
                                                             : J(nullptr);
                   },
                   [](C& c, const std::string& v) {
                     if (v.empty()) {
                       c.generator.dgp.coefficient_seed.reset();
                     } else {
                       c.generator.dgp.coefficient_seed = to_uint("coefficient_seed", v);
                     }
                   }),
      make_setting("response", "nonlinear or linear (ihdp)",
                   [](const C& c) {
                     return J(c.generator.dgp.response == ResponseSurface::linear ? "linear" : "nonlinear");
                   },
                   [](C& c, const std::string& v) { apply_generator_config({{"response", v}}, c.generator); }),
      make_setting("effect_scale", "treatment effect multiplier (ihdp)",
                   [](const C& c) { return J(c.generator.dgp.effect_scale); },
                   [](C& c, const std::string& v) { c.generator.dgp.effect_scale = to_real("effect_scale", v); }),
      make_setting("positive_uplift_fraction", "share of units with mu1 > mu0 (op)",
                   [](const C& c) { return J(c.generator.op.positive_uplift_fraction); },
                   [](C& c, const std::string& v) {
                     c.generator.op.positive_uplift_fraction = to_real("positive_uplift_fraction", v);
                   }),
      // nuisance
      make_setting("basis", "propensity basis: raw, polynomial2, rbf",
                   [](const C& c) { return J(to_string(c.nuisance.basis.kind)); },
                   [](C& c, const std::string& v) { c.nuisance.basis.kind = basis_kind_from_string(v); }),
      make_setting("standardize", "standardize covariates before the basis",
                   [](const C& c) { return J(c.nuisance.basis.standardize); },
                   [](C& c, const std::string& v) { c.nuisance.basis.standardize = to_bool("standardize", v); }),
      make_setting("rbf_centers", "number of RBF centers",
                   [](const C& c) { return J(c.nuisance.basis.rbf_centers); },
                   [](C& c, const std::string& v) { c.nuisance.basis.rbf_centers = to_uint("rbf_centers", v); }),
      make_setting("l2", "logistic L2 penalty", [](const C& c) { return J(c.nuisance.solver.l2); },
                   [](C& c, const std::string& v) { c.nuisance.solver.l2 = to_real("l2", v); }),
      make_setting("clip", "propensity prediction clip", [](const C& c) { return J(c.nuisance.solver.clip); },
                   [](C& c, const std::string& v) { c.nuisance.solver.clip = to_real("clip", v); }),
      make_setting("outcome_model", "boosted_trees or ridge_linear",
                   [](const C& c) { return J(to_string(c.nuisance.outcome.kind)); },
                   [](C& c, const std::string& v) { c.nuisance.outcome.kind = outcome_kind_from_string(v); }),
      make_setting("per_arm", "one outcome regressor per arm",
                   [](const C& c) { return J(c.nuisance.outcome.per_arm); },
                   [](C& c, const std::string& v) { c.nuisance.outcome.per_arm = to_bool("per_arm", v); }),
      make_setting("n_trees", "boosting rounds", [](const C& c) { return J(c.nuisance.outcome.boosting.n_trees); },
                   [](C& c, const std::string& v) { c.nuisance.outcome.boosting.n_trees = to_int("n_trees", v); }),
      make_setting("max_depth", "tree depth", [](const C& c) { return J(c.nuisance.outcome.boosting.max_depth); },
                   [](C& c, const std::string& v) { c.nuisance.outcome.boosting.max_depth = to_int("max_depth", v); }),
      make_setting("learning_rate", "boosting shrinkage",
                   [](const C& c) { return J(c.nuisance.outcome.boosting.learning_rate); },
                   [](C& c, const std::string& v) {
                     c.nuisance.outcome.boosting.learning_rate = to_real("learning_rate", v);
                   }),
      make_setting("ridge", "ridge penalty of the linear outcome model",
                   [](const C& c) { return J(c.nuisance.outcome.ridge); },
                   [](C& c, const std::string& v) { c.nuisance.outcome.ridge = to_real("ridge", v); }),
      // optimizer
      make_setting("population_size", "GA population (even)",
                   [](const C& c) { return J(c.ga.population_size); },
                   [](C& c, const std::string& v) { c.ga.population_size = to_uint("population_size", v); }),
      make_setting("generations", "GA generations", [](const C& c) { return J(c.ga.generations); },
                   [](C& c, const std::string& v) { c.ga.generations = to_int("generations", v); }),
      make_setting("crossover", "sbx or uniform", [](const C& c) { return J(to_string(c.ga.crossover)); },
                   [](C& c, const std::string& v) { c.ga.crossover = crossover_kind_from_string(v); }),
      make_setting("crossover_rate", "per-coordinate crossover probability",
                   [](const C& c) { return J(c.ga.crossover_rate); },
                   [](C& c, const std::string& v) { c.ga.crossover_rate = to_real("crossover_rate", v); }),
      make_setting("sbx_eta", "SBX distribution index", [](const C& c) { return J(c.ga.sbx_eta); },
                   [](C& c, const std::string& v) { c.ga.sbx_eta = to_real("sbx_eta", v); }),
      make_setting("mutation_rate", "per-coordinate mutation probability",
                   [](const C& c) { return J(c.ga.mutation_rate); },
                   [](C& c, const std::string& v) { c.ga.mutation_rate = to_real("mutation_rate", v); }),
      make_setting("mutation_scale", "mutation window half-width / (hi - lo)",
                   [](const C& c) { return J(c.ga.mutation_scale); },
                   [](C& c, const std::string& v) { c.ga.mutation_scale = to_real("mutation_scale", v); }),
      make_setting("elitism_count", "individuals carried over unchanged",
                   [](const C& c) { return J(c.ga.elitism_count); },
                   [](C& c, const std::string& v) { c.ga.elitism_count = to_uint("elitism_count", v); }),
      make_setting("tournament_size", "tournament size", [](const C& c) { return J(c.ga.tournament_size); },
                   [](C& c, const std::string& v) { c.ga.tournament_size = to_uint("tournament_size", v); }),
      make_setting("init_mean", "initial delta mean", [](const C& c) { return J(c.ga.init_mean); },
                   [](C& c, const std::string& v) { c.ga.init_mean = to_real("init_mean", v); }),
      make_setting("init_std", "initial delta std", [](const C& c) { return J(c.ga.init_std); },
                   [](C& c, const std::string& v) { c.ga.init_std = to_real("init_std", v); }),
      make_setting("delta_lo", "lower delta bound", [](const C& c) { return J(c.ga.bounds.lo); },
                   [](C& c, const std::string& v) { c.ga.bounds.lo = to_real("delta_lo", v); }),
      make_setting("delta_hi", "upper delta bound", [](const C& c) { return J(c.ga.bounds.hi); },
                   [](C& c, const std::string& v) { c.ga.bounds.hi = to_real("delta_hi", v); }),
      make_setting("snapshot_every", "best-vector snapshot cadence (0: off)",
                   [](const C& c) { return J(c.ga.snapshot_every); },
                   [](C& c, const std::string& v) { c.ga.snapshot_every = to_int("snapshot_every", v); }),
  };
  return table;
}

// Applies key/value settings in order. "command" is accepted and ignored so
// that an echoed config.json can be fed back in.
inline void apply_settings(ExperimentConfig& cfg,
                           const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "command") continue;
    const Setting* s = nullptr;
    for (const auto& candidate : settings()) {
      if (candidate.key == key) s = &candidate;
    }
    if (!s) throw ParseError("unknown config key '" + key + "'");
    s->set(cfg, value);
  }
  cfg.generator.seed = cfg.seed;
  if (cfg.generator.generator == "op") cfg.generator.d = kOpCovariates;
}

namespace detail {

inline std::string json_scalar_to_setting(const nlohmann::json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return format_double(v.get<double>());
  throw ParseError("config values must be scalars or lists of scalars");
}

}  // namespace detail

// JSON object or key = value text.
inline std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<std::pair<std::string, std::string>> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
    for (const auto& [key, value] : j.items()) {
      if (value.is_array()) {
        std::string joined;
        for (const auto& item : value) {
          joined += (joined.empty() ? "" : ",") + detail::json_scalar_to_setting(item);
        }
        out.emplace_back(key, joined);
      } else {
        out.emplace_back(key, detail::json_scalar_to_setting(value));
      }
    }
    return out;
  }
  for (auto& kv : parse_key_value(text, path.string())) out.emplace_back(kv.first, kv.second);
  return out;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg, const std::string& command) {
  nlohmann::json j;
  j["command"] = command;
  for (const auto& s : settings()) j[s.key] = s.get(cfg);
  return j;
}

// ---- output directories ------------------------------------------------------

// Default output root: $STOCHINT_OUT_ROOT, else ./runs.
inline std::filesystem::path default_output_root() {
  if (const char* env = std::getenv("STOCHINT_OUT_ROOT"); env && *env) return env;
  return "runs";
}

// Outputs are written to a staging directory and moved into place on
// commit. An uncommitted staging directory is removed on destruction, so a
// failed run leaves nothing behind.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path final_dir) {
    final_dir = final_dir.lexically_normal();
    if (!final_dir.has_filename()) final_dir = final_dir.parent_path();
    if (final_dir.empty()) throw InvalidArgument("empty output directory");
    final_ = final_dir;
    namespace fs = std::filesystem;
    if (fs::exists(final_)) {
      if (!fs::is_directory(final_)) throw Error("output path is not a directory: " + final_.string());
      if (!fs::is_empty(final_) && !fs::exists(final_ / "config.json")) {
        throw Error("refusing to replace non-empty directory without config.json: " + final_.string());
      }
    }
    staging_ = final_.parent_path() / ("." + final_.filename().string() + ".partial");
    std::error_code ec;
    fs::remove_all(staging_, ec);
    fs::create_directories(staging_ / "tables", ec);
    if (ec) throw Error("cannot create output directory " + staging_.string() + ": " + ec.message());
  }

  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  ~OutputDir() {
    if (!committed_) {
      std::error_code ec;
      std::filesystem::remove_all(staging_, ec);
    }
  }

  std::filesystem::path file(const std::string& name) const { return staging_ / name; }
  std::filesystem::path table(const std::string& name) const { return staging_ / "tables" / name; }
  const std::filesystem::path& final_path() const { return final_; }

  void commit() {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::remove_all(final_, ec);
    fs::rename(staging_, final_, ec);
    if (ec) throw Error("cannot move outputs into " + final_.string() + ": " + ec.message());
    committed_ = true;
  }

 private:
  std::filesystem::path final_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

// ---- shared steps ------------------------------------------------------------

inline ObservationalDataset load_dataset(const ExperimentConfig& cfg) {
  if (cfg.data.empty()) return cfg.generator.generate();
  ObservationalDataset data = load_csv(cfg.data);
  if (!cfg.truth.empty()) data = attach_truth_csv(data, cfg.truth);
  return data;
}

struct RunResult {
  std::filesystem::path dir;
  nlohmann::json report;
  std::string summary;  // one human-readable line
};

// ---- simulate ----------------------------------------------------------------

inline RunResult cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  OutputDir out(out_dir);
  const ObservationalDataset data = cfg.generator.generate();
  write_csv(data, out.file("data.csv"), false);
  write_truth_csv(data, out.file("truth.csv"));
  nlohmann::json report{{"generator", cfg.generator.generator},
                        {"n", data.size()},
                        {"d", data.dim()},
                        {"treated", data.treated_count()},
                        {"mean_outcome", data.mean_outcome()},
                        {"true_ate", data.truth().ate()}};
  write_json(report, out.file("report.json"));
  write_json(config_to_json(cfg, "simulate"), out.file("config.json"));
  out.commit();
  return {out.final_path(), report, "true ATE: " + format_double(data.truth().ate())};
}

// ---- estimate ----------------------------------------------------------------

inline RunResult cmd_estimate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const StochasticDegree delta(cfg.delta);
  const ObservationalDataset data = load_dataset(cfg);
  OutputDir out(out_dir);

  std::vector<UnitNuisance> units;
  std::vector<FoldDiagnostics> per_fold;
  if (!cfg.model_in.empty()) {
    units = evaluate_nuisance(load_nuisance(cfg.model_in), data);
  } else {
    CrossFit cf = cross_fit(data, cfg.folds, cfg.seed, cfg.nuisance);
    units = std::move(cf.units);
    per_fold = std::move(cf.per_fold);
    save_nuisance(fit_nuisance(data, cfg.nuisance, derive_seed(cfg.seed, 0)), out.file("model.json"));
  }

  EstimateReport rep = summarize_influence(units, delta.value());
  rep.k = cfg.model_in.empty() ? cfg.folds : 0;
  rep.seed = cfg.seed;
  rep.per_fold = std::move(per_fold);

  nlohmann::json report = to_json(rep);
  report["nuisance_source"] = cfg.model_in.empty() ? "cross_fit" : "loaded";
  report["ate_difference"] = plugin_ate(units);
  report["mean_outcome"] = data.mean_outcome();
  if (data.has_truth()) {
    report["true_ate"] = data.truth().ate();
    report["epsilon_ate"] = epsilon_ate(plugin_ate(units), data.truth().ate());
  }
  write_influence_csv(rep, out.table("units.csv"));

  if (cfg.delta_grid) {
    CsvWriter w(out.table("delta_sweep.csv"), {"delta", "psi_hat", "tau_sie"});
    const auto grid = cfg.delta_grid->values();
    const auto psi = psi_curve(units, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      w.cell(grid[g]).cell(psi[g]).cell(psi[g] - data.mean_outcome());
      w.end_row();
    }
    w.close();
  }
  write_json(report, out.file("report.json"));
  write_json(config_to_json(cfg, "estimate"), out.file("config.json"));
  out.commit();
  return {out.final_path(), report,
          "tau_sie=" + format_double(rep.tau_sie) + " psi_hat=" + format_double(rep.psi_hat) +
              " ate=" + format_double(rep.ate_plugin)};
}

// ---- benchmark ---------------------------------------------------------------

struct MethodError {
  std::string method;
  double train = 0.0;
  double test = 0.0;
};

inline void check_methods(const std::vector<std::string>& methods) {
  if (methods.empty()) throw InvalidArgument("no benchmark methods given");
  std::set<std::string> seen;
  for (const auto& m : methods) {
    if (m != "sie" && m != "ols" && m != "ipwe") {
      throw InvalidArgument("unknown method '" + m + "' (expected sie, ols or ipwe)");
    }
    if (!seen.insert(m).second) throw InvalidArgument("method '" + m + "' listed twice");
  }
}

// epsilon_ATE on the train and test side of one split, for each method.
// Train: cross-fitted plug-in contrast for sie, in-sample fits for the
// baselines. Test: models fitted on the whole train side.
inline std::vector<MethodError> evaluate_split(const ObservationalDataset& train,
                                               const ObservationalDataset& test,
                                               const std::vector<std::string>& methods, int folds,
                                               std::uint64_t seed, const NuisanceConfig& cfg) {
  const double truth_train = train.truth().ate();
  const double truth_test = test.truth().ate();
  std::optional<PropensityModel> propensity;
  auto get_propensity = [&]() -> const PropensityModel& {
    if (!propensity) propensity = fit_propensity(train, cfg.basis, cfg.solver, derive_seed(seed, 0));
    return *propensity;
  };
  std::vector<MethodError> out;
  for (const auto& m : methods) {
    MethodError e{m};
    if (m == "sie") {
      e.train = epsilon_ate(plugin_ate(cross_fit(train, folds, seed, cfg).units), truth_train);
      const NuisanceModels models{get_propensity(), fit_outcome(train, cfg.outcome)};
      e.test = epsilon_ate(plugin_ate(evaluate_nuisance(models, test)), truth_test);
    } else if (m == "ols") {
      const OlsTLearner ols = fit_ols_tlearner(train);
      e.train = epsilon_ate(ols.ate(train), truth_train);
      e.test = epsilon_ate(ols.ate(test), truth_test);
    } else {
      const PropensityModel& p = get_propensity();
      e.train = epsilon_ate(ipwe_from_propensity(train, p.predict_all(train)), truth_train);
      e.test = epsilon_ate(ipwe_from_propensity(test, p.predict_all(test)), truth_test);
    }
    out.push_back(e);
  }
  return out;
}

struct ReplicationResult {
  std::size_t replication = 0;
  std::uint64_t data_seed = 0;
  std::vector<MethodError> errors;
};

// dgp mode draws a new dataset (and response surface, unless
// coefficient_seed is fixed) per replication; seed mode keeps the dataset
// and redraws the split and fitting seeds.
inline std::vector<ReplicationResult> run_replications(const ExperimentConfig& cfg,
                                                       const GeneratorSpec& spec) {
  check_methods(cfg.methods);
  if (cfg.replications < 1) throw InvalidArgument("replications must be at least 1");
  std::optional<ObservationalDataset> fixed;
  if (cfg.replicate == ReplicateMode::seed) fixed = spec.generate_with_seed(cfg.seed);
  std::vector<ReplicationResult> out;
  for (std::size_t r = 0; r < cfg.replications; ++r) {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, r + 1);
    ReplicationResult rr;
    rr.replication = r;
    rr.data_seed = fixed ? cfg.seed : rep_seed;
    const ObservationalDataset data = fixed ? *fixed : spec.generate_with_seed(rep_seed);
    const auto [train, test] = train_test_split(data, cfg.test_fraction, rep_seed);
    rr.errors = evaluate_split(train, test, cfg.methods, cfg.folds, rep_seed, cfg.nuisance);
    out.push_back(std::move(rr));
  }
  return out;
}

struct BenchmarkRow {
  std::string method;
  std::string split;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for one replication
  std::size_t replications = 0;
};

inline std::vector<BenchmarkRow> aggregate(const std::vector<ReplicationResult>& reps,
                                           const std::vector<std::string>& methods) {
  std::vector<BenchmarkRow> rows;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (const char* split : {"train", "test"}) {
      std::vector<double> v;
      for (const auto& r : reps) {
        v.push_back(std::string(split) == "train" ? r.errors[m].train : r.errors[m].test);
      }
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
      rows.push_back({methods[m], split, mean, sd, v.size()});
    }
  }
  return rows;
}

inline RunResult cmd_benchmark(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  if (!cfg.data.empty()) throw InvalidArgument("benchmark needs a generator, not a dataset file");
  check_methods(cfg.methods);
  OutputDir out(out_dir);

  const auto reps = run_replications(cfg, cfg.generator);
  const auto rows = aggregate(reps, cfg.methods);
  {
    CsvWriter w(out.table("benchmark.csv"),
                {"method", "split", "mean_epsilon", "std_epsilon", "replications"});
    for (const auto& r : rows) {
      w.cell(r.method).cell(r.split).cell(r.mean).cell(r.std).cell(r.replications);
      w.end_row();
    }
    w.close();
  }
  {
    CsvWriter w(out.table("replications.csv"), {"replication", "data_seed", "method", "split", "epsilon"});
    for (const auto& r : reps) {
      for (const auto& e : r.errors) {
        w.cell(r.replication).cell(std::to_string(r.data_seed)).cell(e.method).cell("train").cell(e.train);
        w.end_row();
        w.cell(r.replication).cell(std::to_string(r.data_seed)).cell(e.method).cell("test").cell(e.test);
        w.end_row();
      }
    }
    w.close();
  }
  if (!cfg.sizes.empty()) {
    CsvWriter w(out.table("per_size.csv"),
                {"n", "method", "split", "mean_epsilon", "std_epsilon", "replications"});
    for (std::size_t n : cfg.sizes) {
      GeneratorSpec spec = cfg.generator;
      spec.n = n;
      for (const auto& r : aggregate(run_replications(cfg, spec), cfg.methods)) {
        w.cell(n).cell(r.method).cell(r.split).cell(r.mean).cell(r.std).cell(r.replications);
        w.end_row();
      }
    }
    w.close();
  }

  nlohmann::json table = nlohmann::json::array();
  std::string summary;
  for (const auto& r : rows) {
    table.push_back({{"method", r.method},
                     {"split", r.split},
                     {"mean_epsilon", r.mean},
                     {"std_epsilon", r.std}});
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s%-5s %-5s %.3f +- %.3f", summary.empty() ? "" : "\n",
                  r.method.c_str(), r.split.c_str(), r.mean, r.std);
    summary += buf;
  }
  nlohmann::json report{{"replications", cfg.replications},
                        {"replicate", cfg.replicate == ReplicateMode::dgp ? "dgp" : "seed"},
                        {"n", cfg.generator.n},
                        {"table", table}};
  write_json(report, out.file("report.json"));
  write_json(config_to_json(cfg, "benchmark"), out.file("config.json"));
  out.commit();
  return {out.final_path(), report, summary};
}

// ---- optimize ----------------------------------------------------------------

// GA and random-policy seeds derived from the master seed.
inline GaConfig resolved_ga_config(const ExperimentConfig& cfg) {
  GaConfig ga = cfg.ga;
  ga.seed = derive_seed(cfg.seed, 0x6761ULL);
  return ga;
}

inline RunResult cmd_optimize(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const GaConfig ga = resolved_ga_config(cfg);
  ga.validate();
  const ObservationalDataset data = load_dataset(cfg);
  OutputDir out(out_dir);

  const OptimizeResult res = optimize(data, ga, cfg.nuisance, cfg.folds, cfg.seed);
  const std::size_t n = data.size();
  const double best = res.ga.best_fitness / static_cast<double>(n);
  const double status_quo = expected_response(res.units, std::vector<double>(n, 1.0));
  const InterventionVector random = random_policy(n, ga, derive_seed(cfg.seed, 0x726e64ULL));
  const double random_response = expected_response(res.units, random.deltas);

  write_intervention_csv(res.ga.best, out.table("best_delta.csv"));
  write_trace_csv(res.ga.trace, out.table("trace.csv"));
  if (!res.ga.trace.snapshots.empty()) write_snapshots_csv(res.ga.trace, out.table("snapshots.csv"));
  {
    CsvWriter w(out.table("comparison.csv"), {"policy", "expected_response", "total_response"});
    const std::pair<const char*, double> policies[] = {
        {"ge_sio", best}, {"status_quo", status_quo}, {"random", random_response}};
    for (const auto& [name, v] : policies) {
      w.cell(name).cell(v).cell(v * static_cast<double>(n));
      w.end_row();
    }
    w.close();
  }
  nlohmann::json report{{"units", n},
                        {"generations", ga.generations},
                        {"population_size", ga.population_size},
                        {"best_expected_response", best},
                        {"status_quo_expected_response", status_quo},
                        {"random_expected_response", random_response},
                        {"initial_best_expected_response",
                         res.ga.initial_best_fitness / static_cast<double>(n)},
                        {"mean_delta", res.ga.best.mean()}};
  write_json(report, out.file("report.json"));
  write_json(config_to_json(cfg, "optimize"), out.file("config.json"));
  out.commit();
  return {out.final_path(), report,
          "expected response: ge-sio " + format_double(best) + ", status quo " +
              format_double(status_quo) + ", random " + format_double(random_response)};
}

inline RunResult run_command(const std::string& command, const ExperimentConfig& cfg,
                             const std::filesystem::path& out_dir) {
  if (command == "simulate") return cmd_simulate(cfg, out_dir);
  if (command == "estimate") return cmd_estimate(cfg, out_dir);
  if (command == "benchmark") return cmd_benchmark(cfg, out_dir);
  if (command == "optimize") return cmd_optimize(cfg, out_dir);
  throw InvalidArgument("unknown command '" + command + "'");
}

}  // namespace stochint

#endif  // STOCHINT_EXPERIMENT_HPP_
