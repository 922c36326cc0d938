#ifndef STOCHINT_REPORT_HPP_
#define STOCHINT_REPORT_HPP_

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "stochint/dataset_io.hpp"
#include "stochint/error.hpp"
#include "stochint/gesio.hpp"
#include "stochint/sie.hpp"

namespace stochint {

inline nlohmann::json to_json(const FoldDiagnostics& f) {
  return nlohmann::json{{"fold", f.fold},
                        {"held_out", f.held_out},
                        {"train", f.train},
                        {"train_treated", f.train_treated},
                        {"propensity_iterations", f.propensity_iterations},
                        {"propensity_gradient_norm", f.propensity_gradient_norm},
                        {"held_out_mean_p_hat", f.held_out_mean_p_hat},
                        {"held_out_outcome_rmse", f.held_out_outcome_rmse}};
}

// Aggregates and fold diagnostics; per-unit records go to CSV.
inline nlohmann::json to_json(const EstimateReport& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.per_fold) folds.push_back(to_json(f));
  return nlohmann::json{{"tau_sie", r.tau_sie},
                        {"tau_ate_alg1", r.tau_ate_alg1},
                        {"psi_hat", r.psi_hat},
                        {"ate_plugin", r.ate_plugin},
                        {"ate_influence", r.ate_influence},
                        {"delta", r.delta},
                        {"folds", r.k},
                        {"seed", r.seed},
                        {"units", r.records.size()},
                        {"per_fold", folds}};
}

// Small CSV writer in the dataset dialect.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot write file: " + path.string());
    for (std::size_t c = 0; c < header.size(); ++c) out_ << (c ? "," : "") << header[c];
    out_ << '\n';
  }

  CsvWriter& cell(const std::string& s) {
    sep();
    out_ << s;
    return *this;
  }
  CsvWriter& cell(double v) { return cell(format_double(v)); }
  CsvWriter& cell(std::size_t v) { return cell(std::to_string(v)); }
  CsvWriter& cell(int v) { return cell(std::to_string(v)); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

  void close() {
    out_.close();
    if (!out_) throw Error("failed writing file: " + path_.string());
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }

  std::filesystem::path path_;
  std::ofstream out_;
  bool first_ = true;
};

inline void write_influence_csv(const EstimateReport& r, const std::filesystem::path& path) {
  CsvWriter w(path, {"unit_index", "q", "m1", "m0", "phi", "tau_plugin"});
  for (const auto& rec : r.records) {
    w.cell(rec.unit_index).cell(rec.q).cell(rec.m1).cell(rec.m0).cell(rec.phi).cell(rec.tau_plugin);
    w.end_row();
  }
  w.close();
}

inline void write_trace_csv(const GaTrace& trace, const std::filesystem::path& path) {
  CsvWriter w(path, {"generation", "best_fitness", "mean_fitness"});
  for (std::size_t g = 0; g < trace.best_fitness.size(); ++g) {
    w.cell(g + 1).cell(trace.best_fitness[g]).cell(trace.mean_fitness[g]);
    w.end_row();
  }
  w.close();
}

inline void write_snapshots_csv(const GaTrace& trace, const std::filesystem::path& path) {
  CsvWriter w(path, {"generation", "unit_index", "delta"});
  for (const auto& [gen, deltas] : trace.snapshots) {
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      w.cell(gen).cell(i).cell(deltas[i]);
      w.end_row();
    }
  }
  w.close();
}

inline void write_intervention_csv(const InterventionVector& v, const std::filesystem::path& path) {
  CsvWriter w(path, {"unit_index", "delta"});
  for (std::size_t i = 0; i < v.size(); ++i) {
    w.cell(i).cell(v.deltas[i]);
    w.end_row();
  }
  w.close();
}

// Reads a (unit_index, delta) file written by write_intervention_csv.
inline InterventionVector read_intervention_csv(const std::filesystem::path& path,
                                                DeltaBounds bounds = {}) {
  const CsvTable table = read_csv_table(path);
  std::size_t col = table.header.size();
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c] == "delta") col = c;
  }
  if (col == table.header.size()) throw ParseError(path.string() + ": missing column 'delta'");
  InterventionVector v;
  v.bounds = bounds;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto d = parse_double(table.rows[r][col]);
    if (!d || !(*d >= 0.0) || !std::isfinite(*d)) {
      throw ParseError(path.string() + ": bad delta at row " + std::to_string(r + 1));
    }
    v.deltas.push_back(*d);
  }
  return v;
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing file: " + path.string());
}

}  // namespace stochint

#endif  // STOCHINT_REPORT_HPP_
