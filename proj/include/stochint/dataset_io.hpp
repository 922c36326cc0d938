#ifndef STOCHINT_DATASET_IO_HPP_
#define STOCHINT_DATASET_IO_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "stochint/dataset.hpp"
#include "stochint/error.hpp"

namespace stochint {

// CSV dialect: comma separated, mandatory header row, '.' decimal point,
// no quoting. Numbers are written in shortest round-trip form so a
// write/read cycle reproduces doubles bit for bit.

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf, ptr);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// Binds CSV columns to dataset roles. Truth columns bind only if present in
// the file unless require_truth is set. With no explicit covariates, every
// column not bound to another role (and matching covariate_prefix, if set)
// is a covariate, in file order.
struct ColumnSchema {
  std::string treatment = "t";
  std::string outcome = "y";
  std::vector<std::string> covariates;
  std::string covariate_prefix;
  std::string mu0 = "mu0";
  std::string mu1 = "mu1";
  std::string true_propensity = "true_propensity";
  bool require_truth = false;
  // Columns that are never covariates (e.g. counterfactual outcome columns).
  std::vector<std::string> ignore;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path.string());
  CsvTable table;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (!have_header) {
      if (!cells.empty() && cells[0].size() >= 3 && cells[0].substr(0, 3) == "\xEF\xBB\xBF") {
        cells[0].remove_prefix(3);
      }
      for (auto c : cells) table.header.emplace_back(c);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(table.header.size()));
    }
    std::vector<std::string> row;
    row.reserve(cells.size());
    for (auto c : cells) row.emplace_back(c);
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError(path.string() + ": missing header row");
  return table;
}

inline ObservationalDataset load_csv(const std::filesystem::path& path,
                                     const ColumnSchema& schema = {}) {
  if (!std::filesystem::exists(path)) throw ParseError("no such file: " + path.string());
  const CsvTable table = read_csv_table(path);

  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (!index.emplace(table.header[c], c).second) {
      throw ParseError(path.string() + ": duplicate column '" + table.header[c] + "'");
    }
  }
  auto require = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) {
      throw ParseError(path.string() + ": missing column '" + name + "'");
    }
    return it->second;
  };
  auto optional_col = [&](const std::string& name) -> std::optional<std::size_t> {
    if (name.empty()) return std::nullopt;
    auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return it->second;
  };

  const std::size_t t_col = require(schema.treatment);
  const std::size_t y_col = require(schema.outcome);
  auto mu0_col = optional_col(schema.mu0);
  auto mu1_col = optional_col(schema.mu1);
  auto ps_col = optional_col(schema.true_propensity);
  if (schema.require_truth) {
    mu0_col = require(schema.mu0);
    mu1_col = require(schema.mu1);
  }
  if (mu0_col.has_value() != mu1_col.has_value()) {
    throw ParseError(path.string() + ": truth needs both '" + schema.mu0 + "' and '" +
                     schema.mu1 + "' columns");
  }

  std::vector<std::size_t> bound = {t_col, y_col};
  if (mu0_col) bound.push_back(*mu0_col);
  if (mu1_col) bound.push_back(*mu1_col);
  if (ps_col) bound.push_back(*ps_col);
  auto is_bound = [&](std::size_t c) {
    return std::find(bound.begin(), bound.end(), c) != bound.end();
  };

  std::vector<std::size_t> x_cols;
  if (!schema.covariates.empty()) {
    for (const auto& name : schema.covariates) {
      const std::size_t c = require(name);
      if (is_bound(c) || std::find(x_cols.begin(), x_cols.end(), c) != x_cols.end()) {
        throw ParseError(path.string() + ": column '" + name + "' bound twice in schema");
      }
      x_cols.push_back(c);
    }
  } else {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      const std::string& name = table.header[c];
      if (is_bound(c)) continue;
      if (std::find(schema.ignore.begin(), schema.ignore.end(), name) != schema.ignore.end()) {
        continue;
      }
      if (!schema.covariate_prefix.empty() && name.rfind(schema.covariate_prefix, 0) != 0) {
        continue;
      }
      x_cols.push_back(c);
    }
  }
  if (x_cols.empty()) throw ParseError(path.string() + ": no covariate columns");
  if (table.rows.empty()) throw ParseError(path.string() + ": no data rows");

  const std::size_t n = table.rows.size();
  const std::size_t d = x_cols.size();
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<int> t(n);
  std::vector<double> y(n);
  std::vector<double> mu0, mu1, ps;
  if (mu0_col) {
    mu0.resize(n);
    mu1.resize(n);
  }
  if (ps_col) ps.resize(n);

  auto cell = [&](std::size_t r, std::size_t c) {
    const auto v = parse_double(table.rows[r][c]);
    const std::string where =
        "row " + std::to_string(r + 1) + ", column '" + table.header[c] + "'";
    if (!v) {
      throw ParseError(path.string() + ": non-numeric value '" + table.rows[r][c] + "' at " +
                       where);
    }
    if (!std::isfinite(*v)) throw ParseError(path.string() + ": non-finite value at " + where);
    return *v;
  };

  for (std::size_t r = 0; r < n; ++r) {
    const double tv = cell(r, t_col);
    if (tv != 0.0 && tv != 1.0) {
      throw ParseError(path.string() + ": treatment value '" + table.rows[r][t_col] +
                       "' at row " + std::to_string(r + 1) + " is not 0 or 1");
    }
    t[r] = tv == 1.0 ? 1 : 0;
    y[r] = cell(r, y_col);
    for (std::size_t j = 0; j < d; ++j) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = cell(r, x_cols[j]);
    }
    if (mu0_col) {
      mu0[r] = cell(r, *mu0_col);
      mu1[r] = cell(r, *mu1_col);
    }
    if (ps_col) ps[r] = cell(r, *ps_col);
  }

  std::optional<GroundTruth> truth;
  if (mu0_col) {
    GroundTruth g{std::move(mu0), std::move(mu1), std::nullopt};
    if (ps_col) g.true_propensity = std::move(ps);
    truth = std::move(g);
  }
  return ObservationalDataset(std::move(x), std::move(t), std::move(y), std::move(truth));
}

// Writes t, y, [mu0, mu1, true_propensity], x1..xd.
inline void write_csv(const ObservationalDataset& data, const std::filesystem::path& path,
                      bool include_truth = true) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  const bool truth = include_truth && data.has_truth();
  const bool ps = truth && data.truth().true_propensity.has_value();
  out << "t,y";
  if (truth) out << ",mu0,mu1";
  if (ps) out << ",true_propensity";
  for (std::size_t j = 0; j < data.dim(); ++j) out << ",x" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.treatment(i) << ',' << format_double(data.outcome(i));
    if (truth) {
      out << ',' << format_double(data.truth().mu0[i]) << ','
          << format_double(data.truth().mu1[i]);
    }
    if (ps) out << ',' << format_double((*data.truth().true_propensity)[i]);
    for (double v : data.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw Error("failed writing file: " + path.string());
}

// Truth side-file: unit_index, mu0, mu1[, true_propensity].
inline void write_truth_csv(const ObservationalDataset& data,
                            const std::filesystem::path& path) {
  const GroundTruth& g = data.truth();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << "unit_index,mu0,mu1";
  if (g.true_propensity) out << ",true_propensity";
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << i << ',' << format_double(g.mu0[i]) << ',' << format_double(g.mu1[i]);
    if (g.true_propensity) out << ',' << format_double((*g.true_propensity)[i]);
    out << '\n';
  }
  if (!out) throw Error("failed writing file: " + path.string());
}

// Reads a truth side-file and attaches it to `data`.
inline ObservationalDataset attach_truth_csv(const ObservationalDataset& data,
                                             const std::filesystem::path& path) {
  const CsvTable table = read_csv_table(path);
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < table.header.size(); ++c) index[table.header[c]] = c;
  for (const char* name : {"mu0", "mu1"}) {
    if (!index.count(name)) {
      throw ParseError(path.string() + ": missing column '" + std::string(name) + "'");
    }
  }
  if (table.rows.size() != data.size()) {
    throw ParseError(path.string() + ": truth file has " + std::to_string(table.rows.size()) +
                     " rows, dataset has " + std::to_string(data.size()));
  }
  GroundTruth g;
  const bool has_ps = index.count("true_propensity") > 0;
  if (has_ps) g.true_propensity.emplace();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    auto get = [&](const char* name) {
      const auto v = parse_double(table.rows[r][index[name]]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(path.string() + ": bad value at row " + std::to_string(r + 1) +
                         ", column '" + name + "'");
      }
      return *v;
    };
    g.mu0.push_back(get("mu0"));
    g.mu1.push_back(get("mu1"));
    if (has_ps) g.true_propensity->push_back(get("true_propensity"));
  }
  return ObservationalDataset(data.covariates(), data.treatments(), data.outcomes(),
                              std::move(g));
}

// key = value lines; '#' starts a comment.
inline std::map<std::string, std::string> parse_key_value(std::string_view text,
                                                          const std::string& origin = "config") {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(origin + ": line " + std::to_string(line_no) + " is not key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError(origin + ": empty key at line " + std::to_string(line_no));
    out[key] = std::string(trim(line.substr(eq + 1)));
    if (end == text.size()) break;
  }
  return out;
}

}  // namespace stochint

#endif  // STOCHINT_DATASET_IO_HPP_
