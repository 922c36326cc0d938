#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <string>

#include "stochint/dataset.hpp"
#include "stochint/dataset_io.hpp"
#include "stochint/generators.hpp"

namespace fs = std::filesystem;
using namespace stochint;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("stochint_dataset_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ObservationalDataset, RejectsInvalidConstruction) {
  Matrix x(2, 1);
  x << 0.0, 1.0;
  EXPECT_THROW(ObservationalDataset(x, {0, 2}, {1.0, 2.0}), InvalidArgument);
  EXPECT_THROW(ObservationalDataset(x, {0, 1}, {1.0}), InvalidArgument);
  EXPECT_THROW(ObservationalDataset(x, {0, 1}, {1.0, NAN}), InvalidArgument);
  Matrix bad = x;
  bad(0, 0) = INFINITY;
  EXPECT_THROW(ObservationalDataset(bad, {0, 1}, {1.0, 2.0}), InvalidArgument);
  GroundTruth g{{0.0, 0.0}, {1.0, 1.0}, std::vector<double>{0.5, 1.0}};
  EXPECT_THROW(ObservationalDataset(x, {0, 1}, {1.0, 2.0}, g), InvalidArgument);
}

TEST(ObservationalDataset, SubsetKeepsTruthAligned) {
  const auto data = generate_ihdp_like(40, 3, 5);
  const std::vector<std::size_t> idx = {3, 7, 11};
  const auto sub = data.subset(idx);
  ASSERT_EQ(sub.size(), 3u);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    EXPECT_EQ(sub.outcome(r), data.outcome(idx[r]));
    EXPECT_EQ(sub.treatment(r), data.treatment(idx[r]));
    EXPECT_EQ(sub.truth().mu1[r], data.truth().mu1[idx[r]]);
    EXPECT_EQ(sub.row(r)[2], data.row(idx[r])[2]);
  }
}

// ---- CSV -----------------------------------------------------------------------

TEST(LoadCsv, ParsesSmallFile) {
  TempDir dir;
  write_text(dir / "a.csv", "t,y,x1,x2\n0,1.5,0.1,0.2\n1,2.5,0.3,0.4\n0,-1,5,6\n");
  const auto data = load_csv(dir / "a.csv");
  EXPECT_EQ(data.size(), 3u);
  EXPECT_EQ(data.dim(), 2u);
  EXPECT_FALSE(data.has_truth());
  EXPECT_EQ(data.treatment(1), 1);
  EXPECT_DOUBLE_EQ(data.outcome(2), -1.0);
  EXPECT_DOUBLE_EQ(data.row(2)[1], 6.0);
}

TEST(LoadCsv, NonBinaryTreatmentNamesRow) {
  TempDir dir;
  write_text(dir / "a.csv", "t,y,x1\n0,1,0\n2,1,0\n");
  const std::string msg = error_of([&] { load_csv(dir / "a.csv"); });
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
}

TEST(LoadCsv, NonNumericCellNamesRowAndColumn) {
  TempDir dir;
  write_text(dir / "a.csv", "t,y,x1\n0,1,0\n1,1,abc\n");
  const std::string msg = error_of([&] { load_csv(dir / "a.csv"); });
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("x1"), std::string::npos) << msg;
}

TEST(LoadCsv, StructuralErrors) {
  TempDir dir;
  EXPECT_THROW(load_csv(dir / "missing.csv"), Error);
  write_text(dir / "nocol.csv", "t,x1\n0,1\n");
  EXPECT_NE(error_of([&] { load_csv(dir / "nocol.csv"); }).find("'y'"), std::string::npos);
  write_text(dir / "dup.csv", "t,y,x1,x1\n0,1,2,3\n");
  EXPECT_THROW(load_csv(dir / "dup.csv"), ParseError);
  write_text(dir / "nan.csv", "t,y,x1\n0,nan,2\n");
  EXPECT_THROW(load_csv(dir / "nan.csv"), Error);
  write_text(dir / "ragged.csv", "t,y,x1\n0,1\n");
  EXPECT_THROW(load_csv(dir / "ragged.csv"), ParseError);
}

TEST(LoadCsv, IhdpFormatWithTruthColumns) {
  TempDir dir;
  std::string header = "t,y,mu0,mu1";
  for (int j = 1; j <= 25; ++j) header += ",x" + std::to_string(j);
  std::string row = "1,3.0,1.0,3.5";
  for (int j = 1; j <= 25; ++j) row += "," + std::to_string(j * 0.1);
  write_text(dir / "ihdp.csv", header + "\n" + row + "\n" + "0" + row.substr(1) + "\n");
  const auto data = load_csv(dir / "ihdp.csv");
  EXPECT_EQ(data.dim(), 25u);
  ASSERT_TRUE(data.has_truth());
  EXPECT_DOUBLE_EQ(data.truth().ate(), 2.5);
}

TEST(LoadCsv, SchemaSelectsColumns) {
  TempDir dir;
  write_text(dir / "a.csv", "id,treat,rev,age,spend\n1,0,1.0,30,5\n2,1,2.0,40,6\n");
  ColumnSchema schema;
  schema.treatment = "treat";
  schema.outcome = "rev";
  schema.covariates = {"spend"};
  const auto data = load_csv(dir / "a.csv", schema);
  EXPECT_EQ(data.dim(), 1u);
  EXPECT_DOUBLE_EQ(data.row(1)[0], 6.0);
}

TEST(LoadCsv, RoundTripIsBitExact) {
  TempDir dir;
  const auto data = generate_ihdp_like(60, 4, 9);
  write_csv(data, dir / "d.csv");
  const auto back = load_csv(dir / "d.csv");
  ASSERT_EQ(back.size(), data.size());
  ASSERT_TRUE(back.has_truth());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back.outcome(i), data.outcome(i));
    EXPECT_EQ(back.treatment(i), data.treatment(i));
    EXPECT_EQ(back.truth().mu0[i], data.truth().mu0[i]);
    EXPECT_EQ((*back.truth().true_propensity)[i], (*data.truth().true_propensity)[i]);
    for (std::size_t j = 0; j < data.dim(); ++j) EXPECT_EQ(back.row(i)[j], data.row(i)[j]);
  }
}

TEST(LoadCsv, TruthSideFileRoundTrip) {
  TempDir dir;
  const auto data = generate_op_like(50, 2);
  write_csv(data, dir / "d.csv", false);
  write_truth_csv(data, dir / "truth.csv");
  const auto plain = load_csv(dir / "d.csv");
  EXPECT_FALSE(plain.has_truth());
  const auto joined = attach_truth_csv(plain, dir / "truth.csv");
  EXPECT_EQ(joined.truth().ate(), data.truth().ate());
}

TEST(KeyValue, ParsesCommentsAndRejectsGarbage) {
  const auto kv = parse_key_value("# generator\nn = 100\n seed=4  # trailing\n\n");
  EXPECT_EQ(kv.at("n"), "100");
  EXPECT_EQ(kv.at("seed"), "4");
  EXPECT_THROW(parse_key_value("just words\n"), ParseError);
}

TEST(KeyValue, GeneratorConfigKeys) {
  GeneratorSpec spec;
  apply_generator_config(parse_key_value("n = 120\nd = 4\nseed = 3\nnoise_scale = 0\n"
                                         "treated_fraction_target = 0.3\npropensity_clip = 0.02\n"),
                         spec);
  EXPECT_EQ(spec.n, 120u);
  EXPECT_EQ(spec.d, 4u);
  const auto data = spec.generate();
  EXPECT_EQ(data.size(), 120u);
  for (double p : *data.truth().true_propensity) {
    EXPECT_GE(p, 0.02);
    EXPECT_LE(p, 0.98);
  }
  EXPECT_THROW(apply_generator_config({{"n", "ten"}}, spec), ParseError);
}

// ---- generators ---------------------------------------------------------------

TEST(GenerateIhdpLike, PaperShapeAndImbalance) {
  const auto data = generate_ihdp_like(747, 25, 0);
  EXPECT_EQ(data.size(), 747u);
  EXPECT_EQ(data.dim(), 25u);
  const double frac = static_cast<double>(data.treated_count()) / 747.0;
  EXPECT_GE(frac, 0.13);
  EXPECT_LE(frac, 0.25);
}

TEST(GenerateIhdpLike, ZeroNoiseGivesFactualOutcome) {
  DgpConfig cfg;
  cfg.noise_scale = 0.0;
  const auto data = generate_ihdp_like(200, 5, 3, cfg);
  const auto& g = data.truth();
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(data.outcome(i), data.treatment(i) == 1 ? g.mu1[i] : g.mu0[i]);
  }
}

TEST(GenerateIhdpLike, AteIsMeanContrastAndPropensityClipped) {
  DgpConfig cfg;
  cfg.propensity_clip = 0.05;
  const auto data = generate_ihdp_like(500, 6, 1, cfg);
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) s += data.truth().mu1[i] - data.truth().mu0[i];
  EXPECT_DOUBLE_EQ(data.truth().ate(), s / 500.0);
  for (double p : *data.truth().true_propensity) {
    EXPECT_GE(p, 0.05);
    EXPECT_LE(p, 0.95);
  }
}

TEST(GenerateIhdpLike, ConfoundedAssignment) {
  // Treated and control covariate means differ on at least one coordinate.
  const auto data = generate_ihdp_like(5000, 5, 2);
  double max_gap = 0.0;
  for (std::size_t j = 0; j < 5; ++j) {
    double s1 = 0.0, s0 = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) (data.treatment(i) ? s1 : s0) += data.row(i)[j];
    const double n1 = static_cast<double>(data.treated_count());
    max_gap = std::max(max_gap, std::abs(s1 / n1 - s0 / (5000.0 - n1)));
  }
  EXPECT_GT(max_gap, 0.2);
}

TEST(GenerateIhdpLike, DeterministicAndValidated) {
  const auto a = generate_ihdp_like(50, 3, 17);
  const auto b = generate_ihdp_like(50, 3, 17);
  EXPECT_EQ(a.outcomes(), b.outcomes());
  EXPECT_EQ(a.treatments(), b.treatments());
  EXPECT_THROW(generate_ihdp_like(19, 3, 0), InvalidArgument);
  EXPECT_THROW(generate_ihdp_like(50, 1, 0), InvalidArgument);
  DgpConfig degenerate;
  degenerate.treated_fraction_target = 1.0;
  EXPECT_THROW(generate_ihdp_like(50, 3, 0, degenerate), InvalidArgument);
  degenerate.treated_fraction_target = 0.0;
  EXPECT_THROW(generate_ihdp_like(50, 3, 0, degenerate), InvalidArgument);
}

TEST(GenerateOpLike, ShapeSignAndUplift) {
  const auto data = generate_op_like(10000, 1);
  EXPECT_EQ(data.dim(), 11u);
  EXPECT_EQ(data.size(), 10000u);
  std::size_t positive = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_GE(data.outcome(i), 0.0);
    positive += data.truth().mu1[i] > data.truth().mu0[i];
  }
  EXPECT_GT(data.truth().ate(), 0.0);
  EXPECT_NEAR(static_cast<double>(positive) / 10000.0, 0.8, 0.03);
  EXPECT_THROW(generate_op_like(10, 1), InvalidArgument);
}

// ---- splits -------------------------------------------------------------------

TEST(SplitFolds, BalancedCoveringDeterministic) {
  const auto f = split_folds(10, 2, 7);
  EXPECT_EQ(f.sizes(), (std::vector<std::size_t>{5, 5}));
  const auto g = split_folds(747, 5, 0);
  for (std::size_t s : g.sizes()) EXPECT_TRUE(s == 149 || s == 150);
  std::size_t total = 0;
  for (std::size_t s : g.sizes()) total += s;
  EXPECT_EQ(total, 747u);
  EXPECT_EQ(split_folds(747, 5, 0).fold_of_unit, g.fold_of_unit);
  EXPECT_NE(split_folds(747, 5, 1).fold_of_unit, g.fold_of_unit);
  for (int k = 0; k < 5; ++k) {
    const auto m = g.members(k);
    const auto c = g.complement(k);
    EXPECT_EQ(m.size() + c.size(), 747u);
    std::set<std::size_t> all(m.begin(), m.end());
    for (std::size_t i : c) EXPECT_FALSE(all.count(i));
  }
  EXPECT_THROW(split_folds(10, 1, 0), InvalidArgument);
  EXPECT_THROW(split_folds(3, 4, 0), InvalidArgument);
}

TEST(TrainTestSplit, SizesAndPartition) {
  const auto s = train_test_indices(10000, 0.2, 3);
  EXPECT_EQ(s.train.size(), 8000u);
  EXPECT_EQ(s.test.size(), 2000u);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  for (std::size_t i : s.test) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), 10000u);
  const auto half = train_test_indices(10, 0.5, 0);
  EXPECT_EQ(half.train.size(), 5u);
  EXPECT_EQ(half.test.size(), 5u);
  EXPECT_EQ(train_test_indices(10000, 0.2, 3).test, s.test);
  EXPECT_THROW(train_test_indices(10, 0.01, 0), InvalidArgument);
  EXPECT_THROW(train_test_indices(10, 1.0, 0), InvalidArgument);
}
