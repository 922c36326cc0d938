#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "stochint/basis.hpp"
#include "stochint/generators.hpp"

using namespace stochint;

TEST(Basis, RawPrependsIntercept) {
  const auto b = BasisExpansion::raw(2);
  EXPECT_EQ(b.output_dim(), 3u);
  EXPECT_EQ(b.expand(std::vector<double>{1.0, 2.0}), (std::vector<double>{1.0, 1.0, 2.0}));
}

TEST(Basis, Polynomial2HasSquaresAndCrossTerm) {
  const auto b = BasisExpansion::polynomial2(2);
  EXPECT_EQ(b.output_dim(), 6u);
  const double a = 1.5, c = -2.0;
  EXPECT_EQ(b.expand(std::vector<double>{a, c}),
            (std::vector<double>{1.0, a, c, a * a, a * c, c * c}));
  EXPECT_EQ(BasisExpansion::polynomial2(25).output_dim(), 1u + 25u + 325u);
}

TEST(Basis, RbfAtCenterIsOne) {
  const std::vector<double> x = {0.3, -1.2};
  const auto b = BasisExpansion::rbf(2, {x, {5.0, 5.0}}, {1.0, 2.0});
  const auto g = b.expand(x);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_EQ(g[3], 1.0);
  const double d2 = (5.0 - 0.3) * (5.0 - 0.3) + (5.0 + 1.2) * (5.0 + 1.2);
  EXPECT_NEAR(g[4], std::exp(-d2 / 8.0), 1e-15);
}

TEST(Basis, StandardizationAppliesBeforeProducts) {
  auto b = BasisExpansion::polynomial2(1);
  b.set_standardization({2.0}, {4.0});
  const auto g = b.expand(std::vector<double>{10.0});
  EXPECT_EQ(g, (std::vector<double>{1.0, 2.0, 4.0}));
  EXPECT_THROW(b.set_standardization({0.0}, {0.0}), InvalidArgument);
}

TEST(Basis, RejectsBadInput) {
  const auto b = BasisExpansion::raw(2);
  EXPECT_THROW(b.expand(std::vector<double>{1.0}), InvalidArgument);
  EXPECT_THROW(b.expand(std::vector<double>{1.0, NAN}), InvalidArgument);
  EXPECT_THROW(b.expand(std::vector<double>{INFINITY, 0.0}), InvalidArgument);
  EXPECT_THROW(BasisExpansion::rbf(2, {{0.0}}, {1.0}), InvalidArgument);
  EXPECT_THROW(BasisExpansion::rbf(1, {{0.0}}, {0.0}), InvalidArgument);
  EXPECT_THROW(basis_kind_from_string("cubic"), InvalidArgument);
}

TEST(Basis, MadeFromDataIsFiniteAndDeterministic) {
  const auto data = generate_ihdp_like(300, 4, 1);
  for (auto kind : {BasisKind::raw, BasisKind::polynomial2, BasisKind::rbf}) {
    BasisOptions opt;
    opt.kind = kind;
    const auto a = make_basis(data.covariates(), opt, 3);
    const auto b = make_basis(data.covariates(), opt, 3);
    const Matrix ga = a.design(data.covariates());
    EXPECT_EQ(static_cast<std::size_t>(ga.cols()), a.output_dim());
    EXPECT_TRUE(ga.allFinite());
    EXPECT_EQ(ga, b.design(data.covariates()));
    EXPECT_EQ(basis_kind_from_string(to_string(kind)), kind);
  }
}

TEST(Basis, StandardizedColumnsHaveZeroMeanUnitVariance) {
  const auto data = generate_op_like(500, 4);
  BasisOptions opt;
  opt.kind = BasisKind::raw;
  const Matrix g = make_basis(data.covariates(), opt, 0).design(data.covariates());
  for (Eigen::Index j = 1; j < g.cols(); ++j) {
    const double m = g.col(j).mean();
    const double v = (g.col(j).array() - m).square().mean();
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v, 1.0, 1e-12);
  }
}
