#include <gtest/gtest.h>

#include <random>

#include "mlpolar/errors.hpp"
#include "mlpolar/geo_hierarchy.hpp"
#include "mlpolar/scale_variance.hpp"
#include "oracles.hpp"

using namespace mlpolar;

namespace {

struct Instance {
  std::vector<GeoUnit> units;
  RegionTree tree;
  std::vector<double> x;
  std::vector<double> w;
  std::vector<std::vector<std::uint32_t>> levels;
};

Instance random_instance(std::size_t n, int depth, std::uint64_t seed, bool kd = true) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instance in;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(rng);
    const double w = 0.1 + 10.0 * u(rng);
    in.units.push_back({"u" + std::to_string(i), {u(rng), u(rng)}, w, {x * x}});
    in.x.push_back(x * x);
    in.w.push_back(w);
  }
  in.tree = kd ? build_kdtree_hierarchy(in.units, depth) : build_random_hierarchy(in.units, depth, seed);
  for (std::size_t k = 0; k < in.tree.num_levels(); ++k) {
    in.levels.emplace_back(in.tree.level(k).begin(), in.tree.level(k).end());
  }
  return in;
}

}  // namespace

TEST(Decompose, TermsSumToDirectVariance) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto in = random_instance(50 + 37 * s, 1 + static_cast<int>(s % 5), s);
    const auto dec = decompose(in.tree, in.units);
    double sum = 0.0;
    for (double a : dec.added) sum += a;
    const double direct = oracle::weighted_variance(in.x, in.w);
    EXPECT_NEAR(sum, direct, 1e-12 * direct);
    EXPECT_NEAR(dec.total, direct, 1e-12 * direct);
  }
}

TEST(Decompose, EachTermMatchesTelescopingOracle) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto in = random_instance(400, 4, 100 + s, s % 2 == 0);
    const auto dec = decompose(in.tree, in.units);
    const auto want = oracle::telescoped_added(in.levels, in.x, in.w);
    ASSERT_EQ(dec.added.size(), want.size());
    for (std::size_t k = 0; k < want.size(); ++k) EXPECT_NEAR(dec.added[k], want[k], 1e-12) << "term " << k;
  }
}

TEST(Decompose, TermsAreNonnegativeAndCountsReported) {
  const auto in = random_instance(256, 3, 9);
  const auto dec = decompose(in.tree, in.units);
  for (double a : dec.added) EXPECT_GE(a, 0.0);
  EXPECT_EQ(dec.region_counts, (std::vector<std::size_t>{256, 8, 4, 2}));
}

TEST(Decompose, ConstantValuesGiveZeros) {
  auto in = random_instance(64, 3, 1);
  for (auto& u : in.units) u.value = {0.4};
  const auto dec = decompose(in.tree, in.units);
  for (double a : dec.added) EXPECT_EQ(a, 0.0);
  EXPECT_EQ(dec.total, 0.0);
}

TEST(Decompose, UnweightedIgnoresPopulation) {
  auto in = random_instance(128, 3, 2);
  const auto dec = decompose(in.tree, in.units, {false, false});
  EXPECT_NEAR(dec.total, oracle::weighted_variance(in.x, std::vector<double>(in.x.size(), 1.0)), 1e-12);
}

TEST(Decompose, BernoulliTotalIsBinaryVariance) {
  auto in = random_instance(200, 3, 4);
  const auto tree = in.tree.with_unit_level();
  const auto dec = decompose(tree, in.units, {true, true});
  // Individuals vote 0/1, so the overall variance is m(1-m).
  long double sw = 0, sp = 0, within = 0;
  for (std::size_t i = 0; i < in.x.size(); ++i) {
    sw += in.w[i];
    sp += in.w[i] * in.x[i];
    within += in.w[i] * in.x[i] * (1 - in.x[i]);
  }
  const double m = static_cast<double>(sp / sw);
  EXPECT_NEAR(dec.total, m * (1 - m), 1e-12);
  EXPECT_NEAR(dec.added[0], static_cast<double>(within / sw), 1e-12);
  EXPECT_EQ(dec.num_levels(), 4U);
}

TEST(Decompose, BernoulliRejectsSharesOutsideUnitInterval) {
  auto in = random_instance(16, 2, 4);
  in.units[0].value = {1.5};
  EXPECT_THROW(decompose(in.tree, in.units, {true, true}), InputError);
}

TEST(Decompose, UnitCountMismatchThrows) {
  const auto in = random_instance(16, 2, 4);
  std::vector<GeoUnit> fewer(in.units.begin(), in.units.end() - 1);
  EXPECT_THROW(decompose(in.tree, fewer), InputError);
}

TEST(DecomposeCov, DiagonalMatchesScalarAndTotalMatchesCovariance) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<GeoUnit> units;
  for (int i = 0; i < 300; ++i) {
    const double a = g(rng), b = g(rng);
    units.push_back({"u" + std::to_string(i), {g(rng), g(rng)}, 1.0 + std::abs(g(rng)), {a, 0.5 * a + b, b * b}});
  }
  const auto tree = build_kdtree_hierarchy(units, 4);
  const auto cov = decompose_cov(tree, units);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<GeoUnit> scalar = units;
    for (auto& u : scalar) u.value = {u.value[c]};
    const auto dec = decompose(tree, scalar);
    for (std::size_t k = 0; k < dec.added.size(); ++k) {
      EXPECT_EQ(cov.added[k](static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)), dec.added[k]);
    }
  }
  Eigen::MatrixXd x(300, 3);
  Eigen::VectorXd w(300);
  for (int i = 0; i < 300; ++i) {
    for (int c = 0; c < 3; ++c) x(i, c) = units[static_cast<std::size_t>(i)].value[static_cast<std::size_t>(c)];
    w[i] = units[static_cast<std::size_t>(i)].population;
  }
  w /= w.sum();
  const Eigen::RowVectorXd mean = w.transpose() * x;
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd direct = centered.transpose() * w.asDiagonal() * centered;
  EXPECT_LT((cov.total - direct).norm(), 1e-12);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(3, 3);
  for (const auto& a : cov.added) {
    sum += a;
    EXPECT_LT((a - a.transpose()).norm(), 1e-15);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().minCoeff(), -1e-12);
  }
  EXPECT_LT((sum - direct).norm(), 1e-12);
}

TEST(Cumulative, WithinAndAboveBracketTotal) {
  const auto in = random_instance(128, 3, 6);
  const auto dec = decompose(in.tree, in.units);
  EXPECT_EQ(cumulative_within(dec, 0), 0.0);
  EXPECT_NEAR(cumulative_within(dec, 4), dec.total, 1e-15);
  EXPECT_NEAR(cumulative_above(dec, 0), dec.total, 1e-15);
  double prev = 0.0;
  for (std::size_t n = 0; n <= 4; ++n) {
    const double w = cumulative_within(dec, n);
    EXPECT_GE(w, prev - 1e-15);
    EXPECT_NEAR(w + cumulative_above(dec, n), dec.total, 1e-15);
    prev = w;
  }
  // E(Var(z | W_1)) directly
  EXPECT_NEAR(cumulative_within(dec, 1), oracle::weighted_variance(in.x, in.w) -
                                             oracle::between_variance(in.levels[0], in.x, in.w),
              1e-12);
  EXPECT_THROW(cumulative_within(dec, 5), InputError);
}

TEST(Normalized, DividesByBinaryVariance) {
  const auto in = random_instance(64, 2, 3);
  const auto dec = decompose(in.tree, in.units);
  const auto n = normalized(dec, 0.4);
  ASSERT_TRUE(n.normalizer.has_value());
  EXPECT_DOUBLE_EQ(*n.normalizer, 0.24);
  for (std::size_t k = 0; k < dec.added.size(); ++k) EXPECT_DOUBLE_EQ(n.added[k], dec.added[k] / 0.24);
  EXPECT_NEAR(n.total, dec.total / 0.24, 1e-12);
  EXPECT_THROW(normalized(dec, 0.0), InputError);
  EXPECT_THROW(normalized(dec, 1.0), InputError);
}

TEST(ResolutionCost, MeanMinimizesSquaredError) {
  const auto in = random_instance(100, 2, 12);
  const auto m = weighted_moments(in.units);
  EXPECT_NEAR(resolution_cost(in.units, m.mean), m.variance, 1e-14);
  for (double y : {-1.0, 0.0, 0.2, m.mean + 1e-3, 0.9}) {
    EXPECT_NEAR(resolution_cost(in.units, y), m.variance + (y - m.mean) * (y - m.mean), 1e-12);
    EXPECT_GE(resolution_cost(in.units, y), resolution_cost(in.units, m.mean));
  }
}

TEST(GroupSizeSlope, IndependentValuesGiveMinusOne) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<GeoUnit> units;
  for (int i = 0; i < (1 << 15); ++i) units.push_back({"u" + std::to_string(i), {0, 0}, 1.0, {g(rng)}});
  const auto tree = build_random_hierarchy(units, 13, 5);
  const auto dec = decompose(tree, units);
  EXPECT_NEAR(group_size_slope(dec), -1.0, 0.15);
}

TEST(GroupSizeSlope, ConstantValuesAreDegenerate) {
  std::vector<GeoUnit> units;
  for (int i = 0; i < 256; ++i) units.push_back({"u" + std::to_string(i), {0, 0}, 1.0, {0.5}});
  const auto dec = decompose(build_random_hierarchy(units, 6, 1), units);
  EXPECT_THROW(group_size_slope(dec), DegenerateError);
}
