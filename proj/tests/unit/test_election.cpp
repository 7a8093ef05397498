#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "mlpolar/election.hpp"
#include "mlpolar/errors.hpp"
#include "oracles.hpp"

using namespace mlpolar;

namespace {

std::vector<double> draw_mixture(const Mixture2& m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x;
  for (std::size_t i = 0; i < n; ++i) x.push_back((u(rng) < m.pi_a ? m.mu_a : m.mu_b) + m.sigma * g(rng));
  return x;
}

double sum_representation(const ElectionModel& model, const WeightedOpinions& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += representation(model, f, i);
  return s;
}

}  // namespace

TEST(WeightedOpinions, NormalizesAndValidates) {
  WeightedOpinions f({0.0, 1.0, 2.0}, {1.0, 1.0, 2.0});
  EXPECT_DOUBLE_EQ(f.weights()[2], 0.5);
  EXPECT_DOUBLE_EQ(f.mean(), 1.25);
  EXPECT_THROW(WeightedOpinions({0.0, 1.0}, {1.0, -1.0}), InputError);
  EXPECT_THROW(WeightedOpinions({0.0, 1.0}, {0.0, 0.0}), InputError);
  EXPECT_THROW(WeightedOpinions({0.0, NAN}), InputError);
  EXPECT_THROW(WeightedOpinions(std::vector<double>{}), InputError);
  EXPECT_THROW(WeightedOpinions({0.0}, {1.0, 2.0}), InputError);
}

TEST(Mixture2, MomentsAndValidation) {
  const auto m = Mixture2::make(1.0, 3.0, 2.0, -2.0, 0.5);
  EXPECT_DOUBLE_EQ(m.pi_a, 0.25);
  EXPECT_DOUBLE_EQ(m.mean(), 0.25 * 2 - 0.75 * 2);
  EXPECT_NEAR(m.variance(), 0.25 + 0.25 * 0.75 * 16, 1e-14);
  EXPECT_NEAR(Mixture2::symmetric(1.0, 0.3).cdf(0.0), 0.5, 1e-15);
  EXPECT_THROW(Mixture2::make(-0.1, 1.1, 1, -1, 1), InputError);
  EXPECT_THROW(Mixture2::make(0.5, 0.5, 1, -1, -1), InputError);
}

TEST(Elect, MeanAndMedian) {
  WeightedOpinions f({4.0, 1.0, 3.0, 2.0});
  EXPECT_DOUBLE_EQ(elect(ElectionModel::mean(), f), 2.5);
  EXPECT_DOUBLE_EQ(elect(ElectionModel::median(), f), 2.0);
  WeightedOpinions g({0.0, 10.0}, {3.0, 1.0});
  EXPECT_DOUBLE_EQ(elect(ElectionModel::median(), g), 0.0);
  const auto skew = Mixture2::make(0.3, 0.7, 2, -1, 0.5);
  EXPECT_NEAR(skew.cdf(elect(ElectionModel::median(), skew)), 0.5, 1e-10);
}

TEST(Elect, UtilityApproachesMeanForWideKernel) {
  const auto x = draw_mixture(Mixture2::symmetric(1.0, 0.5, 0.6), 200, 3);
  WeightedOpinions f(x);
  EXPECT_NEAR(elect(ElectionModel::utility(200.0), f), f.mean(), 1e-4);
}

TEST(Elect, UtilityIsTranslationEquivariant) {
  const auto x = draw_mixture(Mixture2::symmetric(0.8, 0.5, 0.55), 80, 4);
  auto shifted = x;
  for (auto& v : shifted) v += 3.25;
  const auto model = ElectionModel::utility(1.0);
  EXPECT_NEAR(elect(model, WeightedOpinions(shifted)), elect(model, WeightedOpinions(x)) + 3.25, 1e-9);
}

TEST(Elect, UtilityOutcomeIsStationaryPoint) {
  const auto x = draw_mixture(Mixture2::symmetric(1.0, 0.5, 0.6), 150, 5);
  WeightedOpinions f(x);
  const double a = 0.8;
  const double y = elect(ElectionModel::utility(a), f);
  double du = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = f.positions()[i] - y;
    du += f.weights()[i] * d * std::exp(-d * d / (2 * a * a));
  }
  EXPECT_NEAR(du, 0.0, 1e-13);
  for (double dy : {-1e-3, 1e-3, -0.1, 0.1}) {
    EXPECT_GE(expected_utility(f, a, y), expected_utility(f, a, y + dy));
  }
}

TEST(Elect, SymmetricMixtureBranchesMatchFixedPoint) {
  const double delta = 1.5, sigma = 0.5, a = 1.0;
  const auto mix = Mixture2::symmetric(delta, sigma);
  const double s2 = sigma * sigma + a * a;
  ASSERT_GT(polarization_j(mix, a), 1.0);
  const double y = oracle::symmetric_branch(delta, s2);
  const auto model = ElectionModel::utility(a);
  const auto branches = outcome_branches(model, mix);
  ASSERT_EQ(branches.size(), 2U);
  EXPECT_NEAR(branches[0].position, -y, 1e-9);
  EXPECT_NEAR(branches[1].position, y, 1e-9);
  // equal utilities: the smaller position wins
  EXPECT_NEAR(elect(model, mix), -y, 1e-9);
}

TEST(Elect, StableMixtureElectsMidpoint) {
  const auto mix = Mixture2::symmetric(0.6, 0.5);
  const auto model = ElectionModel::utility(1.0);
  ASSERT_LT(polarization_j(mix, 1.0), 1.0);
  EXPECT_NEAR(elect(model, mix), 0.0, 1e-9);
  EXPECT_EQ(outcome_branches(model, mix).size(), 1U);
}

TEST(Elect, TieGoesToSmallestPosition) {
  WeightedOpinions f({-3.0, 3.0});
  EXPECT_NEAR(elect(ElectionModel::utility(0.5), f), -3.0, 1e-6);
}

TEST(Elect, RejectsBadModel) {
  WeightedOpinions f({0.0, 1.0});
  EXPECT_THROW(elect(ElectionModel::utility(0.0), f), InputError);
  ElectionModel m = ElectionModel::utility(1.0);
  m.grid_points = 2;
  EXPECT_THROW(elect(m, f), InputError);
}

TEST(PolarizationJ, Formula) {
  const auto mix = Mixture2::make(0.5, 0.5, 2.0, -1.0, 0.5);
  EXPECT_DOUBLE_EQ(polarization_j(mix, 1.0), 9.0 / (4.0 * 1.25));
}

TEST(Representation, MeanElectionGivesWeights) {
  WeightedOpinions f({0.0, 1.0, 5.0}, {1.0, 2.0, 1.0});
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(representation(ElectionModel::mean(), f, i), f.weights()[i], 1e-9);
  }
}

TEST(Representation, SumsToOneForSmoothElections) {
  WeightedOpinions f(draw_mixture(Mixture2::symmetric(0.5, 0.5, 0.5), 100, 6));
  EXPECT_NEAR(sum_representation(ElectionModel::mean(), f), 1.0, 1e-9);
  EXPECT_NEAR(sum_representation(ElectionModel::utility(1.0), f), 1.0, 1e-6);
}

TEST(Representation, UtilityMatchesImplicitDerivative) {
  WeightedOpinions f(draw_mixture(Mixture2::symmetric(0.5, 0.5, 0.5), 60, 7));
  const double a = 1.0;
  const double y = elect(ElectionModel::utility(a), f);
  // r_i = -d2U/dy dx_i / U''(y)
  double upp = 0.0;
  std::vector<double> cross(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = f.positions()[i] - y;
    const double k = f.weights()[i] * std::exp(-d * d / (2 * a * a)) / (a * a);
    upp += k * (d * d / (a * a) - 1.0);
    cross[i] = k * (1.0 - d * d / (a * a));
  }
  for (std::size_t i = 0; i < f.size(); i += 7) {
    EXPECT_NEAR(representation(ElectionModel::utility(a), f, i), -cross[i] / upp, 1e-6);
  }
}

TEST(Representation, ShiftAcrossInstabilityIsNegative) {
  // Two blocs past the bifurcation; the right bloc barely outweighs the left.
  std::vector<double> x(21, 1.5);
  std::vector<double> w(21, 1.0);
  x.push_back(-1.5);
  w.push_back(20.5);
  WeightedOpinions f(x, w);
  const auto model = ElectionModel::utility(1.0);
  const double before = elect(model, f);
  EXPECT_GT(before, 1.0);
  const double r = finite_shift_representation(model, f, 0, 10.0);
  EXPECT_LT(r, 0.0);
  EXPECT_LT(elect(model, f.with_position(0, 11.5)), -1.0);
}

TEST(Instability, StepFunctionIsUnstable) {
  const auto rep = detect_instability([](double e) { return e < 0.0123 ? -1.0 : 1.0; });
  EXPECT_TRUE(rep.unstable);
  EXPECT_NEAR(rep.jump, 2.0, 1e-12);
  EXPECT_LE(rep.jump_at, 0.0123);
}

TEST(Instability, SmoothFunctionIsStable) {
  const auto rep = detect_instability([](double e) { return 3.0 * e + std::sin(e); });
  EXPECT_FALSE(rep.unstable);
  for (std::size_t k = 1; k < rep.jumps.size(); ++k) EXPECT_LT(rep.jumps[k], rep.jumps[k - 1]);
}

TEST(Instability, MixtureFamilyAcrossThreshold) {
  const auto model = ElectionModel::utility(1.0);
  auto family = [](double delta) {
    return [delta](double e) { return Mixture2::make(0.5 + e, 0.5 - e, delta, -delta, 0.5); };
  };
  InstabilityOptions opts;
  opts.max_halvings = 6;
  const auto low = detect_instability(model, family(std::sqrt(0.5 * 1.25)), opts);
  const auto high = detect_instability(model, family(std::sqrt(2.0 * 1.25)), opts);
  EXPECT_FALSE(low.unstable);
  EXPECT_LT(low.jump, 1e-3);
  EXPECT_TRUE(high.unstable);
  EXPECT_GT(high.jump, 1.0);
}

TEST(StabilitySweep, OnsetNearOne) {
  InstabilityOptions opts;
  opts.max_halvings = 4;
  const auto rows = stability_sweep(0.5, 1.0, 0.5, 1.5, 20, opts);
  ASSERT_EQ(rows.size(), 21U);
  EXPECT_NEAR(bifurcation_onset(rows), 1.0, 0.1);
  for (const auto& r : rows) {
    if (r.j < 0.95) EXPECT_FALSE(r.unstable) << r.j;
    if (r.j > 1.1) EXPECT_TRUE(r.unstable) << r.j;
  }
}
