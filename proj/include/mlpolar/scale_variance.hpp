#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mlpolar/geo_hierarchy.hpp"

namespace mlpolar {

/// Per-scale breakdown of the variance of unit values over a RegionTree.
///
/// With N tree levels there are N+1 terms:
///   added[0]   = E(Var(z | W_1))                 (within the finest regions)
///   added[k]   = E(Var(E(z | W_k) | W_{k+1}))    for 0 < k < N
///   added[N]   = Var(E(z | W_N))                  (between the coarsest regions)
/// and total = sum of added.
struct ScaleDecomposition {
  std::vector<double> added;
  /// Number of groups resolved by each term: the unit count for added[0],
  /// otherwise the number of regions at scale k.
  std::vector<std::size_t> region_counts;
  double total = 0.0;
  /// p(1-p) when the terms have been divided by it.
  std::optional<double> normalizer;

  std::size_t num_levels() const { return added.empty() ? 0 : added.size() - 1; }
};

/// Matrix analogue of ScaleDecomposition for d-vector values.
struct CovDecomposition {
  std::vector<Eigen::MatrixXd> added;
  std::vector<std::size_t> region_counts;
  Eigen::MatrixXd total;

  std::size_t num_levels() const { return added.empty() ? 0 : added.size() - 1; }
};

struct DecomposeOptions {
  /// Weight units by population (default) or count every unit once.
  bool population_weighted = true;
  /// Treat each unit as a population of binary voters with share `value` in [0,1]:
  /// adds the within-unit variance p(1-p) to added[0]. Pair with
  /// RegionTree::with_unit_level() to keep that term separate.
  bool bernoulli_within_unit = false;
};

ScaleDecomposition decompose(const RegionTree& tree, std::span<const GeoUnit> units,
                             const DecomposeOptions& options = {});

CovDecomposition decompose_cov(const RegionTree& tree, std::span<const GeoUnit> units,
                               const DecomposeOptions& options = {});

/// Least-squares slope of log added[k] against log of the mean group size it
/// resolves (units / region_counts[k]), over terms k >= 1 that resolve at least
/// `min_groups` groups. Randomly grouped independent values give -1.
double group_size_slope(const ScaleDecomposition& dec, std::size_t min_groups = 8);

/// E(Var(z | W_n)): the sum of added terms below scale n. n ranges over 0..N+1,
/// where scale 0 is the individual unit and scale N+1 the whole population.
double cumulative_within(const ScaleDecomposition& dec, std::size_t n);

/// Var(E(z | W_n)) = total - cumulative_within(dec, n).
double cumulative_above(const ScaleDecomposition& dec, std::size_t n);

/// Divide every term by p(1-p), p the winning vote share in (0,1).
ScaleDecomposition normalized(const ScaleDecomposition& dec, double p);

/// Weighted mean of (x - y)^2 over unit values. Minimized at the weighted mean.
double resolution_cost(std::span<const GeoUnit> units, double outcome, bool population_weighted = true);

/// Weighted mean and population variance of scalar unit values (two pass).
struct WeightedMoments {
  double mean = 0.0;
  double variance = 0.0;
  double weight = 0.0;
};
WeightedMoments weighted_moments(std::span<const GeoUnit> units, bool population_weighted = true);

}  // namespace mlpolar
