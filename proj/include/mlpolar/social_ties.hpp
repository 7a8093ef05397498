#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mlpolar/election.hpp"
#include "mlpolar/geo_hierarchy.hpp"
#include "mlpolar/scale_variance.hpp"

namespace mlpolar {

/// Row-stochastic social connectivity: voter i's effective opinion is sum_j T_ij x_j.
///
/// Rows must sum to 1 within 1e-12. Negative entries are rejected unless
/// `allow_negative` is set (ties that push opinions apart).
class TieMatrix {
 public:
  explicit TieMatrix(Eigen::MatrixXd t, bool allow_negative = false);

  static TieMatrix identity(std::size_t n);
  /// T_ii = 1 - w, T_ij = w / (n - 1) for j != i.
  static TieMatrix uniform(std::size_t n, double w);
  /// Same uniform ties, but only among members of the same group.
  static TieMatrix block(std::span<const std::size_t> group_of, double w);

  std::size_t size() const { return static_cast<std::size_t>(t_.rows()); }
  const Eigen::MatrixXd& matrix() const { return t_; }
  double operator()(std::size_t i, std::size_t j) const {
    return t_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  Eigen::MatrixXd t_;
};

/// x' = T x.
Eigen::VectorXd effective_opinions(const TieMatrix& t, const Eigen::VectorXd& x);

/// Large-n fully connected transform x' = x(1-w) + w*mean(x) applied to each voter.
WeightedOpinions transform_fully_connected(const WeightedOpinions& f, double w);
/// Closed form on a mixture: means -> mean*w + mu(1-w), sigma -> sigma(1-w).
Mixture2 transform_fully_connected(const Mixture2& f, double w);

/// Ties only within each party: means fixed, sigma -> sigma(1-w).
Mixture2 transform_segregated(const Mixture2& f, double w);

/// Polarization after fully connected ties: (mu_a-mu_b)^2 (1-w)^2 / (4(sigma^2(1-w)^2 + a^2)).
double j_fully_connected(const Mixture2& mix, double a, double w);
/// Polarization after within-party ties: (mu_a-mu_b)^2 / (4(sigma^2(1-w)^2 + a^2)).
double j_segregated(const Mixture2& mix, double a, double w);

/// Tie strengths w_1..w_{N+1} by scale (w_{N+1} nationwide). beta = 1 - sum w.
class ScaleWeights {
 public:
  explicit ScaleWeights(std::vector<double> w);
  std::size_t size() const { return w_.size(); }
  std::span<const double> values() const { return w_; }
  double beta() const;
  /// 1 - sum_{i >= k} w_i with k 0-based.
  double retained_from(std::size_t k) const;

 private:
  std::vector<double> w_;
};

/// Each added term k scaled by (1 - sum_{i >= k} w_i)^2; total recomputed.
ScaleDecomposition multiscale_effective_variance(const ScaleDecomposition& dec, const ScaleWeights& w);

/// Explicit per-unit map x' = beta x + w_1 m_1(x) + ... + w_N m_N(x) + w_{N+1} m,
/// where m_k(x) is the weighted mean of the unit's scale-k region. Scalar values.
std::vector<GeoUnit> multiscale_effective_opinions(const RegionTree& tree, std::span<const GeoUnit> units,
                                                   const ScaleWeights& w, bool population_weighted = true);

/// Two-scale comparison of a state of identical bimodal counties (first) with a state
/// of unimodal counties centred at +delta and -delta (second).
struct TwoStateJ {
  double identical_counties = 0.0;
  double sorted_counties = 0.0;
};
TwoStateJ two_state_j(double delta, double sigma, double a, double w1, double w2);

/// r_i = sum_j T_ji r'_j, where r'_j is the representation of effective opinion j.
Eigen::VectorXd representation_under_ties(const TieMatrix& t, const Eigen::VectorXd& effective_rep);

/// Change of outcome per unit change of voter i's effective opinion: r_i / T_ii.
double social_representation(const TieMatrix& t, std::size_t i, double r_i);

}  // namespace mlpolar
