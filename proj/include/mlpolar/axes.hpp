#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mlpolar {

/// Weighted points in R^d, one point per row. Weights are normalized to sum to 1.
class OpinionCloud {
 public:
  explicit OpinionCloud(Eigen::MatrixXd points);
  OpinionCloud(Eigen::MatrixXd points, Eigen::VectorXd weights);

  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dimension() const { return points_.cols(); }
  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  Eigen::VectorXd mean() const;
  Eigen::MatrixXd covariance() const;

  /// Copy with point i replaced.
  OpinionCloud with_point(Eigen::Index i, const Eigen::VectorXd& p) const;

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd weights_;
};

enum class AxisSource { kTwoMeans, kPca, kCandidatePair, kCoupled };

/// Unit direction in opinion space.
struct ElectionAxis {
  Eigen::VectorXd direction;
  AxisSource source = AxisSource::kCandidatePair;

  /// Normalizes `v`; throws DegenerateError for a zero vector.
  static ElectionAxis from(const Eigen::VectorXd& v, AxisSource source);
};

/// Flip `v` so that its first component with |v_i| > 1e-12 is positive.
Eigen::VectorXd canonical_sign(Eigen::VectorXd v);

/// Angle in [0, pi] between two vectors.
double angle_between(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

struct TwoMeansOptions {
  int restarts = 16;
  std::uint64_t seed = 0;
  int max_iterations = 500;
};

struct TwoMeansResult {
  ElectionAxis axis;
  /// 0 or 1 per point; cluster 1 lies on the positive side of the axis.
  std::vector<int> labels;
  Eigen::VectorXd centroid0;
  Eigen::VectorXd centroid1;
  /// sum_i w_i |x_i - centroid(x_i)|^2 with normalized weights.
  double objective = 0.0;
};

/// Weighted 2-means by Lloyd iterations from k-means++ seeds; the best of
/// `restarts` runs wins (earliest on ties). Axis = normalized centroid difference.
TwoMeansResult two_means_axis(const OpinionCloud& cloud, const TwoMeansOptions& options = {});

/// Weighted 2-means objective of a given labelling.
double two_means_objective(const OpinionCloud& cloud, std::span<const int> labels);

/// Unit top eigenvector of the weighted covariance, sign-canonical. Throws
/// DegenerateError when the top eigenvalue gap is below 1e-9 * trace.
ElectionAxis pca_axis(const OpinionCloud& cloud);

/// Pairwise coupling:
///   e_a' ∝ w_a e_a + (1 - w_a) e_b,   e_b' ∝ w_b e_b + (1 - w_b) e_a.
std::pair<ElectionAxis, ElectionAxis> couple_axes(const ElectionAxis& a, const ElectionAxis& b, double w_a,
                                                  double w_b);

/// Elections grouped by scale, coupled through per-scale interaction matrices.
///
/// `coupling[s](i, j)` is the pull of election j (which must sit at scale s) on
/// election i. Entries are nonnegative, the diagonal is zero, and each row sums
/// to 1 over the scale's peers, or is all zero when i has no peers there.
struct InteractionSystem {
  std::vector<ElectionAxis> axes;
  std::vector<std::size_t> scale_of;
  std::vector<Eigen::MatrixXd> coupling;
  double w = 1.0;

  void validate() const;
};

/// e_i' = w e_i + (1 - w) sum_s sum_j coupling[s](i, j) e_j, normalized.
std::vector<ElectionAxis> multilevel_couple(const InteractionSystem& system);

/// 1 - |mean of (cos t_i, sin t_i)|, t_i = arccos(e_i . reference).
double circular_dispersion(std::span<const ElectionAxis> axes, const ElectionAxis& reference);

/// The literal printed variant 1 - sqrt(sum cos^2 + sum sin^2) / n, which is
/// always 1 - 1/sqrt(n). Kept for comparison only.
double circular_dispersion_printed(std::span<const ElectionAxis> axes, const ElectionAxis& reference);

/// Positions of the two candidates in one election.
struct CandidatePair {
  Eigen::VectorXd d;
  Eigen::VectorXd r;

  ElectionAxis axis() const { return ElectionAxis::from(d - r, AxisSource::kCandidatePair); }
  double separation() const { return (d - r).norm(); }
};

enum class TieMode { kAllConnected, kWithinParty };

/// Candidate positions after social ties of strength m. `salience` weights the
/// elections (nonnegative, sums to 1).
///   all-connected: every candidate moves toward xbar = sum_i p_i (D_i + R_i)/2;
///   within-party:  D_i toward sum p_i D_i, R_i toward sum p_i R_i.
std::vector<CandidatePair> partisan_transform(std::span<const CandidatePair> pairs, TieMode mode, double m,
                                              std::span<const double> salience);

/// r^2 / n: per-axis variance of opinions spread uniformly on a sphere of radius r in R^n.
double sphere_axis_variance(double r, int n);

/// Monte Carlo per-axis sample variances for `count` points drawn uniformly on
/// the radius-r sphere in R^n.
Eigen::VectorXd sample_sphere_axis_variances(double r, int n, std::size_t count, std::uint64_t seed);

}  // namespace mlpolar
