#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mlpolar {

/// A finite electorate: positions with weights normalized to sum to 1.
class WeightedOpinions {
 public:
  /// Equal weights.
  explicit WeightedOpinions(std::vector<double> positions);
  /// Weights must be nonnegative with positive sum; they are normalized here.
  WeightedOpinions(std::vector<double> positions, std::vector<double> weights);

  std::size_t size() const { return positions_.size(); }
  std::span<const double> positions() const { return positions_; }
  std::span<const double> weights() const { return weights_; }
  double mean() const;
  double variance() const;

  /// Copy with voter i moved to `position`.
  WeightedOpinions with_position(std::size_t i, double position) const;

 private:
  std::vector<double> positions_;
  std::vector<double> weights_;
};

/// Two equal-variance normal subpopulations. Weights are normalized on construction.
struct Mixture2 {
  double pi_a = 0.5;
  double pi_b = 0.5;
  double mu_a = 1.0;
  double mu_b = -1.0;
  double sigma = 1.0;

  static Mixture2 make(double pi_a, double pi_b, double mu_a, double mu_b, double sigma);
  /// Symmetric mixture with modes at +delta and -delta.
  static Mixture2 symmetric(double delta, double sigma, double pi_a = 0.5);

  double mean() const;
  double variance() const;
  double cdf(double x) const;
};

enum class ElectionKind { kMean, kMedian, kUtilityArgmax };

/// Rule mapping an electorate to a winning position.
///
/// kUtilityArgmax returns argmax_y E_f[exp(-(y-x)^2 / 2a^2)], scanned on a grid of
/// `grid_points` over [min - 4a, max + 4a] (4s with s^2 = a^2 + sigma^2 for a
/// mixture), refined by `refine_factor` around each local maximum and polished
/// by safeguarded Newton steps on the derivative. Maxima whose utilities agree
/// to `tie_tolerance` (relative) are ties; the smallest y wins.
struct ElectionModel {
  ElectionKind kind = ElectionKind::kMean;
  double alienation = 1.0;
  std::size_t grid_points = 4096;
  std::size_t refine_factor = 16;
  double tie_tolerance = 1e-12;

  static ElectionModel mean() { return {ElectionKind::kMean}; }
  static ElectionModel median() { return {ElectionKind::kMedian}; }
  static ElectionModel utility(double a) { return {ElectionKind::kUtilityArgmax, a}; }
};

void validate(const ElectionModel& model);

double elect(const ElectionModel& model, const WeightedOpinions& electorate);
double elect(const ElectionModel& model, const Mixture2& electorate);

/// A local maximum of the expected utility.
struct Branch {
  double position = 0.0;
  double utility = 0.0;
};

/// All local maxima of the expected utility, ascending by position. For mean and
/// median elections this is the single outcome.
std::vector<Branch> outcome_branches(const ElectionModel& model, const WeightedOpinions& electorate);
std::vector<Branch> outcome_branches(const ElectionModel& model, const Mixture2& electorate);

/// Expected utility E_f[exp(-(y-x)^2/2a^2)] at y.
double expected_utility(const WeightedOpinions& electorate, double a, double y);
double expected_utility(const Mixture2& electorate, double a, double y);

/// Central finite difference [y(x_i + h) - y(x_i - h)] / 2h with the others fixed.
/// h <= 0 selects the default 1e-4 times the electorate standard deviation.
double representation(const ElectionModel& model, const WeightedOpinions& electorate, std::size_t i, double h = 0.0);

/// One-sided finite-shift representation [y(x_i + shift) - y(x_i)] / shift. Defined
/// where the derivative is not, e.g. across an instability.
double finite_shift_representation(const ElectionModel& model, const WeightedOpinions& electorate, std::size_t i,
                                   double shift);

/// Default finite-difference step: 1e-4 times the standard deviation (1e-4 if zero).
double default_step(const WeightedOpinions& electorate);

/// (mu_a - mu_b)^2 / (4 (sigma^2 + a^2)).
double polarization_j(const Mixture2& mix, double a);

struct InstabilityOptions {
  double eps_lo = -0.05;
  double eps_hi = 0.05;
  std::size_t initial_steps = 16;
  std::size_t max_halvings = 8;
  /// Relative change between successive jumps that counts as converged.
  double rel_tolerance = 1e-3;
  /// A jump that stays above this while halving marks the family unstable.
  double abs_floor = 1e-9;
};

struct InstabilityReport {
  /// sup |outcome(eps_{k+1}) - outcome(eps_k)| at the finest step reached.
  double jump = 0.0;
  /// Jump at each step size, coarse to fine.
  std::vector<double> jumps;
  /// Finest eps step evaluated.
  double resolution = 0.0;
  /// True when the jump stabilized at a nonzero value before max_halvings.
  bool converged = false;
  bool unstable = false;
  /// eps at the left end of the largest jump.
  double jump_at = 0.0;
};

/// Outcome jump of a one-parameter electorate family as the eps step halves.
/// Continuous families give jumps that shrink with the step; an instability
/// leaves a jump bounded away from zero.
InstabilityReport detect_instability(const std::function<double(double)>& outcome_of_eps,
                                     const InstabilityOptions& options = {});

/// Convenience overload: the family is a Mixture2 built from eps.
InstabilityReport detect_instability(const ElectionModel& model, const std::function<Mixture2(double)>& family,
                                     const InstabilityOptions& options = {});

/// One row of a polarization sweep of the symmetric mixture (mu_a = -mu_b).
struct StabilityRow {
  double j = 0.0;
  double delta = 0.0;
  double outcome = 0.0;
  double branch_low = 0.0;
  double branch_high = 0.0;
  double jump = 0.0;
  bool unstable = false;
};

/// Sweep J over [j_min, j_max] for the symmetric utility-argmax election with fixed
/// sigma and a; at each J, the jump is measured by perturbing pi_a around 1/2.
std::vector<StabilityRow> stability_sweep(double sigma, double a, double j_min, double j_max, std::size_t steps,
                                          const InstabilityOptions& options = {});

/// Smallest J on the sweep grid at which the symmetric outcome departs from the
/// midpoint by more than threshold * delta. Returns NaN when it never does.
double bifurcation_onset(std::span<const StabilityRow> rows, double threshold = 1e-3);

}  // namespace mlpolar
