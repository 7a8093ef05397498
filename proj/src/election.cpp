#include "mlpolar/election.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mlpolar/errors.hpp"

namespace mlpolar {

WeightedOpinions::WeightedOpinions(std::vector<double> positions)
    : WeightedOpinions(positions, std::vector<double>(positions.size(), 1.0)) {}

WeightedOpinions::WeightedOpinions(std::vector<double> positions, std::vector<double> weights)
    : positions_(std::move(positions)), weights_(std::move(weights)) {
  if (positions_.empty()) detail::throw_input("empty electorate");
  if (positions_.size() != weights_.size()) detail::throw_input("positions and weights differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (!std::isfinite(positions_[i])) detail::throw_input("nonfinite opinion position");
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i])) detail::throw_input("weights must be finite and nonnegative");
    total += weights_[i];
  }
  if (!(total > 0.0)) detail::throw_input("weights sum to zero");
  for (auto& w : weights_) w /= total;
}

double WeightedOpinions::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i) m += weights_[i] * positions_[i];
  return m;
}

double WeightedOpinions::variance() const {
  const double m = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < size(); ++i) v += weights_[i] * (positions_[i] - m) * (positions_[i] - m);
  return v;
}

WeightedOpinions WeightedOpinions::with_position(std::size_t i, double position) const {
  if (i >= size()) detail::throw_input("voter index " + std::to_string(i) + " out of range");
  WeightedOpinions copy = *this;
  copy.positions_[i] = position;
  if (!std::isfinite(position)) detail::throw_input("nonfinite opinion position");
  return copy;
}

Mixture2 Mixture2::make(double pi_a, double pi_b, double mu_a, double mu_b, double sigma) {
  if (!(pi_a >= 0.0) || !(pi_b >= 0.0) || !(pi_a + pi_b > 0.0)) {
    detail::throw_input("mixture weights must be nonnegative with positive sum");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) detail::throw_input("mixture sigma must be positive");
  if (!std::isfinite(mu_a) || !std::isfinite(mu_b)) detail::throw_input("mixture means must be finite");
  const double s = pi_a + pi_b;
  return Mixture2{pi_a / s, pi_b / s, mu_a, mu_b, sigma};
}

Mixture2 Mixture2::symmetric(double delta, double sigma, double pi_a) {
  return make(pi_a, 1.0 - pi_a, delta, -delta, sigma);
}

double Mixture2::mean() const { return pi_a * mu_a + pi_b * mu_b; }

double Mixture2::variance() const {
  const double m = mean();
  return pi_a * (mu_a - m) * (mu_a - m) + pi_b * (mu_b - m) * (mu_b - m) + sigma * sigma;
}

double Mixture2::cdf(double x) const {
  const double k = 1.0 / (sigma * std::sqrt(2.0));
  return 0.5 * (pi_a * std::erfc(-(x - mu_a) * k) + pi_b * std::erfc(-(x - mu_b) * k));
}

void validate(const ElectionModel& model) {
  if (model.kind == ElectionKind::kUtilityArgmax) {
    if (!(model.alienation > 0.0) || !std::isfinite(model.alienation)) {
      detail::throw_input("alienation scale a must be positive");
    }
    if (model.grid_points < 3) detail::throw_input("argmax grid needs at least 3 points");
    if (model.refine_factor < 1) detail::throw_input("refine factor must be positive");
  }
}

namespace {

// U(y) = sum_j c_j exp(-(y - m_j)^2 / (2 s^2)), a common kernel width s.
struct GaussSum {
  std::vector<double> coef;
  std::vector<double> center;
  double s2 = 1.0;

  double value(double y) const {
    double u = 0.0;
    for (std::size_t j = 0; j < coef.size(); ++j) {
      const double d = y - center[j];
      u += coef[j] * std::exp(-d * d / (2.0 * s2));
    }
    return u;
  }
  // First and second derivatives.
  std::pair<double, double> derivs(double y) const {
    double g = 0.0;
    double h = 0.0;
    for (std::size_t j = 0; j < coef.size(); ++j) {
      const double d = center[j] - y;
      const double e = coef[j] * std::exp(-d * d / (2.0 * s2));
      g += e * d / s2;
      h += e * (d * d / (s2 * s2) - 1.0 / s2);
    }
    return {g, h};
  }
  double lo() const { return *std::min_element(center.begin(), center.end()) - 4.0 * std::sqrt(s2); }
  double hi() const { return *std::max_element(center.begin(), center.end()) + 4.0 * std::sqrt(s2); }
};

GaussSum utility_of(const WeightedOpinions& f, double a) {
  GaussSum g;
  g.coef.assign(f.weights().begin(), f.weights().end());
  g.center.assign(f.positions().begin(), f.positions().end());
  g.s2 = a * a;
  return g;
}

GaussSum utility_of(const Mixture2& f, double a) {
  GaussSum g;
  const double s2 = a * a + f.sigma * f.sigma;
  const double scale = a / std::sqrt(s2);
  g.coef = {f.pi_a * scale, f.pi_b * scale};
  g.center = {f.mu_a, f.mu_b};
  g.s2 = s2;
  return g;
}

// Root of U' inside [left, right] where U'(left) > 0 > U'(right).
double polish(const GaussSum& u, double left, double right, double start) {
  double x = start;
  for (int it = 0; it < 200; ++it) {
    const auto [g, h] = u.derivs(x);
    if (g == 0.0) return x;
    if (g > 0.0) {
      left = x;
    } else {
      right = x;
    }
    double next = (h < 0.0) ? x - g / h : 0.5 * (left + right);
    if (!(next > left && next < right)) next = 0.5 * (left + right);
    const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x));
    if (std::abs(next - x) <= tol || right - left <= tol) return next;
    x = next;
  }
  return x;
}

std::vector<Branch> utility_branches(const GaussSum& u, const ElectionModel& model) {
  const double lo = u.lo();
  const double hi = u.hi();
  const std::size_t n = model.grid_points;
  const double step = (hi - lo) / static_cast<double>(n - 1);
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i) vals[i] = u.value(lo + step * static_cast<double>(i));

  std::vector<Branch> branches;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left_ok = (i == 0) || vals[i] >= vals[i - 1];
    const bool right_ok = (i + 1 == n) || vals[i] > vals[i + 1];
    if (!(left_ok && right_ok)) continue;

    const double y0 = lo + step * static_cast<double>(i);
    const double a = std::max(lo, y0 - step);
    const double b = std::min(hi, y0 + step);
    const std::size_t fine_n = 2 * model.refine_factor + 1;
    const double fine = (b - a) / static_cast<double>(fine_n - 1);
    double best_y = y0;
    double best_u = vals[i];
    for (std::size_t j = 0; j < fine_n; ++j) {
      const double y = a + fine * static_cast<double>(j);
      const double v = u.value(y);
      if (v > best_u) {
        best_u = v;
        best_y = y;
      }
    }
    const double left = std::max(lo, best_y - fine);
    const double right = std::min(hi, best_y + fine);
    if (u.derivs(left).first > 0.0 && u.derivs(right).first < 0.0) {
      const double y = polish(u, left, right, best_y);
      best_y = y;
      best_u = u.value(y);
    }
    const double merge_tol = 1e-9 * std::sqrt(u.s2);
    if (!branches.empty() && std::abs(branches.back().position - best_y) <= merge_tol) {
      if (best_u > branches.back().utility) branches.back() = {best_y, best_u};
      continue;
    }
    branches.push_back({best_y, best_u});
  }
  std::sort(branches.begin(), branches.end(), [](const Branch& x, const Branch& y) { return x.position < y.position; });
  return branches;
}

double pick_winner(const std::vector<Branch>& branches, double tie_tolerance) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& b : branches) best = std::max(best, b.utility);
  for (const auto& b : branches) {
    if (b.utility >= best - tie_tolerance * std::abs(best)) return b.position;
  }
  return branches.front().position;
}

double weighted_lower_median(const WeightedOpinions& f) {
  std::vector<std::size_t> idx(f.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto pos = f.positions();
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pos[a] < pos[b]; });
  double cum = 0.0;
  for (auto i : idx) {
    cum += f.weights()[i];
    if (cum >= 0.5 - 1e-12) return pos[i];
  }
  return pos[idx.back()];
}

double mixture_median(const Mixture2& f) {
  double lo = std::min(f.mu_a, f.mu_b) - 10.0 * f.sigma;
  double hi = std::max(f.mu_a, f.mu_b) + 10.0 * f.sigma;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f.cdf(mid) < 0.5) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double expected_utility(const WeightedOpinions& electorate, double a, double y) {
  return utility_of(electorate, a).value(y);
}

double expected_utility(const Mixture2& electorate, double a, double y) {
  return utility_of(electorate, a).value(y);
}

std::vector<Branch> outcome_branches(const ElectionModel& model, const WeightedOpinions& electorate) {
  validate(model);
  switch (model.kind) {
    case ElectionKind::kMean:
      return {{electorate.mean(), 0.0}};
    case ElectionKind::kMedian:
      return {{weighted_lower_median(electorate), 0.0}};
    case ElectionKind::kUtilityArgmax:
      break;
  }
  return utility_branches(utility_of(electorate, model.alienation), model);
}

std::vector<Branch> outcome_branches(const ElectionModel& model, const Mixture2& electorate) {
  validate(model);
  switch (model.kind) {
    case ElectionKind::kMean:
      return {{electorate.mean(), 0.0}};
    case ElectionKind::kMedian:
      return {{mixture_median(electorate), 0.0}};
    case ElectionKind::kUtilityArgmax:
      break;
  }
  return utility_branches(utility_of(electorate, model.alienation), model);
}

double elect(const ElectionModel& model, const WeightedOpinions& electorate) {
  return pick_winner(outcome_branches(model, electorate), model.tie_tolerance);
}

double elect(const ElectionModel& model, const Mixture2& electorate) {
  return pick_winner(outcome_branches(model, electorate), model.tie_tolerance);
}

double default_step(const WeightedOpinions& electorate) {
  const double sd = std::sqrt(electorate.variance());
  return sd > 0.0 ? 1e-4 * sd : 1e-4;
}

double representation(const ElectionModel& model, const WeightedOpinions& electorate, std::size_t i, double h) {
  if (i >= electorate.size()) detail::throw_input("voter index " + std::to_string(i) + " out of range");
  if (h <= 0.0) h = default_step(electorate);
  const double x = electorate.positions()[i];
  const double up = elect(model, electorate.with_position(i, x + h));
  const double down = elect(model, electorate.with_position(i, x - h));
  return (up - down) / (2.0 * h);
}

double finite_shift_representation(const ElectionModel& model, const WeightedOpinions& electorate, std::size_t i,
                                   double shift) {
  if (i >= electorate.size()) detail::throw_input("voter index " + std::to_string(i) + " out of range");
  if (shift == 0.0 || !std::isfinite(shift)) detail::throw_input("shift must be finite and nonzero");
  const double x = electorate.positions()[i];
  return (elect(model, electorate.with_position(i, x + shift)) - elect(model, electorate)) / shift;
}

double polarization_j(const Mixture2& mix, double a) {
  if (!(a > 0.0)) detail::throw_input("alienation scale a must be positive");
  const double d = mix.mu_a - mix.mu_b;
  return d * d / (4.0 * (mix.sigma * mix.sigma + a * a));
}

InstabilityReport detect_instability(const std::function<double(double)>& outcome_of_eps,
                                     const InstabilityOptions& options) {
  if (!(options.eps_hi > options.eps_lo)) detail::throw_input("eps range is empty");
  if (options.initial_steps < 1) detail::throw_input("need at least one eps step");
  InstabilityReport report;
  const double range = options.eps_hi - options.eps_lo;

  std::size_t steps = options.initial_steps;
  std::vector<double> outcomes(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) {
    outcomes[j] = outcome_of_eps(options.eps_lo + range * static_cast<double>(j) / static_cast<double>(steps));
  }
  for (std::size_t k = 0;; ++k) {
    double jump = 0.0;
    std::size_t at = 0;
    for (std::size_t j = 0; j < steps; ++j) {
      const double dj = std::abs(outcomes[j + 1] - outcomes[j]);
      if (!std::isfinite(dj)) detail::throw_degenerate("nonfinite outcome in instability sweep");
      if (dj > jump) {
        jump = dj;
        at = j;
      }
    }
    report.jumps.push_back(jump);
    report.jump = jump;
    report.jump_at = options.eps_lo + range * static_cast<double>(at) / static_cast<double>(steps);
    report.resolution = range / static_cast<double>(steps);
    if (k > 0) {
      const double prev = report.jumps[k - 1];
      if (jump <= options.abs_floor) break;
      if (std::abs(jump - prev) <= options.rel_tolerance * std::max(jump, prev)) {
        report.converged = true;
        break;
      }
    }
    if (k == options.max_halvings) break;

    std::vector<double> refined(2 * steps + 1);
    for (std::size_t j = 0; j <= steps; ++j) refined[2 * j] = outcomes[j];
    for (std::size_t j = 0; j < steps; ++j) {
      refined[2 * j + 1] =
          outcome_of_eps(options.eps_lo + range * static_cast<double>(2 * j + 1) / static_cast<double>(2 * steps));
    }
    outcomes = std::move(refined);
    steps *= 2;
  }

  if (report.converged) {
    report.unstable = report.jump > options.abs_floor;
  } else if (report.jumps.size() >= 2 && report.jump > options.abs_floor) {
    const double ratio = report.jump / report.jumps[report.jumps.size() - 2];
    report.unstable = ratio > 0.75;
  }
  return report;
}

InstabilityReport detect_instability(const ElectionModel& model, const std::function<Mixture2(double)>& family,
                                     const InstabilityOptions& options) {
  validate(model);
  return detect_instability([&](double eps) { return elect(model, family(eps)); }, options);
}

std::vector<StabilityRow> stability_sweep(double sigma, double a, double j_min, double j_max, std::size_t steps,
                                          const InstabilityOptions& options) {
  if (!(sigma > 0.0) || !(a > 0.0)) detail::throw_input("sigma and a must be positive");
  if (!(j_min >= 0.0) || !(j_max >= j_min)) detail::throw_input("J range must satisfy 0 <= j_min <= j_max");
  if (steps < 1) detail::throw_input("sweep needs at least one step");
  const ElectionModel model = ElectionModel::utility(a);
  std::vector<StabilityRow> rows;
  rows.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double j = steps == 0 ? j_min : j_min + (j_max - j_min) * static_cast<double>(k) / static_cast<double>(steps);
    StabilityRow row;
    row.j = j;
    row.delta = std::sqrt(j * (sigma * sigma + a * a));
    const auto mix = Mixture2::symmetric(row.delta, sigma);
    const auto branches = outcome_branches(model, mix);
    row.outcome = pick_winner(branches, model.tie_tolerance);
    row.branch_low = branches.front().position;
    row.branch_high = branches.back().position;
    const auto report = detect_instability(
        model, [&](double eps) { return Mixture2::symmetric(row.delta, sigma, 0.5 + eps); }, options);
    row.jump = report.jump;
    row.unstable = report.unstable;
    rows.push_back(row);
  }
  return rows;
}

double bifurcation_onset(std::span<const StabilityRow> rows, double threshold) {
  for (const auto& row : rows) {
    if (row.delta > 0.0 && std::abs(row.outcome) > threshold * row.delta) return row.j;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace mlpolar
