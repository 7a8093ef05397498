#pragma once

// Independent reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlpolar/geo_hierarchy.hpp"

namespace oracle {

/// Population-weighted variance, accumulated in long double.
inline double weighted_variance(const std::vector<double>& x, const std::vector<double>& w) {
  long double sw = 0, sx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
  }
  const long double m = sx / sw;
  long double v = 0;
  for (std::size_t i = 0; i < x.size(); ++i) v += w[i] * (x[i] - m) * (x[i] - m);
  return static_cast<double>(v / sw);
}

/// Weighted variance of group means, each unit carrying its group's mean.
inline double between_variance(const std::vector<std::uint32_t>& group, const std::vector<double>& x,
                               const std::vector<double>& w) {
  std::map<std::uint32_t, std::pair<long double, long double>> acc;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc[group[i]].first += w[i] * x[i];
    acc[group[i]].second += w[i];
  }
  std::vector<double> means(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& [s, ww] = acc[group[i]];
    means[i] = static_cast<double>(s / ww);
  }
  return weighted_variance(means, w);
}

/// Added variance per scale from the telescoping identity
/// added[0] = Var(z) - Var(E(z|W_1)), added[k] = Var(E(z|W_k)) - Var(E(z|W_{k+1})),
/// added[N] = Var(E(z|W_N)).
inline std::vector<double> telescoped_added(const std::vector<std::vector<std::uint32_t>>& levels,
                                            const std::vector<double>& x, const std::vector<double>& w) {
  const std::size_t n_levels = levels.size();
  std::vector<double> between(n_levels);
  for (std::size_t k = 0; k < n_levels; ++k) between[k] = between_variance(levels[k], x, w);
  std::vector<double> added(n_levels + 1);
  added[0] = weighted_variance(x, w) - between[0];
  for (std::size_t k = 1; k < n_levels; ++k) added[k] = between[k - 1] - between[k];
  added[n_levels] = between[n_levels - 1];
  return added;
}

/// Recursive equal-count partition: returns, for each depth from the root
/// (1..depth), the list of unit-index sets.
inline void kd_recurse(const std::vector<mlpolar::GeoUnit>& units, std::vector<std::size_t> idx, int level,
                       int depth, std::vector<std::vector<std::set<std::size_t>>>& out) {
  if (level == depth) return;
  const int axis = level % 2;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double ca = units[a].coords[static_cast<std::size_t>(axis)];
    const double cb = units[b].coords[static_cast<std::size_t>(axis)];
    if (ca != cb) return ca < cb;
    return units[a].id < units[b].id;
  });
  const std::size_t half = idx.size() / 2;
  std::vector<std::size_t> left(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(half));
  std::vector<std::size_t> right(idx.begin() + static_cast<std::ptrdiff_t>(half), idx.end());
  out[static_cast<std::size_t>(level)].emplace_back(left.begin(), left.end());
  out[static_cast<std::size_t>(level)].emplace_back(right.begin(), right.end());
  kd_recurse(units, left, level + 1, depth, out);
  kd_recurse(units, right, level + 1, depth, out);
}

inline std::vector<std::vector<std::set<std::size_t>>> kd_partition(const std::vector<mlpolar::GeoUnit>& units,
                                                                      int depth) {
  std::vector<std::vector<std::set<std::size_t>>> out(static_cast<std::size_t>(depth));
  std::vector<std::size_t> idx(units.size());
  std::iota(idx.begin(), idx.end(), 0);
  kd_recurse(units, idx, 0, depth, out);
  return out;
}

/// Groups of a level as a set of unit-index sets.
inline std::set<std::set<std::size_t>> groups_of(std::span<const std::uint32_t> level) {
  std::map<std::uint32_t, std::set<std::size_t>> g;
  for (std::size_t i = 0; i < level.size(); ++i) g[level[i]].insert(i);
  std::set<std::set<std::size_t>> out;
  for (auto& [id, s] : g) out.insert(s);
  return out;
}

/// Minimum weighted 2-means objective over all nontrivial 2-partitions.
inline double exhaustive_two_means(const Eigen::MatrixXd& x, const Eigen::VectorXd& w) {
  const auto n = x.rows();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
    Eigen::VectorXd s[2] = {Eigen::VectorXd::Zero(x.cols()), Eigen::VectorXd::Zero(x.cols())};
    double ws[2] = {0, 0};
    for (Eigen::Index i = 0; i < n; ++i) {
      const int l = (mask >> i) & 1U;
      s[l] += w[i] * x.row(i).transpose();
      ws[l] += w[i];
    }
    if (ws[0] <= 0 || ws[1] <= 0) continue;
    double obj = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int l = (mask >> i) & 1U;
      obj += w[i] * (x.row(i).transpose() - s[l] / ws[l]).squaredNorm();
    }
    best = std::min(best, obj);
  }
  return best;
}

/// Sample variance (n-1) and the standard error of the sample variance,
/// estimated by bootstrap resampling.
struct VarianceEstimate {
  double variance = 0.0;
  double standard_error = 0.0;
};

inline VarianceEstimate bootstrap_variance(const std::vector<double>& x, std::size_t resamples, std::uint64_t seed) {
  auto var = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0;
    for (double a : v) s += (a - m) * (a - m);
    return s / static_cast<double>(v.size() - 1);
  };
  VarianceEstimate e;
  e.variance = var(x);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  std::vector<double> stats;
  std::vector<double> sample(x.size());
  for (std::size_t r = 0; r < resamples; ++r) {
    for (auto& s : sample) s = x[pick(rng)];
    stats.push_back(var(sample));
  }
  const double m = std::accumulate(stats.begin(), stats.end(), 0.0) / static_cast<double>(stats.size());
  double s = 0;
  for (double a : stats) s += (a - m) * (a - m);
  e.standard_error = std::sqrt(s / static_cast<double>(stats.size() - 1));
  return e;
}

/// Central-difference Jacobian of a vector map, for end-to-end comparison.
inline Eigen::MatrixXd numeric_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h) {
  const Eigen::VectorXd y0 = f(x);
  Eigen::MatrixXd j(y0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::VectorXd up = x, down = x;
    up[k] += h;
    down[k] -= h;
    j.col(k) = (f(up) - f(down)) / (2 * h);
  }
  return j;
}

/// Fixed point of y = delta * tanh(y delta / s2) with y > 0, by bisection.
inline double symmetric_branch(double delta, double s2) {
  double lo = 1e-12, hi = delta;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid - delta * std::tanh(mid * delta / s2) < 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracle
