#include "mlpolar/scale_variance.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "mlpolar/errors.hpp"

namespace mlpolar {

namespace {

// Row-major d x d accumulators, one per term, before division by the total weight.
struct TermSums {
  std::vector<std::vector<double>> terms;
  std::vector<std::size_t> region_counts;
  double weight = 0.0;
};

double unit_weight(const GeoUnit& u, bool population_weighted) {
  return population_weighted ? u.population : 1.0;
}

TermSums accumulate(const RegionTree& tree, std::span<const GeoUnit> units, const DecomposeOptions& opts) {
  const std::size_t n = units.size();
  if (n == 0) detail::throw_input("cannot decompose an empty set of units");
  if (tree.num_units() != n) {
    detail::throw_input("region tree covers " + std::to_string(tree.num_units()) + " units but " +
                        std::to_string(n) + " were given");
  }
  const std::size_t d = units.front().dimension();
  if (d == 0) detail::throw_input("units carry no values");
  for (const auto& u : units) {
    validate_unit(u);
    if (u.dimension() != d) detail::throw_input("unit '" + u.id + "' has a value of a different dimension");
  }
  if (opts.bernoulli_within_unit) {
    if (d != 1) detail::throw_input("binary within-unit variance needs scalar values");
    for (const auto& u : units) {
      if (u.scalar() < 0.0 || u.scalar() > 1.0) {
        detail::throw_input("unit '" + u.id + "': binary within-unit variance needs a share in [0,1]");
      }
    }
  }

  const std::size_t levels = tree.num_levels();
  TermSums out;

  // values are taken relative to the first unit; constant data then sums to exact zeros
  const std::vector<double> ref = units.front().value;
  auto centered = [&](std::size_t i, std::size_t a) { return units[i].value[a] - ref[a]; };

  double total_weight = 0.0;
  std::vector<double> grand(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = unit_weight(units[i], opts.population_weighted);
    total_weight += w;
    for (std::size_t a = 0; a < d; ++a) grand[a] += w * centered(i, a);
  }
  if (!(total_weight > 0.0)) detail::throw_input("total population weight is zero");
  for (auto& g : grand) g /= total_weight;
  out.weight = total_weight;

  std::vector<std::vector<double>> region_weight(levels);
  std::vector<std::vector<double>> region_mean(levels);
  for (std::size_t k = 0; k < levels; ++k) {
    const std::size_t regions = tree.region_count(k);
    auto& wts = region_weight[k];
    auto& means = region_mean[k];
    wts.assign(regions, 0.0);
    means.assign(regions * d, 0.0);
    const auto assign = tree.level(k);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = unit_weight(units[i], opts.population_weighted);
      const std::size_t r = assign[i];
      wts[r] += w;
      for (std::size_t a = 0; a < d; ++a) means[r * d + a] += w * centered(i, a);
    }
    for (std::size_t r = 0; r < regions; ++r) {
      for (std::size_t a = 0; a < d; ++a) means[r * d + a] = wts[r] > 0.0 ? means[r * d + a] / wts[r] : 0.0;
    }
  }

  out.terms.assign(levels + 1, std::vector<double>(d * d, 0.0));
  out.region_counts.resize(levels + 1);
  out.region_counts[0] = n;
  for (std::size_t k = 0; k < levels; ++k) out.region_counts[k + 1] = tree.region_count(k);

  std::vector<double> diff(d);
  {
    auto& term = out.terms[0];
    const auto assign = tree.level(0);
    const auto& means = region_mean[0];
    for (std::size_t i = 0; i < n; ++i) {
      const double w = unit_weight(units[i], opts.population_weighted);
      const std::size_t r = assign[i];
      for (std::size_t a = 0; a < d; ++a) diff[a] = centered(i, a) - means[r * d + a];
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) term[a * d + b] += w * (diff[a] * diff[b]);
      }
    }
    if (opts.bernoulli_within_unit) {
      for (const auto& u : units) {
        const double p = u.scalar();
        term[0] += unit_weight(u, opts.population_weighted) * (p * (1.0 - p));
      }
    }
  }

  for (std::size_t k = 1; k <= levels; ++k) {
    auto& term = out.terms[k];
    const std::size_t child_level = k - 1;
    const auto& child_w = region_weight[child_level];
    const auto& child_m = region_mean[child_level];
    for (std::size_t r = 0; r < child_w.size(); ++r) {
      const double w = child_w[r];
      const double* parent_mean =
          k < levels ? &region_mean[k][tree.parent(child_level, static_cast<std::uint32_t>(r)) * d] : grand.data();
      for (std::size_t a = 0; a < d; ++a) diff[a] = child_m[r * d + a] - parent_mean[a];
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) term[a * d + b] += w * (diff[a] * diff[b]);
      }
    }
  }

  for (auto& term : out.terms) {
    for (auto& v : term) v /= total_weight;
  }
  return out;
}

}  // namespace

ScaleDecomposition decompose(const RegionTree& tree, std::span<const GeoUnit> units, const DecomposeOptions& options) {
  if (!units.empty() && units.front().dimension() != 1) {
    detail::throw_input("decompose needs scalar unit values; use decompose_cov for vectors");
  }
  auto sums = accumulate(tree, units, options);
  ScaleDecomposition dec;
  dec.region_counts = std::move(sums.region_counts);
  dec.added.reserve(sums.terms.size());
  for (const auto& t : sums.terms) {
    dec.added.push_back(t[0]);
    dec.total += t[0];
  }
  return dec;
}

CovDecomposition decompose_cov(const RegionTree& tree, std::span<const GeoUnit> units, const DecomposeOptions& options) {
  auto sums = accumulate(tree, units, options);
  const auto d = static_cast<Eigen::Index>(units.front().dimension());
  CovDecomposition dec;
  dec.region_counts = std::move(sums.region_counts);
  dec.total = Eigen::MatrixXd::Zero(d, d);
  for (const auto& t : sums.terms) {
    Eigen::MatrixXd m(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
      for (Eigen::Index b = 0; b < d; ++b) m(a, b) = t[static_cast<std::size_t>(a * d + b)];
    }
    dec.total += m;
    dec.added.push_back(std::move(m));
  }
  return dec;
}

double group_size_slope(const ScaleDecomposition& dec, std::size_t min_groups) {
  if (dec.region_counts.size() != dec.added.size() || dec.added.empty()) {
    detail::throw_input("decomposition has no region counts");
  }
  const auto units = static_cast<double>(dec.region_counts[0]);
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t k = 1; k < dec.added.size(); ++k) {
    if (dec.region_counts[k] < min_groups || !(dec.added[k] > 0.0)) continue;
    xs.push_back(std::log(units / static_cast<double>(dec.region_counts[k])));
    ys.push_back(std::log(dec.added[k]));
  }
  if (xs.size() < 2) detail::throw_degenerate("fewer than two scales with positive added variance to fit");
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (!(sxx > 0.0)) detail::throw_degenerate("group sizes do not vary across scales");
  return sxy / sxx;
}

double cumulative_within(const ScaleDecomposition& dec, std::size_t n) {
  if (n > dec.added.size()) {
    detail::throw_input("scale " + std::to_string(n) + " out of range 0.." + std::to_string(dec.added.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += dec.added[i];
  return s;
}

double cumulative_above(const ScaleDecomposition& dec, std::size_t n) {
  return dec.total - cumulative_within(dec, n);
}

ScaleDecomposition normalized(const ScaleDecomposition& dec, double p) {
  if (!(p > 0.0 && p < 1.0)) detail::throw_input("winning share p must lie strictly between 0 and 1");
  const double norm = p * (1.0 - p);
  ScaleDecomposition out = dec;
  for (auto& a : out.added) a /= norm;
  out.total = 0.0;
  for (double a : out.added) out.total += a;
  out.normalizer = norm;
  return out;
}

WeightedMoments weighted_moments(std::span<const GeoUnit> units, bool population_weighted) {
  if (units.empty()) detail::throw_input("no units");
  WeightedMoments m;
  double sum = 0.0;
  for (const auto& u : units) {
    const double w = unit_weight(u, population_weighted);
    m.weight += w;
    sum += w * u.scalar();
  }
  if (!(m.weight > 0.0)) detail::throw_input("total population weight is zero");
  m.mean = sum / m.weight;
  double ss = 0.0;
  for (const auto& u : units) {
    const double dx = u.scalar() - m.mean;
    ss += unit_weight(u, population_weighted) * dx * dx;
  }
  m.variance = ss / m.weight;
  return m;
}

double resolution_cost(std::span<const GeoUnit> units, double outcome, bool population_weighted) {
  if (units.empty()) detail::throw_input("no units");
  double w_sum = 0.0;
  double cost = 0.0;
  for (const auto& u : units) {
    const double w = unit_weight(u, population_weighted);
    const double dx = u.scalar() - outcome;
    w_sum += w;
    cost += w * dx * dx;
  }
  if (!(w_sum > 0.0)) detail::throw_input("total population weight is zero");
  return cost / w_sum;
}

}  // namespace mlpolar
