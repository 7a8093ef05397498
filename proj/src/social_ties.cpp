#include "mlpolar/social_ties.hpp"

#include <cmath>
#include <string>

#include "mlpolar/errors.hpp"

namespace mlpolar {

namespace {

void check_unit_weight(double w) {
  if (!(w >= 0.0 && w <= 1.0)) detail::throw_input("tie weight w must lie in [0,1]");
}

}  // namespace

TieMatrix::TieMatrix(Eigen::MatrixXd t, bool allow_negative) : t_(std::move(t)) {
  if (t_.rows() == 0 || t_.rows() != t_.cols()) detail::throw_input("tie matrix must be square and nonempty");
  if (!t_.allFinite()) detail::throw_input("tie matrix has nonfinite entries");
  for (Eigen::Index i = 0; i < t_.rows(); ++i) {
    const double s = t_.row(i).sum();
    if (std::abs(s - 1.0) > 1e-12) {
      detail::throw_input("tie matrix row " + std::to_string(i) + " sums to " + std::to_string(s) + ", not 1");
    }
    if (!allow_negative && (t_.row(i).array() < 0.0).any()) {
      detail::throw_input("tie matrix row " + std::to_string(i) + " has a negative entry");
    }
  }
}

TieMatrix TieMatrix::identity(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  return TieMatrix(Eigen::MatrixXd::Identity(m, m));
}

TieMatrix TieMatrix::uniform(std::size_t n, double w) {
  check_unit_weight(w);
  if (n < 2) detail::throw_input("uniform ties need at least two voters");
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd t = Eigen::MatrixXd::Constant(m, m, w / static_cast<double>(n - 1));
  t.diagonal().setConstant(1.0 - w);
  return TieMatrix(std::move(t));
}

TieMatrix TieMatrix::block(std::span<const std::size_t> group_of, double w) {
  check_unit_weight(w);
  const auto n = static_cast<Eigen::Index>(group_of.size());
  if (n == 0) detail::throw_input("no voters");
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t peers = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i && group_of[static_cast<std::size_t>(j)] == group_of[static_cast<std::size_t>(i)]) ++peers;
    }
    if (peers == 0) {
      t(i, i) = 1.0;
      continue;
    }
    t(i, i) = 1.0 - w;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i && group_of[static_cast<std::size_t>(j)] == group_of[static_cast<std::size_t>(i)]) {
        t(i, j) = w / static_cast<double>(peers);
      }
    }
  }
  return TieMatrix(std::move(t));
}

Eigen::VectorXd effective_opinions(const TieMatrix& t, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != t.size()) {
    detail::throw_input("opinion vector length does not match tie matrix");
  }
  return t.matrix() * x;
}

WeightedOpinions transform_fully_connected(const WeightedOpinions& f, double w) {
  check_unit_weight(w);
  const double m = f.mean();
  std::vector<double> pos(f.positions().begin(), f.positions().end());
  for (auto& x : pos) x = x * (1.0 - w) + w * m;
  return WeightedOpinions(std::move(pos), std::vector<double>(f.weights().begin(), f.weights().end()));
}

Mixture2 transform_fully_connected(const Mixture2& f, double w) {
  check_unit_weight(w);
  const double m = f.mean();
  Mixture2 out = f;
  out.mu_a = m * w + f.mu_a * (1.0 - w);
  out.mu_b = m * w + f.mu_b * (1.0 - w);
  out.sigma = f.sigma * (1.0 - w);
  return out;
}

Mixture2 transform_segregated(const Mixture2& f, double w) {
  check_unit_weight(w);
  Mixture2 out = f;
  out.sigma = f.sigma * (1.0 - w);
  return out;
}

double j_fully_connected(const Mixture2& mix, double a, double w) {
  check_unit_weight(w);
  if (!(a > 0.0)) detail::throw_input("alienation scale a must be positive");
  const double d = mix.mu_a - mix.mu_b;
  const double r = (1.0 - w) * (1.0 - w);
  return d * d * r / (4.0 * (mix.sigma * mix.sigma * r + a * a));
}

double j_segregated(const Mixture2& mix, double a, double w) {
  check_unit_weight(w);
  if (!(a > 0.0)) detail::throw_input("alienation scale a must be positive");
  const double d = mix.mu_a - mix.mu_b;
  const double r = (1.0 - w) * (1.0 - w);
  return d * d / (4.0 * (mix.sigma * mix.sigma * r + a * a));
}

ScaleWeights::ScaleWeights(std::vector<double> w) : w_(std::move(w)) {
  if (w_.empty()) detail::throw_input("scale weights are empty");
  double s = 0.0;
  for (double v : w_) {
    if (!(v >= 0.0 && v <= 1.0)) detail::throw_input("scale weights must lie in [0,1]");
    s += v;
  }
  if (s > 1.0 + 1e-12) detail::throw_input("scale weights sum to more than 1");
}

double ScaleWeights::beta() const { return retained_from(0); }

double ScaleWeights::retained_from(std::size_t k) const {
  double s = 0.0;
  for (std::size_t i = k; i < w_.size(); ++i) s += w_[i];
  return 1.0 - s;
}

ScaleDecomposition multiscale_effective_variance(const ScaleDecomposition& dec, const ScaleWeights& w) {
  if (w.size() != dec.added.size()) {
    detail::throw_input("need " + std::to_string(dec.added.size()) + " scale weights, got " + std::to_string(w.size()));
  }
  ScaleDecomposition out = dec;
  out.total = 0.0;
  for (std::size_t k = 0; k < out.added.size(); ++k) {
    const double f = w.retained_from(k);
    out.added[k] *= f * f;
    out.total += out.added[k];
  }
  return out;
}

std::vector<GeoUnit> multiscale_effective_opinions(const RegionTree& tree, std::span<const GeoUnit> units,
                                                   const ScaleWeights& w, bool population_weighted) {
  const std::size_t levels = tree.num_levels();
  if (w.size() != levels + 1) detail::throw_input("need one scale weight per tree level plus a national weight");
  if (units.size() != tree.num_units()) detail::throw_input("unit count does not match region tree");
  for (const auto& u : units) {
    if (u.dimension() != 1) detail::throw_input("multiscale transform needs scalar values");
  }
  auto weight = [&](const GeoUnit& u) { return population_weighted ? u.population : 1.0; };

  std::vector<std::vector<double>> means(levels);
  double grand_w = 0.0;
  double grand = 0.0;
  for (const auto& u : units) {
    grand_w += weight(u);
    grand += weight(u) * u.scalar();
  }
  if (!(grand_w > 0.0)) detail::throw_input("total population weight is zero");
  grand /= grand_w;
  for (std::size_t k = 0; k < levels; ++k) {
    std::vector<double> wsum(tree.region_count(k), 0.0);
    means[k].assign(tree.region_count(k), 0.0);
    for (std::size_t i = 0; i < units.size(); ++i) {
      wsum[tree.region_of(i, k)] += weight(units[i]);
      means[k][tree.region_of(i, k)] += weight(units[i]) * units[i].scalar();
    }
    for (std::size_t r = 0; r < wsum.size(); ++r) means[k][r] = wsum[r] > 0.0 ? means[k][r] / wsum[r] : 0.0;
  }

  const auto ws = w.values();
  const double beta = w.beta();
  std::vector<GeoUnit> out(units.begin(), units.end());
  for (std::size_t i = 0; i < units.size(); ++i) {
    double x = beta * units[i].scalar();
    for (std::size_t k = 0; k < levels; ++k) x += ws[k] * means[k][tree.region_of(i, k)];
    x += ws[levels] * grand;
    out[i].value = {x};
  }
  return out;
}

TwoStateJ two_state_j(double delta, double sigma, double a, double w1, double w2) {
  if (!(w1 >= 0.0) || !(w2 >= 0.0) || w1 + w2 > 1.0) detail::throw_input("need w1, w2 >= 0 with w1 + w2 <= 1");
  if (!(sigma > 0.0) || !(a > 0.0)) detail::throw_input("sigma and a must be positive");
  const double beta = 1.0 - w1 - w2;
  const double d2 = delta * delta;
  const double s2 = sigma * sigma;
  TwoStateJ j;
  j.identical_counties = d2 * beta * beta / (s2 * beta * beta + a * a);
  j.sorted_counties = d2 * (1.0 - w2) * (1.0 - w2) / (s2 * beta * beta + a * a);
  return j;
}

Eigen::VectorXd representation_under_ties(const TieMatrix& t, const Eigen::VectorXd& effective_rep) {
  if (static_cast<std::size_t>(effective_rep.size()) != t.size()) {
    detail::throw_input("representation vector length does not match tie matrix");
  }
  return t.matrix().transpose() * effective_rep;
}

double social_representation(const TieMatrix& t, std::size_t i, double r_i) {
  if (i >= t.size()) detail::throw_input("voter index out of range");
  const double tii = t(i, i);
  if (tii == 0.0) detail::throw_degenerate("social representation undefined: T_ii = 0 for voter " + std::to_string(i));
  return r_i / tii;
}

}  // namespace mlpolar
