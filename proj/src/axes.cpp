#include "mlpolar/axes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "mlpolar/errors.hpp"

namespace mlpolar {

OpinionCloud::OpinionCloud(Eigen::MatrixXd points)
    : OpinionCloud(points, Eigen::VectorXd::Ones(points.rows())) {}

OpinionCloud::OpinionCloud(Eigen::MatrixXd points, Eigen::VectorXd weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.rows() == 0 || points_.cols() == 0) detail::throw_input("opinion cloud is empty");
  if (weights_.size() != points_.rows()) detail::throw_input("one weight per point required");
  if (!points_.allFinite() || !weights_.allFinite()) detail::throw_input("opinion cloud has nonfinite entries");
  if ((weights_.array() < 0.0).any()) detail::throw_input("point weights must be nonnegative");
  const double s = weights_.sum();
  if (!(s > 0.0)) detail::throw_input("point weights sum to zero");
  weights_ /= s;
}

Eigen::VectorXd OpinionCloud::mean() const { return points_.transpose() * weights_; }

Eigen::MatrixXd OpinionCloud::covariance() const {
  const Eigen::MatrixXd centered = points_.rowwise() - mean().transpose();
  return centered.transpose() * weights_.asDiagonal() * centered;
}

OpinionCloud OpinionCloud::with_point(Eigen::Index i, const Eigen::VectorXd& p) const {
  if (i < 0 || i >= size()) detail::throw_input("point index " + std::to_string(i) + " out of range");
  if (p.size() != dimension()) detail::throw_input("point dimension mismatch");
  OpinionCloud copy = *this;
  copy.points_.row(i) = p.transpose();
  if (!p.allFinite()) detail::throw_input("nonfinite point");
  return copy;
}

Eigen::VectorXd canonical_sign(Eigen::VectorXd v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0.0) v = -v;
      break;
    }
  }
  return v;
}

ElectionAxis ElectionAxis::from(const Eigen::VectorXd& v, AxisSource source) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) detail::throw_degenerate("cannot form an axis from a zero vector");
  return ElectionAxis{v / n, source};
}

double angle_between(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  // acos loses half the digits near 0 and pi
  const Eigen::VectorXd a = u / u.norm();
  const Eigen::VectorXd b = v / v.norm();
  return 2.0 * std::atan2((a - b).norm(), (a + b).norm());
}

namespace {

std::size_t sample_index(const Eigen::VectorXd& mass, std::mt19937_64& rng) {
  const double total = mass.sum();
  std::uniform_real_distribution<double> uni(0.0, total);
  const double target = uni(rng);
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    if (mass[i] <= 0.0) continue;
    cum += mass[i];
    last_positive = static_cast<std::size_t>(i);
    if (cum >= target) return static_cast<std::size_t>(i);
  }
  return last_positive;
}

struct LloydRun {
  std::vector<int> labels;
  Eigen::VectorXd c0, c1;
  double objective = std::numeric_limits<double>::infinity();
  bool ok = false;
};

LloydRun lloyd(const OpinionCloud& cloud, std::mt19937_64& rng, int max_iterations) {
  const auto& x = cloud.points();
  const auto& w = cloud.weights();
  const Eigen::Index n = cloud.size();
  LloydRun run;

  const std::size_t first = sample_index(w, rng);
  Eigen::VectorXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = w[i] * (x.row(i) - x.row(static_cast<Eigen::Index>(first))).squaredNorm();
  if (!(d2.sum() > 0.0)) return run;
  const std::size_t second = sample_index(d2, rng);
  run.c0 = x.row(static_cast<Eigen::Index>(first)).transpose();
  run.c1 = x.row(static_cast<Eigen::Index>(second)).transpose();

  run.labels.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = (x.row(i).transpose() - run.c0).squaredNorm();
      const double b = (x.row(i).transpose() - run.c1).squaredNorm();
      const int label = b < a ? 1 : 0;
      if (label != run.labels[static_cast<std::size_t>(i)]) {
        run.labels[static_cast<std::size_t>(i)] = label;
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::VectorXd s0 = Eigen::VectorXd::Zero(cloud.dimension());
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(cloud.dimension());
    double w0 = 0.0;
    double w1 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (run.labels[static_cast<std::size_t>(i)] == 0) {
        s0 += w[i] * x.row(i).transpose();
        w0 += w[i];
      } else {
        s1 += w[i] * x.row(i).transpose();
        w1 += w[i];
      }
    }
    if (!(w0 > 0.0) || !(w1 > 0.0)) return run;
    run.c0 = s0 / w0;
    run.c1 = s1 / w1;
  }
  run.objective = two_means_objective(cloud, run.labels);
  run.ok = std::isfinite(run.objective);
  return run;
}

}  // namespace

double two_means_objective(const OpinionCloud& cloud, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != cloud.size()) detail::throw_input("one label per point required");
  const auto& x = cloud.points();
  const auto& w = cloud.weights();
  Eigen::VectorXd s[2] = {Eigen::VectorXd::Zero(cloud.dimension()), Eigen::VectorXd::Zero(cloud.dimension())};
  double ws[2] = {0.0, 0.0};
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const int l = labels[static_cast<std::size_t>(i)];
    if (l != 0 && l != 1) detail::throw_input("labels must be 0 or 1");
    s[l] += w[i] * x.row(i).transpose();
    ws[l] += w[i];
  }
  Eigen::VectorXd c[2];
  for (int l = 0; l < 2; ++l) c[l] = ws[l] > 0.0 ? Eigen::VectorXd(s[l] / ws[l]) : Eigen::VectorXd(s[l]);
  double obj = 0.0;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    obj += w[i] * (x.row(i).transpose() - c[labels[static_cast<std::size_t>(i)]]).squaredNorm();
  }
  return obj;
}

TwoMeansResult two_means_axis(const OpinionCloud& cloud, const TwoMeansOptions& options) {
  if (options.restarts < 1) detail::throw_input("2-means needs at least one restart");
  const auto& x = cloud.points();
  bool distinct = false;
  Eigen::Index first_positive = -1;
  for (Eigen::Index i = 0; i < cloud.size() && !distinct; ++i) {
    if (cloud.weights()[i] <= 0.0) continue;
    if (first_positive < 0) {
      first_positive = i;
    } else if (x.row(i) != x.row(first_positive)) {
      distinct = true;
    }
  }
  if (!distinct) detail::throw_degenerate("2-means needs at least two distinct weighted points; all points coincide");

  std::mt19937_64 rng(options.seed);
  LloydRun best;
  for (int r = 0; r < options.restarts; ++r) {
    auto run = lloyd(cloud, rng, options.max_iterations);
    if (run.ok && run.objective < best.objective * (1.0 - 1e-14)) best = std::move(run);
  }
  if (!best.ok) detail::throw_degenerate("2-means failed to produce two nonempty clusters");

  Eigen::VectorXd diff = best.c1 - best.c0;
  Eigen::VectorXd canon = canonical_sign(diff);
  if (canon.dot(diff) < 0.0) {
    std::swap(best.c0, best.c1);
    for (auto& l : best.labels) l = 1 - l;
  }
  TwoMeansResult out;
  out.axis = ElectionAxis::from(canon, AxisSource::kTwoMeans);
  out.labels = std::move(best.labels);
  out.centroid0 = std::move(best.c0);
  out.centroid1 = std::move(best.c1);
  out.objective = best.objective;
  return out;
}

ElectionAxis pca_axis(const OpinionCloud& cloud) {
  const Eigen::MatrixXd cov = cloud.covariance();
  const double trace = cov.trace();
  if (!(trace > 0.0)) detail::throw_degenerate("covariance is zero; no principal axis");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) detail::throw_degenerate("eigen decomposition failed");
  const auto& vals = eig.eigenvalues();
  const Eigen::Index d = vals.size();
  if (d >= 2 && vals[d - 1] - vals[d - 2] < 1e-9 * trace) {
    detail::throw_degenerate("top covariance eigenvalue is degenerate (gap " + std::to_string(vals[d - 1] - vals[d - 2]) +
                             ")");
  }
  Eigen::VectorXd v = eig.eigenvectors().col(d - 1);
  v.normalize();
  return ElectionAxis{canonical_sign(v), AxisSource::kPca};
}

namespace {

void check_axis(const ElectionAxis& e) {
  if (e.direction.size() == 0 || std::abs(e.direction.norm() - 1.0) > 1e-9) {
    detail::throw_input("election axes must be unit vectors");
  }
}

void check_weight(double w, const char* name) {
  if (!(w >= 0.0 && w <= 1.0)) detail::throw_input(std::string(name) + " must lie in [0,1]");
}

}  // namespace

std::pair<ElectionAxis, ElectionAxis> couple_axes(const ElectionAxis& a, const ElectionAxis& b, double w_a,
                                                  double w_b) {
  check_axis(a);
  check_axis(b);
  if (a.direction.size() != b.direction.size()) detail::throw_input("axes differ in dimension");
  check_weight(w_a, "w_a");
  check_weight(w_b, "w_b");
  const Eigen::VectorXd ea = w_a * a.direction + (1.0 - w_a) * b.direction;
  const Eigen::VectorXd eb = w_b * b.direction + (1.0 - w_b) * a.direction;
  const double scale = 1e-12;
  if (ea.norm() <= scale || eb.norm() <= scale) detail::throw_degenerate("coupled axis combination has zero norm");
  return {ElectionAxis::from(ea, AxisSource::kCoupled), ElectionAxis::from(eb, AxisSource::kCoupled)};
}

void InteractionSystem::validate() const {
  const std::size_t n = axes.size();
  if (n == 0) detail::throw_input("interaction system has no elections");
  if (scale_of.size() != n) detail::throw_input("one scale label per election required");
  check_weight(w, "w");
  const auto dim = axes.front().direction.size();
  for (const auto& a : axes) {
    check_axis(a);
    if (a.direction.size() != dim) detail::throw_input("axes differ in dimension");
  }
  for (auto s : scale_of) {
    if (s >= coupling.size()) detail::throw_input("election scale has no interaction matrix");
  }
  for (std::size_t s = 0; s < coupling.size(); ++s) {
    const auto& m = coupling[s];
    if (m.rows() != static_cast<Eigen::Index>(n) || m.cols() != static_cast<Eigen::Index>(n)) {
      detail::throw_input("interaction matrix " + std::to_string(s) + " must be n x n");
    }
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double v = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (!(v >= 0.0)) detail::throw_input("interaction weights must be nonnegative");
        if (v != 0.0 && (i == j || scale_of[j] != s)) {
          detail::throw_input("interaction matrix " + std::to_string(s) + " couples election " + std::to_string(i) +
                              " to a non-peer " + std::to_string(j));
        }
        row += v;
      }
      if (row != 0.0 && std::abs(row - 1.0) > 1e-12) {
        detail::throw_input("interaction matrix " + std::to_string(s) + " row " + std::to_string(i) +
                            " must sum to 1 (or be empty)");
      }
    }
  }
}

std::vector<ElectionAxis> multilevel_couple(const InteractionSystem& system) {
  system.validate();
  const std::size_t n = system.axes.size();
  std::vector<ElectionAxis> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd pull = Eigen::VectorXd::Zero(system.axes[i].direction.size());
    for (const auto& m : system.coupling) {
      for (std::size_t j = 0; j < n; ++j) {
        const double v = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (v != 0.0) pull += v * system.axes[j].direction;
      }
    }
    const Eigen::VectorXd e = system.w * system.axes[i].direction + (1.0 - system.w) * pull;
    if (e.norm() <= 1e-12) {
      detail::throw_degenerate("coupled axis for election " + std::to_string(i) + " has zero norm");
    }
    out.push_back(ElectionAxis::from(e, AxisSource::kCoupled));
  }
  return out;
}

namespace {

std::pair<double, double> angle_moments(std::span<const ElectionAxis> axes, const ElectionAxis& reference,
                                        bool squared) {
  if (axes.empty()) detail::throw_input("no axes");
  double c = 0.0;
  double s = 0.0;
  for (const auto& a : axes) {
    if (a.direction.size() != reference.direction.size()) detail::throw_input("axes differ in dimension");
    const double t = angle_between(a.direction, reference.direction);
    c += squared ? std::cos(t) * std::cos(t) : std::cos(t);
    s += squared ? std::sin(t) * std::sin(t) : std::sin(t);
  }
  return {c, s};
}

}  // namespace

double circular_dispersion(std::span<const ElectionAxis> axes, const ElectionAxis& reference) {
  auto [c, s] = angle_moments(axes, reference, false);
  const double n = static_cast<double>(axes.size());
  return 1.0 - std::hypot(c / n, s / n);
}

double circular_dispersion_printed(std::span<const ElectionAxis> axes, const ElectionAxis& reference) {
  auto [c2, s2] = angle_moments(axes, reference, true);
  return 1.0 - std::sqrt(c2 + s2) / static_cast<double>(axes.size());
}

std::vector<CandidatePair> partisan_transform(std::span<const CandidatePair> pairs, TieMode mode, double m,
                                              std::span<const double> salience) {
  if (pairs.empty()) detail::throw_input("no candidate pairs");
  check_weight(m, "m");
  if (salience.size() != pairs.size()) detail::throw_input("one salience weight per election required");
  double total = 0.0;
  for (double p : salience) {
    if (!(p >= 0.0)) detail::throw_input("salience weights must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) detail::throw_input("salience weights must sum to 1");
  const auto dim = pairs.front().d.size();
  for (const auto& pr : pairs) {
    if (pr.d.size() != dim || pr.r.size() != dim || dim == 0) detail::throw_input("candidate positions differ in dimension");
    if (pr.d == pr.r) detail::throw_input("candidates coincide; no election axis");
  }

  Eigen::VectorXd mean_d = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd mean_r = Eigen::VectorXd::Zero(dim);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    mean_d += salience[i] * pairs[i].d;
    mean_r += salience[i] * pairs[i].r;
  }
  const Eigen::VectorXd center = 0.5 * (mean_d + mean_r);

  std::vector<CandidatePair> out;
  out.reserve(pairs.size());
  for (const auto& pr : pairs) {
    CandidatePair moved;
    if (mode == TieMode::kAllConnected) {
      moved.d = center * m + pr.d * (1.0 - m);
      moved.r = center * m + pr.r * (1.0 - m);
    } else {
      moved.d = mean_d * m + pr.d * (1.0 - m);
      moved.r = mean_r * m + pr.r * (1.0 - m);
    }
    if ((moved.d - moved.r).norm() <= 1e-12 * std::max(1.0, pr.separation())) {
      detail::throw_degenerate("candidates coincide after the transform");
    }
    out.push_back(std::move(moved));
  }
  return out;
}

double sphere_axis_variance(double r, int n) {
  if (!(r > 0.0)) detail::throw_input("sphere radius must be positive");
  if (n < 1) detail::throw_input("sphere dimension must be at least 1");
  return r * r / static_cast<double>(n);
}

Eigen::VectorXd sample_sphere_axis_variances(double r, int n, std::size_t count, std::uint64_t seed) {
  sphere_axis_variance(r, n);
  if (count < 2) detail::throw_input("need at least two sphere samples");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sum2 = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd p(n);
  for (std::size_t k = 0; k < count; ++k) {
    double norm = 0.0;
    do {
      for (int a = 0; a < n; ++a) p[a] = normal(rng);
      norm = p.norm();
    } while (norm == 0.0);
    p *= r / norm;
    sum += p;
    sum2 += p.cwiseProduct(p);
  }
  const double c = static_cast<double>(count);
  Eigen::VectorXd mean = sum / c;
  return (sum2 / c - mean.cwiseProduct(mean));
}

}  // namespace mlpolar
