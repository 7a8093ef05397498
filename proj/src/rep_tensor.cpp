#include "mlpolar/rep_tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "mlpolar/errors.hpp"

namespace mlpolar {

Eigen::VectorXd mean_election(const OpinionCloud& cloud) { return cloud.mean(); }

Eigen::VectorXd coordinatewise_median_election(const OpinionCloud& cloud) {
  const auto& x = cloud.points();
  const auto& w = cloud.weights();
  Eigen::VectorXd out(cloud.dimension());
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(cloud.size()));
  for (Eigen::Index c = 0; c < cloud.dimension(); ++c) {
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return x(a, c) < x(b, c); });
    double cum = 0.0;
    out[c] = x(idx.back(), c);
    for (auto i : idx) {
      cum += w[i];
      if (cum >= 0.5 - 1e-12) {
        out[c] = x(i, c);
        break;
      }
    }
  }
  return out;
}

Eigen::VectorXd default_steps(const OpinionCloud& cloud) {
  Eigen::VectorXd sd = cloud.covariance().diagonal().cwiseSqrt();
  for (Eigen::Index c = 0; c < sd.size(); ++c) sd[c] = sd[c] > 0.0 ? 1e-4 * sd[c] : 1e-4;
  return sd;
}

namespace {

Eigen::MatrixXd central_difference(const MultiElection& election, const OpinionCloud& cloud, Eigen::Index i,
                                   const Eigen::VectorXd& step) {
  const Eigen::Index d = cloud.dimension();
  const Eigen::VectorXd x = cloud.points().row(i).transpose();
  Eigen::MatrixXd t;
  for (Eigen::Index nu = 0; nu < d; ++nu) {
    Eigen::VectorXd up = x;
    Eigen::VectorXd down = x;
    up[nu] += step[nu];
    down[nu] -= step[nu];
    const Eigen::VectorXd yu = election(cloud.with_point(i, up));
    const Eigen::VectorXd yd = election(cloud.with_point(i, down));
    if (!yu.allFinite() || !yd.allFinite()) detail::throw_degenerate("election produced a nonfinite outcome");
    if (nu == 0) t.resize(yu.size(), d);
    if (yu.size() != t.rows() || yd.size() != t.rows()) detail::throw_input("election outcome size changed");
    t.col(nu) = (yu - yd) / (2.0 * step[nu]);
  }
  return t;
}

}  // namespace

Eigen::MatrixXd rep_tensor(const MultiElection& election, const OpinionCloud& cloud, Eigen::Index i,
                           const RepTensorOptions& options) {
  if (i < 0 || i >= cloud.size()) detail::throw_input("voter index " + std::to_string(i) + " out of range");
  Eigen::VectorXd step = options.step.size() == 0 ? default_steps(cloud) : options.step;
  if (step.size() != cloud.dimension()) detail::throw_input("need one finite-difference step per coordinate");
  if ((step.array() <= 0.0).any()) detail::throw_input("finite-difference steps must be positive");
  Eigen::MatrixXd t = central_difference(election, cloud, i, step);
  if (options.richardson) {
    const Eigen::MatrixXd half = central_difference(election, cloud, i, step / 2.0);
    t = (4.0 * half - t) / 3.0;
  }
  return t;
}

DirectionalRep directional_rep(const Eigen::MatrixXd& t, const Eigen::VectorXd& c, const Eigen::VectorXd& e,
                               const Eigen::VectorXd& o) {
  const Eigen::Index d = t.rows();
  if (t.cols() != d || c.size() != d || e.size() != d || o.size() != d) {
    detail::throw_input("tensor and direction dimensions disagree");
  }
  constexpr double tol = 1e-9;
  if (std::abs(e.norm() - 1.0) > tol || std::abs(o.norm() - 1.0) > tol || std::abs(e.dot(o)) > tol) {
    detail::throw_input("axis e and orthogonal direction o must be orthonormal");
  }
  DirectionalRep r;
  r.a = c.dot(e);
  r.b = c.dot(o);
  if ((c - r.a * e - r.b * o).norm() > tol || std::abs(r.a * r.a + r.b * r.b - 1.0) > tol) {
    detail::throw_input("direction c must be a unit vector in span(e, o)");
  }
  const double ee = e.dot(t * e);
  const double oo = o.dot(t * o);
  const double eo = e.dot(t * o);
  const double oe = o.dot(t * e);
  r.total = c.dot(t * c);
  r.on_axis = r.a * r.a * ee + r.a * r.b * oe;
  r.off_axis = r.b * r.b * oo + r.a * r.b * eo;
  r.cross = r.a * r.b * (eo + oe);
  return r;
}

Eigen::VectorXd orthogonal_completion(const Eigen::VectorXd& c, const Eigen::VectorXd& e) {
  if (c.size() != e.size()) detail::throw_input("direction dimensions disagree");
  Eigen::VectorXd o = c - c.dot(e) * e;
  if (o.norm() > 1e-12) return o.normalized();
  for (Eigen::Index k = 0; k < e.size(); ++k) {
    Eigen::VectorXd basis = Eigen::VectorXd::Unit(e.size(), k);
    o = basis - basis.dot(e) * e;
    if (o.norm() > 1e-6) return o.normalized();
  }
  detail::throw_degenerate("no orthogonal completion in one dimension");
}

DirectionalRep directional_rep(const Eigen::MatrixXd& t, const Eigen::VectorXd& c, const Eigen::VectorXd& e) {
  return directional_rep(t, c, e, orthogonal_completion(c, e));
}

}  // namespace mlpolar
