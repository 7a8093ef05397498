#pragma once

#include <functional>

#include <Eigen/Dense>

#include "mlpolar/axes.hpp"

namespace mlpolar {

/// Election on a multidimensional electorate: cloud -> outcome d-vector.
using MultiElection = std::function<Eigen::VectorXd(const OpinionCloud&)>;

/// Weighted mean of the cloud.
Eigen::VectorXd mean_election(const OpinionCloud& cloud);

/// Weighted lower median of each coordinate separately.
Eigen::VectorXd coordinatewise_median_election(const OpinionCloud& cloud);

struct RepTensorOptions {
  /// Step per coordinate; empty selects 1e-4 times each coordinate's standard
  /// deviation (1e-4 where that is zero).
  Eigen::VectorXd step;
  /// Combine steps h and h/2 as (4 D(h/2) - D(h)) / 3.
  bool richardson = false;
};

/// r_{mu nu} = d y_mu / d x^i_nu by central differences: column nu is
/// [y(x_i + h e_nu) - y(x_i - h e_nu)] / 2h.
Eigen::MatrixXd rep_tensor(const MultiElection& election, const OpinionCloud& cloud, Eigen::Index i,
                           const RepTensorOptions& options = {});

Eigen::VectorXd default_steps(const OpinionCloud& cloud);

/// Representation along c = a e + b o, split by the direction of the opinion change.
struct DirectionalRep {
  double a = 0.0;
  double b = 0.0;
  /// c^T t c.
  double total = 0.0;
  /// a^2 e^T t e + ab o^T t e.
  double on_axis = 0.0;
  /// b^2 o^T t o + ab e^T t o.
  double off_axis = 0.0;
  /// ab (e^T t o + o^T t e): outcome change orthogonal to the opinion change.
  double cross = 0.0;
};

/// `e` and `o` must be orthonormal and `c` a unit vector in their span.
DirectionalRep directional_rep(const Eigen::MatrixXd& t, const Eigen::VectorXd& c, const Eigen::VectorXd& e,
                               const Eigen::VectorXd& o);

/// As above with o taken as the normalized part of c orthogonal to e, or, when c is
/// parallel to e, the first standard basis vector Gram-Schmidt leaves nonzero.
DirectionalRep directional_rep(const Eigen::MatrixXd& t, const Eigen::VectorXd& c, const Eigen::VectorXd& e);

Eigen::VectorXd orthogonal_completion(const Eigen::VectorXd& c, const Eigen::VectorXd& e);

}  // namespace mlpolar
