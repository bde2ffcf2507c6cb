#pragma once

#include <Eigen/Core>

namespace shmm {

/// Exact Euclidean projection onto the probability simplex in O(d log d):
/// sort descending, find the pivot rho, shift by lambda, clamp at zero.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& u);

struct PolyhedronOptions {
  double barrier_t0 = 1.0;
  double barrier_multiplier = 10.0;
  double barrier_gap = 1e-8;    // outer stop when (#constraints)/t < gap
  double newton_tol = 1e-10;    // on the Newton decrement
  double backtrack_alpha = 0.25;
  double backtrack_beta = 0.5;
  int max_newton_iters = 200;
};

/// argmin_{w on simplex} ||m w - y||_2^2 by a log-barrier interior-point
/// method (barrier on w >= 0, the equality sum w = 1 eliminated by
/// parameterizing the last coordinate). Returns the weight vector.
Eigen::VectorXd polyhedron_weights(const Eigen::VectorXd& y, const Eigen::MatrixXd& m,
                                   const PolyhedronOptions& opts = {});

/// Euclidean projection of y onto the polyhedron {m w : w on simplex};
/// returns the projected point m w*.
Eigen::VectorXd project_polyhedron(const Eigen::VectorXd& y, const Eigen::MatrixXd& m,
                                   const PolyhedronOptions& opts = {});

}  // namespace shmm
