#include "shmm/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "shmm/errors.hpp"

namespace shmm {

Eigen::VectorXd project_simplex(const Eigen::VectorXd& u) {
  const int d = static_cast<int>(u.size());
  if (d < 1) throw std::invalid_argument("project_simplex: empty input");
  if (!u.allFinite()) throw std::invalid_argument("project_simplex: non-finite input");

  std::vector<double> z(u.data(), u.data() + d);
  std::stable_sort(z.begin(), z.end(), std::greater<double>());

  double cum = 0.0;
  double lambda = 0.0;
  for (int i = 0; i < d; ++i) {
    cum += z[i];
    const double shift = (1.0 - cum) / static_cast<double>(i + 1);
    if (z[i] + shift > 0.0) lambda = shift;
  }
  return u.array().unaryExpr([lambda](double x) { return std::max(x + lambda, 0.0); });
}

namespace {

// Centering objective ||m w - y||^2 - (1/t) sum_i log w_i with
// w = [v; 1 - sum v], v unconstrained up to strict feasibility w > 0.
// Keeping the data term at unit scale (instead of multiplying it by t)
// leaves the Newton decrement meaningful at every barrier stage.
struct BarrierProblem {
  const Eigen::MatrixXd& m;
  const Eigen::VectorXd& y;
  double inv_t;

  Eigen::VectorXd lift(const Eigen::VectorXd& v) const {
    const int k = static_cast<int>(v.size()) + 1;
    Eigen::VectorXd w(k);
    w.head(k - 1) = v;
    w(k - 1) = 1.0 - v.sum();
    return w;
  }

  double value(const Eigen::VectorXd& w) const {
    return (m * w - y).squaredNorm() - inv_t * w.array().log().sum();
  }

  // Exact decrease f(w + s dw) - f(w) in difference form: the expanded
  // quadratic plus log1p barrier terms avoid the cancellation that makes a
  // value-vs-value Armijo test blind once s * dec^2 drops below the
  // objective's representational noise.
  double decrease(const Eigen::VectorXd& w, const Eigen::VectorXd& dw, double s,
                  const Eigen::VectorXd& residual, const Eigen::VectorXd& m_dw) const {
    double delta = 2.0 * s * residual.dot(m_dw) + s * s * m_dw.squaredNorm();
    for (int i = 0; i < w.size(); ++i) {
      const double ratio = s * dw(i) / w(i);
      if (ratio <= -1.0) return std::numeric_limits<double>::infinity();
      delta -= inv_t * std::log1p(ratio);
    }
    return delta;
  }

  // Gradient and Hessian in the reduced variable v.
  void derivatives(const Eigen::VectorXd& w, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
    const int k = static_cast<int>(w.size());
    const Eigen::VectorXd grad_w =
        2.0 * m.transpose() * (m * w - y) - inv_t * w.cwiseInverse();
    grad = grad_w.head(k - 1).array() - grad_w(k - 1);

    Eigen::MatrixXd hess_w = 2.0 * m.transpose() * m;
    hess_w.diagonal() += inv_t * w.array().square().inverse().matrix();
    // J^T H J with J = [I; -1^T].
    const double corner = hess_w(k - 1, k - 1);
    hess = hess_w.topLeftCorner(k - 1, k - 1);
    hess.rowwise() -= hess_w.row(k - 1).head(k - 1).eval();
    hess.colwise() -= hess_w.col(k - 1).head(k - 1).eval();
    hess.array() += corner;
  }
};

}  // namespace

Eigen::VectorXd polyhedron_weights(const Eigen::VectorXd& y, const Eigen::MatrixXd& m,
                                   const PolyhedronOptions& opts) {
  const int k = static_cast<int>(m.cols());
  if (k < 1) throw std::invalid_argument("polyhedron_weights: need at least one column");
  if (m.rows() != y.size()) throw std::invalid_argument("polyhedron_weights: shape mismatch");
  if (k == 1) return Eigen::VectorXd::Ones(1);

  Eigen::VectorXd v = Eigen::VectorXd::Constant(k - 1, 1.0 / k);
  double t = opts.barrier_t0;
  while (true) {
    BarrierProblem prob{m, y, 1.0 / t};
    Eigen::VectorXd grad(k - 1);
    Eigen::MatrixXd hess(k - 1, k - 1);

    int iter = 0;
    for (; iter < opts.max_newton_iters; ++iter) {
      const Eigen::VectorXd w = prob.lift(v);
      prob.derivatives(w, grad, hess);
      const Eigen::VectorXd step = hess.ldlt().solve(-grad);
      const double decrement2 = -grad.dot(step);
      if (decrement2 / 2.0 < opts.newton_tol) break;

      Eigen::VectorXd dw(k);
      dw.head(k - 1) = step;
      dw(k - 1) = -step.sum();
      const Eigen::VectorXd residual = m * w - y;
      const Eigen::VectorXd m_dw = m * dw;

      double s = 1.0;
      bool moved = false;
      while (s >= 1e-16) {
        if (prob.decrease(w, dw, s, residual, m_dw) <=
            -opts.backtrack_alpha * s * decrement2) {
          moved = true;
          break;
        }
        s *= opts.backtrack_beta;
      }
      if (!moved) break;  // no certifiable progress at any scale
      v += s * step;
    }
    if (iter >= opts.max_newton_iters)
      throw OptimizationError("polyhedron_weights: Newton schedule exhausted", prob.lift(v));

    if (static_cast<double>(k) / t < opts.barrier_gap) break;
    t *= opts.barrier_multiplier;
  }
  Eigen::VectorXd w(k);
  w.head(k - 1) = v;
  w(k - 1) = 1.0 - v.sum();

  // Crossover polish: the central-path iterate identifies the active set;
  // re-solving the equality-constrained least squares on the free support
  // removes the O(sqrt(gap)) barrier bias. Kept only when it satisfies the
  // full KKT conditions.
  std::vector<int> support;
  for (int i = 0; i < k; ++i)
    if (w(i) > 1e-4) support.push_back(i);
  if (!support.empty() && static_cast<int>(support.size()) <= k) {
    const int s = static_cast<int>(support.size());
    Eigen::MatrixXd ms(m.rows(), s);
    for (int i = 0; i < s; ++i) ms.col(i) = m.col(support[i]);
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
    kkt.topLeftCorner(s, s) = 2.0 * ms.transpose() * ms;
    kkt.topRightCorner(s, 1).setOnes();
    kkt.bottomLeftCorner(1, s).setOnes();
    Eigen::VectorXd rhs(s + 1);
    rhs.head(s) = 2.0 * ms.transpose() * y;
    rhs(s) = 1.0;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);

    Eigen::VectorXd polished = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < s; ++i) polished(support[i]) = sol(i);
    const double nu = sol(s);
    bool ok = polished.minCoeff() >= 0.0;
    if (ok) {
      // Dual feasibility for the zeroed coordinates: lambda_j = g_j + nu >= 0.
      const Eigen::VectorXd grad = 2.0 * m.transpose() * (m * polished - y);
      for (int i = 0; i < k && ok; ++i)
        if (polished(i) == 0.0) ok = grad(i) + nu >= -1e-9;
    }
    if (ok) w = polished;
  }
  return w;
}

Eigen::VectorXd project_polyhedron(const Eigen::VectorXd& y, const Eigen::MatrixXd& m,
                                   const PolyhedronOptions& opts) {
  return m * polyhedron_weights(y, m, opts);
}

}  // namespace shmm
