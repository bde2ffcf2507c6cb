#include "shmm/moments.hpp"

#include <stdexcept>

#include "shmm/errors.hpp"

namespace shmm {

Eigen::VectorXd flatten(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("flatten: matrix must be square");
  const int d = static_cast<int>(a.rows());
  Eigen::VectorXd v(static_cast<long>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) v(static_cast<long>(i) * d + j) = a(i, j);
  return v;
}

Eigen::VectorXd flatten(const Tensor3& b) {
  return Eigen::Map<const Eigen::VectorXd>(b.raw().data(), static_cast<long>(b.size()));
}

Eigen::MatrixXd unflatten_matrix(const Eigen::VectorXd& v, int dim) {
  if (v.size() != static_cast<long>(dim) * dim)
    throw std::invalid_argument("unflatten_matrix: size mismatch");
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = v(static_cast<long>(i) * dim + j);
  return a;
}

Tensor3 unflatten_tensor(const Eigen::VectorXd& v, int dim) {
  if (v.size() != static_cast<long>(dim) * dim * dim)
    throw std::invalid_argument("unflatten_tensor: size mismatch");
  Tensor3 t(dim);
  std::copy(v.data(), v.data() + v.size(), t.raw().begin());
  return t;
}

SpectralMoments estimate_batch(const Eigen::MatrixXd& y) {
  const long l = y.rows();
  const int d = static_cast<int>(y.cols());
  if (l < 3) throw InsufficientDataError("estimate_batch: need at least 3 rows");

  SpectralMoments m;
  m.mu = y.colwise().mean().transpose();
  m.sigma = Eigen::MatrixXd::Zero(d, d);
  for (long t = 0; t + 1 < l; ++t) m.sigma += y.row(t + 1).transpose() * y.row(t);
  m.sigma /= static_cast<double>(l - 1);
  m.k = Tensor3(d);
  for (long t = 0; t + 2 < l; ++t)
    m.k.add_outer(y.row(t + 2).transpose(), y.row(t).transpose(), y.row(t + 1).transpose());
  m.k *= 1.0 / static_cast<double>(l - 2);
  m.n_points = l;
  return m;
}

MomentAccumulator::MomentAccumulator(int dim)
    : dim_(dim),
      s_mu_(Eigen::VectorXd::Zero(dim)),
      s_sigma_(Eigen::MatrixXd::Zero(dim, dim)),
      s_k_(dim) {
  if (dim < 1) throw std::invalid_argument("MomentAccumulator: dimension must be positive");
}

MomentAccumulator MomentAccumulator::warm_start(const SpectralMoments& m,
                                                const Eigen::VectorXd& second_last,
                                                const Eigen::VectorXd& last) {
  const int d = m.dim();
  if (m.n_points < 3) throw InsufficientDataError("warm_start: batch block too short");
  if (second_last.size() != d || last.size() != d)
    throw std::invalid_argument("warm_start: history dimension mismatch");
  MomentAccumulator acc(d);
  acc.n_points_ = m.n_points;
  acc.w_mu_ = static_cast<double>(m.n_points);
  acc.w_sigma_ = static_cast<double>(m.n_points - 1);
  acc.w_k_ = static_cast<double>(m.n_points - 2);
  acc.s_mu_ = m.mu * acc.w_mu_;
  acc.s_sigma_ = m.sigma * acc.w_sigma_;
  acc.s_k_ = m.k * acc.w_k_;
  acc.last_ = last;
  acc.second_last_ = second_last;
  return acc;
}

void MomentAccumulator::prime(const Eigen::VectorXd& y, double gamma) {
  if (warm()) throw std::logic_error("prime: accumulator already warm");
  if (y.size() != dim_) throw std::invalid_argument("prime: dimension mismatch");
  const double keep = 1.0 - gamma;
  decay_ = gamma;
  if (n_points_ == 0) {
    s_mu_ = y;
    w_mu_ = 1.0;
    last_ = y;
  } else {
    s_mu_ = keep * s_mu_ + y;
    w_mu_ = keep * w_mu_ + 1.0;
    s_sigma_ = y * last_.transpose();
    w_sigma_ = 1.0;
    second_last_ = last_;
    last_ = y;
  }
  ++n_points_;
}

SpectralMoments MomentAccumulator::moments() const {
  SpectralMoments m;
  m.mu = w_mu_ > 0 ? Eigen::VectorXd(s_mu_ / w_mu_) : Eigen::VectorXd::Zero(dim_).eval();
  m.sigma = w_sigma_ > 0 ? Eigen::MatrixXd(s_sigma_ / w_sigma_)
                         : Eigen::MatrixXd::Zero(dim_, dim_).eval();
  m.k = s_k_;
  if (w_k_ > 0) m.k *= 1.0 / w_k_;
  m.n_points = n_points_;
  return m;
}

void MomentAccumulator::step(const Eigen::VectorXd& y, double gamma) {
  if (!warm()) throw NotWarmError("moment update before two priming observations");
  if (y.size() != dim_) throw std::invalid_argument("step: dimension mismatch");
  const double keep = 1.0 - gamma;
  decay_ = gamma;

  s_mu_ = keep * s_mu_ + y;
  w_mu_ = keep * w_mu_ + 1.0;
  s_sigma_ = keep * s_sigma_ + y * last_.transpose();
  w_sigma_ = keep * w_sigma_ + 1.0;
  s_k_ *= keep;
  s_k_.add_outer(y, second_last_, last_);
  w_k_ = keep * w_k_ + 1.0;

  second_last_ = last_;
  last_ = y;
  ++n_points_;
}

void update_online(MomentAccumulator& acc, const Eigen::VectorXd& y_new) {
  acc.step(y_new, 0.0);
}

void update_forgetful(MomentAccumulator& acc, const Eigen::VectorXd& y_new, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("update_forgetful: gamma must lie in (0,1)");
  acc.step(y_new, gamma);
}

}  // namespace shmm
