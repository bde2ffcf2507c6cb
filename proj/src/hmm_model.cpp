#include "shmm/hmm_model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "shmm/errors.hpp"

namespace shmm {

namespace {

// Draws an index in [0, probs.size()) from the discrete distribution given by
// probs (assumed to sum to ~1) using a single uniform variate.
int draw_categorical(const Eigen::VectorXd& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double cum = 0.0;
  for (int i = 0; i < probs.size(); ++i) {
    cum += probs(i);
    if (u < cum) return i;
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

void HmmSpec::validate() const {
  if (states < 2) throw std::invalid_argument("HmmSpec: need at least 2 states");
  if (pi0.size() != states || transition.rows() != states || transition.cols() != states ||
      means.cols() != states)
    throw std::invalid_argument("HmmSpec: inconsistent dimensions");
  if (std::abs(pi0.sum() - 1.0) > 1e-12 || pi0.minCoeff() < 0.0)
    throw std::invalid_argument("HmmSpec: pi0 is not a probability vector");
  for (int i = 0; i < states; ++i) {
    if (std::abs(transition.row(i).sum() - 1.0) > 1e-12 || transition.row(i).minCoeff() < 0.0)
      throw std::invalid_argument("HmmSpec: transition rows must be stochastic");
  }
  if (sigma < 0.0) throw std::invalid_argument("HmmSpec: sigma must be non-negative");
  if (family == EmissionFamily::kStudentT && t_dof < 1)
    throw std::invalid_argument("HmmSpec: t degrees of freedom must be positive");
}

Eigen::MatrixXd build_transition(int states, double p_stay) {
  if (states < 2) throw std::invalid_argument("build_transition: need at least 2 states");
  if (!(p_stay > 0.0 && p_stay < 1.0))
    throw std::invalid_argument("build_transition: p_stay must lie in (0,1)");
  const double off = (1.0 - p_stay) / static_cast<double>(states - 1);
  Eigen::MatrixXd t = Eigen::MatrixXd::Constant(states, states, off);
  t.diagonal().setConstant(p_stay);
  return t;
}

Eigen::MatrixXd one_hot_means(int states, int obs_dim) {
  if (states < 1) throw std::invalid_argument("one_hot_means: need at least 1 state");
  if (obs_dim < states) throw std::invalid_argument("one_hot_means: requires obs_dim >= states");
  return Eigen::MatrixXd::Identity(obs_dim, states);
}

Trajectory sample_trajectory(const HmmSpec& spec, long length, std::uint64_t seed) {
  spec.validate();
  if (length < 1) throw std::invalid_argument("sample_trajectory: length must be >= 1");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::student_t_distribution<double> student(static_cast<double>(spec.t_dof));

  const int p = spec.obs_dim();
  Trajectory traj;
  traj.states.resize(length);
  traj.observations.resize(length, p);

  int state = draw_categorical(spec.pi0, rng);
  for (long t = 0; t < length; ++t) {
    if (t > 0) state = draw_categorical(spec.transition.row(state).transpose(), rng);
    traj.states[t] = state + 1;
    for (int j = 0; j < p; ++j) {
      const double noise =
          spec.family == EmissionFamily::kGaussian ? gauss(rng) : student(rng);
      traj.observations(t, j) = spec.means(j, state) + spec.sigma * noise;
    }
  }
  return traj;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition) {
  const int s = static_cast<int>(transition.rows());
  if (transition.cols() != s || s < 1)
    throw std::invalid_argument("stationary_distribution: matrix must be square");

  constexpr double kTol = 1e-13;
  constexpr int kMaxIters = 100000;
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(s, 1.0 / s);
  for (int it = 0; it < kMaxIters; ++it) {
    Eigen::VectorXd next = transition.transpose() * pi;
    next /= next.sum();
    const double diff = (next - pi).lpNorm<1>();
    pi = next;
    if (diff < kTol) return pi;
  }
  throw NumericalError("stationary_distribution: power iteration did not converge");
}

Eigen::MatrixXd population_bigram(const HmmSpec& spec) {
  spec.validate();
  const Eigen::VectorXd pi = stationary_distribution(spec.transition);
  // E[x_2 x_1^T] = M B diag(pi) M^T with B := transition^T, the
  // column-stochastic operator taking a state law one step forward.
  return spec.means * spec.transition.transpose() * pi.asDiagonal() * spec.means.transpose();
}

SpectralMoments population_moments(const HmmSpec& spec, const Eigen::MatrixXd& u) {
  spec.validate();
  if (u.rows() != spec.obs_dim()) throw std::invalid_argument("population_moments: U rows != p");
  const int d = static_cast<int>(u.cols());
  if (d > spec.states)
    throw std::invalid_argument("population_moments: reduced dimension exceeds state count");

  const Eigen::VectorXd pi = stationary_distribution(spec.transition);
  const Eigen::MatrixXd a = u.transpose() * spec.means;  // d x S, column s = U^T M_s
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-12 * sv(0))
      throw SingularMatrixError("population_moments: U^T M is rank deficient",
                                sv(0) / std::max(sv(sv.size() - 1), 1e-300));
  }

  const Eigen::MatrixXd b = spec.transition.transpose();  // column-stochastic
  const Eigen::MatrixXd b_dpi_at = b * pi.asDiagonal() * a.transpose();  // S x d

  SpectralMoments m;
  m.mu = a * pi;
  m.sigma = a * b_dpi_at;
  m.k = Tensor3(d);
  // K(e_k) = A B diag(A^T e_k) B diag(pi) A^T, assembled column-slice by
  // column-slice of the tensor's last index.
  const Eigen::MatrixXd ab = a * b;  // d x S
  for (int k = 0; k < d; ++k) {
    const Eigen::VectorXd row_k = a.row(k).transpose();  // A^T e_k over states
    const Eigen::MatrixXd slice = ab * row_k.asDiagonal() * b_dpi_at;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m.k(i, j, k) = slice(i, j);
  }
  m.n_points = 0;
  return m;
}

}  // namespace shmm
