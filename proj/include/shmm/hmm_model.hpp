#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "shmm/moments.hpp"

namespace shmm {

enum class EmissionFamily { kGaussian, kStudentT };

/// Generative hidden Markov model with spherical emissions.
///
/// `transition` is row-stochastic: transition(i,j) = P(h_{t+1}=j | h_t=i).
/// Column s of `means` is the emission mean of state s; the emission
/// covariance is sigma^2 * I in every state. For the Student-t family each
/// coordinate is an independent t_df draw scaled by sigma and shifted by the
/// state mean.
struct HmmSpec {
  int states = 0;
  Eigen::VectorXd pi0;
  Eigen::MatrixXd transition;
  Eigen::MatrixXd means;  // p x S
  double sigma = 0.0;
  EmissionFamily family = EmissionFamily::kGaussian;
  int t_dof = 5;

  int obs_dim() const { return static_cast<int>(means.rows()); }

  /// Validates stochasticity of pi0/transition and shape consistency.
  void validate() const;
};

/// States are 1-based (values in 1..S); observation row t was emitted by
/// states[t].
struct Trajectory {
  std::vector<int> states;
  Eigen::MatrixXd observations;  // L x p

  long length() const { return static_cast<long>(states.size()); }
};

/// Row-stochastic matrix with `p_stay` on the diagonal and the remaining mass
/// spread uniformly off-diagonal.
Eigen::MatrixXd build_transition(int states, double p_stay);

/// p x S matrix whose column i is the i-th standard basis vector.
Eigen::MatrixXd one_hot_means(int states, int obs_dim);

/// Samples a length-L trajectory. Deterministic given the seed.
Trajectory sample_trajectory(const HmmSpec& spec, long length, std::uint64_t seed);

/// Stationary distribution of a row-stochastic matrix by power iteration
/// (tolerance 1e-13, at most 1e5 iterations, uniform start).
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition);

/// Population bigram matrix E[x_{t+1} (x) x_t] under the stationary law.
Eigen::MatrixXd population_bigram(const HmmSpec& spec);

/// Population moments of the reduced process y_t = U^T x_t under the
/// stationary law. Emission noise is mean-zero and independent across time,
/// so only the state means enter these cross-lag moments; sigma and the
/// emission family drop out.
SpectralMoments population_moments(const HmmSpec& spec, const Eigen::MatrixXd& u);

}  // namespace shmm
