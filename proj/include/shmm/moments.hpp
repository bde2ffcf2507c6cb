#pragma once

#include <Eigen/Core>

#include "shmm/tensor3.hpp"

namespace shmm {

/// First three cross-moments of a d-dimensional reduced (or weight) process.
///
/// K uses the index convention (i,j,k) = E[Y3_i * Y1_j * Y2_k], so that the
/// contraction K(a) = sum_k K(.,.,k) a_k equals E(y3 y1^T y2^T) a. Every
/// consumer of the tensor relies on this single convention.
struct SpectralMoments {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  Tensor3 k;
  long n_points = 0;

  int dim() const { return static_cast<int>(mu.size()); }
};

/// Row-major flattening of a square matrix: [A(1,1), A(1,2), ..., A(d,d)].
Eigen::VectorXd flatten(const Eigen::MatrixXd& a);

/// Flattening of a cubic tensor, last index fastest:
/// [B(1,1,1), B(1,1,2), ..., B(1,1,d), B(1,2,1), ..., B(d,d,d)].
Eigen::VectorXd flatten(const Tensor3& b);

Eigen::MatrixXd unflatten_matrix(const Eigen::VectorXd& v, int dim);
Tensor3 unflatten_tensor(const Eigen::VectorXd& v, int dim);

/// Batch estimators over a length-L sequence (rows of y):
///   mu    = (1/L)     sum_{t=1..L}   Y_t
///   sigma = (1/(L-1)) sum_{t=1..L-1} Y_{t+1} (x) Y_t
///   k     = (1/(L-2)) sum_{t=1..L-2} Y_{t+2} (x) Y_t (x) Y_{t+1}
SpectralMoments estimate_batch(const Eigen::MatrixXd& y);

/// Streaming moment estimator with optional exponential forgetting.
///
/// Internally each moment is a decayed weighted sum divided by its own decayed
/// weight total, so that after consuming Y_1..Y_T with constant decay gamma:
///   mu    = sum_t (1-g)^{T-t} Y_t                / sum_{t=1..T} (1-g)^{T-t}
///   sigma = sum_{t=2..T} (1-g)^{T-t} Y_t(x)Y_{t-1} / sum_{t=2..T} (1-g)^{T-t}
///   k     = sum_{t=3..T} (1-g)^{T-t} Y_t(x)Y_{t-2}(x)Y_{t-1}
///                                               / sum_{t=3..T} (1-g)^{T-t}
/// exactly, and at gamma = 0 the three divisors reduce to T, T-1, T-2 (the
/// running-mean updates with divisors T+1, T, T-1 per step). effective_n
/// reports the mean's weight total sum_{i=1..T}(1-g)^{i-1}.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(int dim);

  /// Warm start from a batch estimate. `second_last` and `last` are the final
  /// two rows of the block the batch estimate was computed on.
  static MomentAccumulator warm_start(const SpectralMoments& m,
                                      const Eigen::VectorXd& second_last,
                                      const Eigen::VectorXd& last);

  /// Feed one of the first two observations. Only the contributions that
  /// exist at that point (mean, then the first lag-1 pair) are folded in.
  void prime(const Eigen::VectorXd& y, double gamma = 0.0);

  bool warm() const { return n_points_ >= 2; }
  int dim() const { return dim_; }
  long n_points() const { return n_points_; }
  double effective_n() const { return w_mu_; }
  double decay() const { return decay_; }
  const Eigen::VectorXd& last() const { return last_; }
  const Eigen::VectorXd& second_last() const { return second_last_; }

  /// Current moment estimates (ratios of the decayed sums).
  SpectralMoments moments() const;

  /// One streaming step; gamma = 0 is the plain online update.
  void step(const Eigen::VectorXd& y, double gamma);

 private:
  int dim_;
  long n_points_ = 0;
  double decay_ = 0.0;
  double w_mu_ = 0.0, w_sigma_ = 0.0, w_k_ = 0.0;
  Eigen::VectorXd s_mu_;
  Eigen::MatrixXd s_sigma_;
  Tensor3 s_k_;
  Eigen::VectorXd last_, second_last_;
};

/// Online update with no forgetting (running means with divisors T+1, T, T-1).
void update_online(MomentAccumulator& acc, const Eigen::VectorXd& y_new);

/// Forgetful update with decay gamma in (0,1).
void update_forgetful(MomentAccumulator& acc, const Eigen::VectorXd& y_new, double gamma);

}  // namespace shmm
