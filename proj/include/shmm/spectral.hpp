#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "shmm/moments.hpp"

namespace shmm {

enum class BasisSource { kBigram, kUnigram };
enum class SvdMethod { kDense, kRandomized };

struct RandomizedSvdOptions {
  int oversample = 5;
  int power_iters = 2;
  std::uint64_t seed = 0;
};

/// Orthonormal reduction basis: columns of u span the estimated signal
/// subspace, each column signed so its largest-magnitude entry is positive.
struct ProjectionBasis {
  Eigen::MatrixXd u;  // p x d
  BasisSource source = BasisSource::kBigram;
  SvdMethod method = SvdMethod::kDense;

  int obs_dim() const { return static_cast<int>(u.rows()); }
  int dim() const { return static_cast<int>(u.cols()); }
};

struct SvdResult {
  Eigen::MatrixXd left;
  Eigen::VectorXd singular_values;
  Eigen::MatrixXd right;
};

/// Estimates the reduction basis from raw observations (rows of x).
/// Bigram source: top-d left singular vectors of sum_t x_{t+1} x_t^T / (L-2);
/// unigram: of sum_t x_t x_t^T / L.
ProjectionBasis estimate_basis(const Eigen::MatrixXd& x, int d, BasisSource source,
                               SvdMethod method, const RandomizedSvdOptions& opts = {});

/// Randomized rank-d_tilde SVD of the lag-1 cross-product x2^T x1 / (L-2)
/// without forming the p x p matrix: sketch x1 and x2 separately, combine the
/// small cores, and rotate the factors back.
SvdResult randomized_bigram_svd(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2,
                                int d_tilde, const RandomizedSvdOptions& opts = {});

/// Randomized rank-k SVD of a general matrix (range sketch + power iterations).
SvdResult randomized_svd(const Eigen::MatrixXd& a, int rank, const RandomizedSvdOptions& opts);

/// Operators of the spectral recursion, immutable once built:
/// c1 = mu, c_inf^T = mu^T sigma^{-1}, C(y) = K(y) sigma^{-1}.
struct SpectralOperators {
  Eigen::VectorXd c1;
  Eigen::VectorXd c_inf;
  Tensor3 k;
  Eigen::MatrixXd sigma_inv;

  int dim() const { return static_cast<int>(c1.size()); }

  /// C(y) = K(y) sigma^{-1} with K(y) = sum_k y_k K(.,.,k).
  Eigen::MatrixXd transfer(const Eigen::VectorXd& y) const {
    return k.contract_last(y) * sigma_inv;
  }
};

/// Builds operators from moment estimates; throws SingularMatrixError when
/// sigma's condition estimate exceeds 1e12.
SpectralOperators build_operators(const SpectralMoments& m);

struct SequenceScore {
  double log_magnitude = 0.0;
  int sign = 0;

  double value() const { return sign * std::exp(log_magnitude); }
};

/// Evaluates c_inf^T C(y_T) ... C(y_1) c1 right to left with per-step
/// max-norm rescaling; returns log magnitude and sign. T = 0 gives the empty
/// product c_inf^T c1.
SequenceScore sequence_score(const SpectralOperators& ops, const Eigen::MatrixXd& y);

struct BeliefVector {
  Eigen::VectorXd b;
};

/// One un-normalized recursion step; nullopt when the normalizer is
/// degenerate (|denominator| < 1e-12 * ||numerator||_1 or numerator = 0).
std::optional<Eigen::VectorXd> try_propagate(const SpectralOperators& ops,
                                             const Eigen::VectorXd& belief,
                                             const Eigen::VectorXd& y_prev);

/// Belief recursion b' = C(y_prev) b / (c_inf^T C(y_prev) b); throws
/// DegenerateBeliefError on a degenerate normalizer.
BeliefVector predict_next(const SpectralOperators& ops, const BeliefVector& belief,
                          const Eigen::VectorXd& y_prev);

/// Maps a reduced vector back to observation space: U y.
Eigen::VectorXd reconstruct(const ProjectionBasis& basis, const Eigen::VectorXd& y);

/// Plain spectral HMM fitted on the reduced process (basis + batch moments +
/// operators), with recursive one-step-ahead prediction.
struct ShmmModel {
  ProjectionBasis basis;
  SpectralMoments moments;
  SpectralOperators ops;
};

struct ShmmConfig {
  BasisSource source = BasisSource::kBigram;
  SvdMethod method = SvdMethod::kDense;
  RandomizedSvdOptions rsvd;
};

ShmmModel fit_shmm(const Eigen::MatrixXd& x, int d, const ShmmConfig& cfg = {});

/// Recursive predictions for each row of x_test plus one step beyond: row t
/// is the forecast of x_test row t made before observing it. Degenerate
/// normalizers fall back to holding the previous belief and are flagged.
struct PredictionRun {
  Eigen::MatrixXd predictions;     // (T+1) x p
  std::vector<bool> fallback;      // size T+1
};

PredictionRun predict_shmm(const ShmmModel& model, const Eigen::MatrixXd& x_test);

}  // namespace shmm
