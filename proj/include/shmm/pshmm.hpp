#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "shmm/gmm.hpp"
#include "shmm/moments.hpp"
#include "shmm/projection.hpp"
#include "shmm/spectral.hpp"

namespace shmm {

enum class ProjectionVariant { kSimplex, kPolyhedron };
enum class WeightMode { kMoment, kProbability };

struct PshmmConfig {
  std::uint64_t seed = 0;
  ProjectionVariant variant = ProjectionVariant::kSimplex;
  WeightMode weight_mode = WeightMode::kMoment;
  BasisSource source = BasisSource::kBigram;
  SvdMethod method = SvdMethod::kDense;
  RandomizedSvdOptions rsvd;
  GmmOptions gmm;
  PolyhedronOptions poly;
};

/// Projected spectral HMM: reduction basis, cluster means from a GMM, and
/// spectral operators built on the weight process. Immutable once fitted.
struct PshmmModel {
  ProjectionBasis basis;
  GaussianMixture mixture;
  SpectralMoments moments;  // weight-process moments
  SpectralOperators ops;
  ProjectionVariant variant = ProjectionVariant::kSimplex;
  WeightMode weight_mode = WeightMode::kMoment;
  PolyhedronOptions poly;

  int dim() const { return basis.dim(); }
  int obs_dim() const { return basis.obs_dim(); }

  /// Weight of a raw observation: M^{-1} U^T x (moment mode) or GMM
  /// responsibilities of U^T x (probability mode).
  Eigen::VectorXd observation_weight(const Eigen::VectorXd& x) const;

  /// Projection applied to a weight vector per the configured variant.
  Eigen::VectorXd apply_projection(const Eigen::VectorXd& w) const;

  /// Starting belief: the weight-process mean, projected.
  BeliefVector initial_belief() const;

  /// Observation-space prediction for a weight belief: U M w.
  Eigen::VectorXd reconstruct_weight(const Eigen::VectorXd& w) const;
};

/// Offline fit: basis SVD, reduction, GMM cluster means, weight process,
/// batch moments, operators. Deterministic given cfg.seed.
PshmmModel fit_pshmm(const Eigen::MatrixXd& x, int d, const PshmmConfig& cfg = {});

struct PshmmPrediction {
  BeliefVector w_next;
  Eigen::VectorXd x_hat;
  bool fallback = false;
};

/// One projected recursion step: w' = Proj(C(w_obs) w_prev / normalizer),
/// x_hat = U M w'. A degenerate normalizer falls back to Proj(w_prev) and is
/// flagged rather than surfaced.
PshmmPrediction predict_pshmm(const PshmmModel& model, const BeliefVector& w_prev,
                              const Eigen::VectorXd& w_obs);

/// Recursive predictions across a test block (row t of the result predicts
/// row t of x_test; one extra trailing row forecasts past the end).
PredictionRun predict_pshmm_run(const PshmmModel& model, const Eigen::MatrixXd& x_test);

struct OnlineStepOutput {
  Eigen::VectorXd x_hat;
  bool fallback = false;
};

/// Streaming PSHMM: warm-up fit, then per arrival a weight extraction, a
/// moment update (plain or forgetful), an operator rebuild, and a projected
/// prediction. The basis and cluster means stay frozen after warm-up;
/// numerical failures after warm-up flag the step and hold the belief
/// instead of halting the stream.
class OnlinePshmm {
 public:
  static OnlinePshmm warm_up(const Eigen::MatrixXd& x_warm, int d, double gamma,
                             const PshmmConfig& cfg = {});

  OnlineStepOutput step(const Eigen::VectorXd& x);

  /// Prediction for the next unseen arrival (emitted by warm_up/last step).
  const Eigen::VectorXd& pending_prediction() const { return pending_; }
  bool pending_fallback() const { return pending_fallback_; }

  const PshmmModel& model() const { return model_; }
  const MomentAccumulator& accumulator() const { return acc_; }

 private:
  OnlinePshmm(PshmmModel model, MomentAccumulator acc, double gamma);

  PshmmModel model_;
  MomentAccumulator acc_;
  double gamma_;
  BeliefVector belief_;
  Eigen::VectorXd pending_;
  bool pending_fallback_ = false;
};

struct OnlineRun {
  /// Row r predicts stream element warmup_len + 1 + r (1-based); the final
  /// row forecasts one step past the stream end.
  Eigen::MatrixXd predictions;
  std::vector<bool> fallback;
};

/// Runs the full online pipeline over a stream held in memory.
OnlineRun run_online_pshmm(const Eigen::MatrixXd& x, long warmup_len, double gamma,
                           int d, const PshmmConfig& cfg = {});

/// Streaming counterpart for the plain (unprojected) spectral HMM.
class OnlineShmm {
 public:
  static OnlineShmm warm_up(const Eigen::MatrixXd& x_warm, int d, double gamma,
                            const ShmmConfig& cfg = {});

  OnlineStepOutput step(const Eigen::VectorXd& x);
  const Eigen::VectorXd& pending_prediction() const { return pending_; }

 private:
  OnlineShmm(ShmmModel model, MomentAccumulator acc, double gamma);

  ShmmModel model_;
  MomentAccumulator acc_;
  double gamma_;
  Eigen::VectorXd belief_;
  Eigen::VectorXd pending_;
};

OnlineRun run_online_shmm(const Eigen::MatrixXd& x, long warmup_len, double gamma,
                          int d, const ShmmConfig& cfg = {});

}  // namespace shmm
