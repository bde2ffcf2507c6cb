#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "shmm/hmm_model.hpp"

namespace shmm {

/// Gaussian HMM with spherical per-state variance, fitted by Baum-Welch.
struct GhmmModel {
  int states = 0;
  Eigen::VectorXd pi0;
  Eigen::MatrixXd transition;  // row-stochastic
  Eigen::MatrixXd means;       // p x S
  Eigen::VectorXd variances;   // per-state sigma_s^2
  std::vector<double> loglik_trace;
  bool variance_floored = false;

  int obs_dim() const { return static_cast<int>(means.rows()); }
};

struct BaumWelchOptions {
  int max_iters = 200;
  double tol = 1e-6;
  int restarts = 3;
  double variance_floor = 1e-8;
};

/// Scaled forward-backward EM. Seed controls the k-means++ initialization of
/// the state means; the best of `restarts` runs by final log-likelihood wins.
GhmmModel fit_baum_welch(const Eigen::MatrixXd& x, int states, std::uint64_t seed,
                         const BaumWelchOptions& opts = {});

struct FilterResult {
  Eigen::VectorXd posterior;  // P(h_t | x_{1:t})
  bool underflow_reset = false;
};

/// Scaled forward recursion; x may be empty (returns pi0). A step where all
/// emission densities underflow resets to uniform and flags it.
FilterResult forward_filter(const GhmmModel& model, const Eigen::MatrixXd& x);

/// One filtering step: posterior' proportional to dens(x) .* prior, where
/// prior = pi0 for the first observation and T^T posterior afterwards.
/// Returns the uniform distribution (flag set) on total underflow.
FilterResult filter_step(const GhmmModel& model, const Eigen::VectorXd& posterior,
                         const Eigen::VectorXd& x, bool first);

/// Expected next observation given the filtering posterior: means (T^T f).
Eigen::VectorXd filter_prediction(const GhmmModel& model, const Eigen::VectorXd& posterior);

/// Full-sample log-likelihood under the model (scaled forward pass).
double ghmm_loglik(const GhmmModel& model, const Eigen::MatrixXd& x);

/// Oracle knowing all parameters and the current hidden state (1-based).
Eigen::VectorXd strong_oracle_predict(const HmmSpec& spec, int h_t);

/// Oracle knowing parameters only: filter the observations, then predict.
Eigen::VectorXd limited_oracle_predict(const HmmSpec& spec, const Eigen::MatrixXd& x);

/// Builds the filtering view of a generative spec (exact parameters).
GhmmModel ghmm_from_spec(const HmmSpec& spec);

/// Per-dimension lag-1 least squares x_{t+1} = a + b x_t.
struct Ar1Model {
  Eigen::VectorXd intercept;
  Eigen::VectorXd slope;
};

Ar1Model fit_ar1(const Eigen::MatrixXd& x);
Eigen::VectorXd predict_ar1(const Ar1Model& model, const Eigen::VectorXd& x_last);

}  // namespace shmm
