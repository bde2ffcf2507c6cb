#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace shmm {

/// Gaussian mixture fitted by EM. Components are kept in canonical order
/// (descending first mean coordinate, then lexicographic) so the mean matrix
/// is reproducible; HMM state labels are unidentifiable anyway.
struct GaussianMixture {
  int k = 0;
  Eigen::MatrixXd means;                   // d x k, column = component mean
  std::vector<Eigen::MatrixXd> covariances;  // k matrices, d x d
  Eigen::VectorXd weights;                 // length k

  struct FitMeta {
    std::vector<double> loglik_trace;
    int iterations = 0;
    std::uint64_t seed = 0;
    int restarts_used = 0;
  };
  FitMeta fit_meta;

  int dim() const { return static_cast<int>(means.rows()); }
};

struct GmmOptions {
  int restarts = 3;
  int max_iters = 300;
  double rel_tol = 1e-6;
  double covariance_floor = 1e-10;
  int collapse_retries = 5;
};

/// EM fit with k-means++ seeding; deterministic given the seed. Collapsed
/// components trigger a refit with a new sub-seed (up to
/// opts.collapse_retries) before failing with DegenerateMixtureError.
GaussianMixture fit_gmm(const Eigen::MatrixXd& y, int k, std::uint64_t seed,
                        const GmmOptions& opts = {});

/// Moment-based weights w = M^{-1} y by linear solve (square invertible M;
/// throws SingularMatrixError above condition 1e10). No simplex constraint.
Eigen::VectorXd weights_moment(const Eigen::VectorXd& y, const Eigen::MatrixXd& m_hat);

struct ProbabilityWeights {
  Eigen::VectorXd w;
  bool underflow_fallback = false;
};

/// Posterior responsibilities P(component | y) computed in log space; when
/// every component underflows the result falls back to uniform with a flag.
ProbabilityWeights weights_probability(const Eigen::VectorXd& y, const GaussianMixture& gmm);

/// Seeded k-means++ center selection (shared by GMM and Baum-Welch inits).
Eigen::MatrixXd kmeans_pp_centers(const Eigen::MatrixXd& y, int k, std::uint64_t seed);

}  // namespace shmm
