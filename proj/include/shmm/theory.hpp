#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "shmm/hmm_model.hpp"
#include "shmm/moments.hpp"

namespace shmm {

/// First-order coefficients of the likelihood's error expansion around the
/// population moments, for a fixed reduced sequence y_{1:T}.
///
/// Writing the chain P = mu^T S K(y_T) S K(y_{T-1}) S ... K(y_1) S mu with
/// S = sigma^{-1}: `v`/`v_tilde` multiply the mean perturbation at either
/// end, `a[t]`/`a_tilde[t]` flank the K(y_t) perturbation (t = 1..T, stored
/// at index t-1), and `b[t]`/`b_tilde[t]` flank the perturbation of the t-th
/// inverse (t = 0..T; t = T is the leading one, t = 0 the trailing one).
/// beta stacks [(v + v_tilde); -sum_t F(b_t (x) b_tilde_t);
/// sum_t F(a_t (x) a_tilde_t (x) y_t)].
struct ErrorExpansionCoefficients {
  Eigen::VectorXd v, v_tilde;
  std::vector<Eigen::VectorXd> a, a_tilde;   // size T
  std::vector<Eigen::VectorXd> b, b_tilde;   // size T+1, index t = 0..T
  Eigen::VectorXd beta;                      // length d + d^2 + d^3

  /// Value of the unperturbed chain (the population sequence score).
  double chain_value = 0.0;

  /// First-order term for a given moment perturbation, via beta.
  double linear_term(const Eigen::VectorXd& d_mu, const Eigen::MatrixXd& d_sigma,
                     const Tensor3& d_k) const;
};

ErrorExpansionCoefficients expansion_coefficients(const SpectralMoments& population,
                                                  const Eigen::MatrixXd& y);

struct AsymptoticVariance {
  double value = 0.0;
  double std_error = 0.0;  // jackknife
  long n_triples = 0;
};

/// Monte-Carlo estimate of beta^T Cov([Y1; F(Y2xY1); F(Y3xY1xY2)]) beta from
/// i.i.d. stationary triples. Evaluated as the sample variance of the scalar
/// projection beta^T z, which is algebraically the same quantity.
AsymptoticVariance asymptotic_variance(const HmmSpec& spec, const Eigen::MatrixXd& u,
                                       const Eigen::MatrixXd& y, long n_triples,
                                       std::uint64_t seed);

struct CltPerN {
  long n = 0;
  int replicates = 0;
  int excluded = 0;
  double mean = 0.0;
  double variance = 0.0;
  double mean_std_error = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double ks_statistic = 0.0;   // against the normal fitted to the sample
  double ks_p_value = 0.0;
  std::vector<double> samples;  // sqrt(N) * (Phat - P)
};

struct TheoryCheckReport {
  std::vector<long> n_values;
  std::vector<CltPerN> per_n;
  double sigma2_theory = 0.0;
  double sigma2_theory_se = 0.0;
  double population_score = 0.0;
  Eigen::MatrixXd test_sequence;  // the fixed y_{1:T}
  std::uint64_t seed = 0;
  int requested_replicates = 0;
};

struct CltOptions {
  long variance_triples = 200000;
  double max_exclusion_fraction = 0.05;
};

/// Monte-Carlo verification of the CLT for the likelihood error: fixes a test
/// sequence, re-estimates moments from N i.i.d. triples per replicate, and
/// compares the spread of sqrt(N)(Phat - P) against the predicted variance.
TheoryCheckReport clt_experiment(const HmmSpec& spec, int t_seq,
                                 const std::vector<long>& n_values, int replicates,
                                 std::uint64_t seed, const CltOptions& opts = {});

/// Top-d left singular vectors of the population bigram matrix (the
/// deterministic reduction used by the theory experiments).
Eigen::MatrixXd population_basis(const HmmSpec& spec, int d);

/// Draws one i.i.d. stationary triple (Y1, Y2, Y3) through u.
struct ReducedTriple {
  Eigen::VectorXd y1, y2, y3;
};

class TripleSampler {
 public:
  TripleSampler(const HmmSpec& spec, const Eigen::MatrixXd& u, std::uint64_t seed);
  ReducedTriple draw();

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

/// Two-sided Kolmogorov-Smirnov p-value for statistic d with sample size n.
double ks_p_value(double d, long n);

}  // namespace shmm
