#include "shmm/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "shmm/errors.hpp"

namespace shmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Floors the eigenvalues of a symmetric matrix so the result stays SPD.
Eigen::MatrixXd floor_spd(const Eigen::MatrixXd& c, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

struct ComponentDensity {
  Eigen::LLT<Eigen::MatrixXd> chol;
  double log_norm;  // -(d/2) log(2 pi) - (1/2) log det

  void build(const Eigen::MatrixXd& cov) {
    chol.compute(cov);
    double log_det = 0.0;
    for (int i = 0; i < cov.rows(); ++i) log_det += 2.0 * std::log(chol.matrixL()(i, i));
    log_norm = -0.5 * (cov.rows() * kLog2Pi + log_det);
  }

  double log_density(const Eigen::VectorXd& centered) const {
    const Eigen::VectorXd z = chol.matrixL().solve(centered);
    return log_norm - 0.5 * z.squaredNorm();
  }
};

struct EmFit {
  GaussianMixture mixture;
  double loglik = -std::numeric_limits<double>::infinity();
  bool collapsed = false;
};

EmFit run_em(const Eigen::MatrixXd& y, int k, std::uint64_t seed, const GmmOptions& opts) {
  const long n = y.rows();
  const int d = static_cast<int>(y.cols());

  EmFit fit;
  GaussianMixture& g = fit.mixture;
  g.k = k;
  g.means = kmeans_pp_centers(y, k, seed);
  g.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  Eigen::MatrixXd centered = y.rowwise() - y.colwise().mean();
  Eigen::MatrixXd pooled = centered.transpose() * centered / static_cast<double>(std::max<long>(n - 1, 1));
  pooled = floor_spd(pooled, opts.covariance_floor);
  g.covariances.assign(k, pooled);

  std::vector<ComponentDensity> dens(k);
  Eigen::MatrixXd resp(n, k);
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    for (int c = 0; c < k; ++c) dens[c].build(g.covariances[c]);

    // E step in log space.
    double ll = 0.0;
    for (long i = 0; i < n; ++i) {
      double max_log = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double lp = std::log(g.weights(c)) +
                          dens[c].log_density(y.row(i).transpose() - g.means.col(c));
        resp(i, c) = lp;
        max_log = std::max(max_log, lp);
      }
      double sum = 0.0;
      for (int c = 0; c < k; ++c) sum += std::exp(resp(i, c) - max_log);
      const double log_sum = max_log + std::log(sum);
      ll += log_sum;
      for (int c = 0; c < k; ++c) resp(i, c) = std::exp(resp(i, c) - log_sum);
    }
    g.fit_meta.loglik_trace.push_back(ll);
    g.fit_meta.iterations = iter + 1;
    fit.loglik = ll;

    // M step.
    for (int c = 0; c < k; ++c) {
      const double mass = resp.col(c).sum();
      if (mass < 1e-8 * static_cast<double>(n) || !std::isfinite(mass)) {
        fit.collapsed = true;
        return fit;
      }
      const Eigen::VectorXd mean = (y.transpose() * resp.col(c)) / mass;
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
      for (long i = 0; i < n; ++i) {
        const Eigen::VectorXd diff = y.row(i).transpose() - mean;
        cov.noalias() += resp(i, c) * diff * diff.transpose();
      }
      cov /= mass;
      g.means.col(c) = mean;
      g.covariances[c] = floor_spd(cov, opts.covariance_floor);
      g.weights(c) = mass / static_cast<double>(n);
    }
    g.weights /= g.weights.sum();

    if (iter > 0 && std::abs(ll - prev_ll) <= opts.rel_tol * std::abs(prev_ll)) break;
    prev_ll = ll;
  }
  return fit;
}

void canonical_order(GaussianMixture& g) {
  std::vector<int> order(g.k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    for (int i = 0; i < g.dim(); ++i) {
      if (g.means(i, a) != g.means(i, b)) return g.means(i, a) > g.means(i, b);
    }
    return false;
  });
  GaussianMixture sorted = g;
  for (int c = 0; c < g.k; ++c) {
    sorted.means.col(c) = g.means.col(order[c]);
    sorted.covariances[c] = g.covariances[order[c]];
    sorted.weights(c) = g.weights(order[c]);
  }
  g = std::move(sorted);
}

}  // namespace

Eigen::MatrixXd kmeans_pp_centers(const Eigen::MatrixXd& y, int k, std::uint64_t seed) {
  const long n = y.rows();
  const int d = static_cast<int>(y.cols());
  if (k < 1 || n < k) throw std::invalid_argument("kmeans_pp_centers: need at least k points");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd centers(d, k);

  long first = static_cast<long>(unif(rng) * static_cast<double>(n));
  first = std::min(first, n - 1);
  centers.col(0) = y.row(first).transpose();

  Eigen::VectorXd dist2 = (y.rowwise() - centers.col(0).transpose()).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    long pick = n - 1;
    if (total > 0.0) {
      const double target = unif(rng) * total;
      double cum = 0.0;
      for (long i = 0; i < n; ++i) {
        cum += dist2(i);
        if (target < cum) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::min(static_cast<long>(unif(rng) * static_cast<double>(n)), n - 1);
    }
    centers.col(c) = y.row(pick).transpose();
    dist2 = dist2.cwiseMin(
        (y.rowwise() - centers.col(c).transpose()).rowwise().squaredNorm());
  }
  return centers;
}

GaussianMixture fit_gmm(const Eigen::MatrixXd& y, int k, std::uint64_t seed,
                        const GmmOptions& opts) {
  const long n = y.rows();
  if (k < 1) throw std::invalid_argument("fit_gmm: k must be positive");
  if (n < 10L * k) throw InsufficientDataError("fit_gmm: need at least 10*k points");

  EmFit best;
  bool have_fit = false;
  int restarts_used = 0;
  for (int r = 0; r < opts.restarts; ++r) {
    std::uint64_t sub_seed = seed + static_cast<std::uint64_t>(r) * 1000003ULL;
    EmFit fit = run_em(y, k, sub_seed, opts);
    int retry = 0;
    while (fit.collapsed && retry < opts.collapse_retries) {
      sub_seed += 7919ULL;
      fit = run_em(y, k, sub_seed, opts);
      ++retry;
    }
    if (fit.collapsed) continue;
    ++restarts_used;
    if (!have_fit || fit.loglik > best.loglik) {
      best = std::move(fit);
      best.mixture.fit_meta.seed = sub_seed;
      have_fit = true;
    }
  }
  if (!have_fit)
    throw DegenerateMixtureError("fit_gmm: EM collapsed on every restart and retry");
  best.mixture.fit_meta.restarts_used = restarts_used;
  canonical_order(best.mixture);
  return best.mixture;
}

Eigen::VectorXd weights_moment(const Eigen::VectorXd& y, const Eigen::MatrixXd& m_hat) {
  const int d = static_cast<int>(m_hat.rows());
  if (m_hat.cols() != d) throw std::invalid_argument("weights_moment: mean matrix must be square");
  if (y.size() != d) throw std::invalid_argument("weights_moment: dimension mismatch");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m_hat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv(0) / std::max(sv(d - 1), 1e-300);
  if (!(cond < 1e10))
    throw SingularMatrixError("weights_moment: mean matrix is ill-conditioned", cond);
  return svd.solve(y);
}

ProbabilityWeights weights_probability(const Eigen::VectorXd& y, const GaussianMixture& gmm) {
  const int k = gmm.k;
  if (y.size() != gmm.dim()) throw std::invalid_argument("weights_probability: dimension mismatch");

  Eigen::VectorXd logs(k);
  double max_log = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < k; ++c) {
    ComponentDensity dens;
    dens.build(gmm.covariances[c]);
    logs(c) = std::log(gmm.weights(c)) + dens.log_density(y - gmm.means.col(c));
    max_log = std::max(max_log, logs(c));
  }

  ProbabilityWeights out;
  if (!std::isfinite(max_log)) {
    out.w = Eigen::VectorXd::Constant(k, 1.0 / k);
    out.underflow_fallback = true;
    return out;
  }
  out.w = (logs.array() - max_log).exp();
  out.w /= out.w.sum();
  return out;
}

}  // namespace shmm
