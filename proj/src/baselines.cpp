#include "shmm/baselines.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "shmm/errors.hpp"
#include "shmm/gmm.hpp"

namespace shmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Spherical Gaussian density of x given state s, in log space.
double log_emission(const GhmmModel& m, const Eigen::VectorXd& x, int s) {
  const int p = m.obs_dim();
  const double var = m.variances(s);
  const double sq = (x - m.means.col(s)).squaredNorm();
  return -0.5 * (p * (kLog2Pi + std::log(var)) + sq / var);
}

// Row t = emission densities of observation t under all states, rescaled by
// the row max in log space (returned separately) to avoid underflow.
void emission_matrix(const GhmmModel& m, const Eigen::MatrixXd& x, Eigen::MatrixXd& dens,
                     Eigen::VectorXd& log_shift) {
  const long n = x.rows();
  dens.resize(n, m.states);
  log_shift.resize(n);
  for (long t = 0; t < n; ++t) {
    double max_log = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < m.states; ++s) {
      dens(t, s) = log_emission(m, x.row(t).transpose(), s);
      max_log = std::max(max_log, dens(t, s));
    }
    log_shift(t) = max_log;
    for (int s = 0; s < m.states; ++s) dens(t, s) = std::exp(dens(t, s) - max_log);
  }
}

struct EmRun {
  GhmmModel model;
  double loglik = -std::numeric_limits<double>::infinity();
};

EmRun run_baum_welch(const Eigen::MatrixXd& x, int states, std::uint64_t seed,
                     const BaumWelchOptions& opts) {
  const long n = x.rows();
  const int p = static_cast<int>(x.cols());
  const int s_cnt = states;

  EmRun run;
  GhmmModel& m = run.model;
  m.states = s_cnt;
  m.pi0 = Eigen::VectorXd::Constant(s_cnt, 1.0 / s_cnt);
  m.transition = Eigen::MatrixXd::Constant(s_cnt, s_cnt, 1.0 / s_cnt);
  m.means = kmeans_pp_centers(x, s_cnt, seed);
  const double pooled_var =
      (x.rowwise() - x.colwise().mean()).squaredNorm() / static_cast<double>(n * p);
  m.variances = Eigen::VectorXd::Constant(s_cnt, std::max(pooled_var, opts.variance_floor));

  Eigen::MatrixXd dens;
  Eigen::VectorXd log_shift;
  Eigen::MatrixXd alpha(n, s_cnt), beta(n, s_cnt), gamma(n, s_cnt);
  Eigen::VectorXd scale(n);
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    emission_matrix(m, x, dens, log_shift);

    // Scaled forward pass.
    alpha.row(0) = (m.pi0.array() * dens.row(0).transpose().array()).transpose();
    scale(0) = alpha.row(0).sum();
    alpha.row(0) /= scale(0);
    for (long t = 1; t < n; ++t) {
      alpha.row(t) =
          (m.transition.transpose() * alpha.row(t - 1).transpose()).transpose().array() *
          dens.row(t).array();
      scale(t) = alpha.row(t).sum();
      if (!(scale(t) > 0.0)) {
        alpha.row(t).setConstant(1.0 / s_cnt);
        scale(t) = 1.0;
      }
      alpha.row(t) /= scale(t);
    }
    const double ll = scale.array().log().sum() + log_shift.sum();
    m.loglik_trace.push_back(ll);
    run.loglik = ll;

    // Scaled backward pass.
    beta.row(n - 1).setOnes();
    for (long t = n - 2; t >= 0; --t) {
      beta.row(t) = (m.transition * (dens.row(t + 1).transpose().array() *
                                     beta.row(t + 1).transpose().array())
                                        .matrix())
                        .transpose() /
                    scale(t + 1);
    }

    // State and transition posteriors.
    for (long t = 0; t < n; ++t) {
      gamma.row(t) = alpha.row(t).array() * beta.row(t).array();
      gamma.row(t) /= gamma.row(t).sum();
    }
    Eigen::MatrixXd xi_sum = Eigen::MatrixXd::Zero(s_cnt, s_cnt);
    for (long t = 0; t + 1 < n; ++t) {
      Eigen::MatrixXd xi =
          (alpha.row(t).transpose() *
           (dens.row(t + 1).array() * beta.row(t + 1).array()).matrix())
              .array() *
          m.transition.array();
      xi_sum += xi / (xi.sum() + 1e-300);
    }

    // M step.
    m.pi0 = gamma.row(0).transpose();
    for (int i = 0; i < s_cnt; ++i) {
      const double row_total = xi_sum.row(i).sum();
      if (row_total > 0.0) m.transition.row(i) = xi_sum.row(i) / row_total;
    }
    for (int s = 0; s < s_cnt; ++s) {
      const double mass = gamma.col(s).sum();
      if (mass < 1e-8) {
        m.variances(s) = std::max(m.variances(s), opts.variance_floor);
        m.variance_floored = true;
        continue;
      }
      m.means.col(s) = (x.transpose() * gamma.col(s)) / mass;
      double sq = 0.0;
      for (long t = 0; t < n; ++t)
        sq += gamma(t, s) * (x.row(t).transpose() - m.means.col(s)).squaredNorm();
      m.variances(s) = std::max(sq / (mass * p), opts.variance_floor);
      if (m.variances(s) == opts.variance_floor) m.variance_floored = true;
    }

    if (iter > 0 && std::abs(ll - prev_ll) <= opts.tol * std::abs(prev_ll)) break;
    prev_ll = ll;
  }
  return run;
}

}  // namespace

GhmmModel fit_baum_welch(const Eigen::MatrixXd& x, int states, std::uint64_t seed,
                         const BaumWelchOptions& opts) {
  if (states < 1) throw std::invalid_argument("fit_baum_welch: states must be positive");
  if (x.rows() < 10L * states)
    throw InsufficientDataError("fit_baum_welch: need at least 10*S rows");

  EmRun best;
  for (int r = 0; r < opts.restarts; ++r) {
    EmRun run = run_baum_welch(x, states, seed + static_cast<std::uint64_t>(r) * 1000003ULL, opts);
    if (run.loglik > best.loglik) best = std::move(run);
  }
  return best.model;
}

FilterResult filter_step(const GhmmModel& model, const Eigen::VectorXd& posterior,
                         const Eigen::VectorXd& x, bool first) {
  FilterResult out;
  const Eigen::VectorXd predicted =
      first ? model.pi0 : (model.transition.transpose() * posterior).eval();
  Eigen::VectorXd dens(model.states);
  double max_log = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < model.states; ++s) {
    dens(s) = log_emission(model, x, s);
    max_log = std::max(max_log, dens(s));
  }
  if (std::isfinite(max_log)) {
    Eigen::VectorXd unnorm = predicted.array() * (dens.array() - max_log).exp();
    const double total = unnorm.sum();
    if (total > 0.0) {
      out.posterior = unnorm / total;
      return out;
    }
  }
  out.posterior = Eigen::VectorXd::Constant(model.states, 1.0 / model.states);
  out.underflow_reset = true;
  return out;
}

FilterResult forward_filter(const GhmmModel& model, const Eigen::MatrixXd& x) {
  FilterResult out;
  out.posterior = model.pi0;
  for (long t = 0; t < x.rows(); ++t) {
    const FilterResult step = filter_step(model, out.posterior, x.row(t).transpose(), t == 0);
    out.posterior = step.posterior;
    out.underflow_reset = out.underflow_reset || step.underflow_reset;
  }
  return out;
}

Eigen::VectorXd filter_prediction(const GhmmModel& model, const Eigen::VectorXd& posterior) {
  return model.means * (model.transition.transpose() * posterior);
}

double ghmm_loglik(const GhmmModel& model, const Eigen::MatrixXd& x) {
  double ll = 0.0;
  Eigen::VectorXd filt = model.pi0;
  for (long t = 0; t < x.rows(); ++t) {
    Eigen::VectorXd predicted = t == 0 ? model.pi0 : (model.transition.transpose() * filt).eval();
    Eigen::VectorXd dens(model.states);
    double max_log = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < model.states; ++s) {
      dens(s) = log_emission(model, x.row(t).transpose(), s);
      max_log = std::max(max_log, dens(s));
    }
    Eigen::VectorXd unnorm = predicted.array() * (dens.array() - max_log).exp();
    const double total = unnorm.sum();
    if (!(total > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += std::log(total) + max_log;
    filt = unnorm / total;
  }
  return ll;
}

GhmmModel ghmm_from_spec(const HmmSpec& spec) {
  spec.validate();
  GhmmModel m;
  m.states = spec.states;
  m.pi0 = spec.pi0;
  m.transition = spec.transition;
  m.means = spec.means;
  m.variances = Eigen::VectorXd::Constant(spec.states, std::max(spec.sigma * spec.sigma, 1e-12));
  return m;
}

Eigen::VectorXd strong_oracle_predict(const HmmSpec& spec, int h_t) {
  if (h_t < 1 || h_t > spec.states)
    throw std::invalid_argument("strong_oracle_predict: state out of range");
  return spec.means * spec.transition.row(h_t - 1).transpose();
}

Eigen::VectorXd limited_oracle_predict(const HmmSpec& spec, const Eigen::MatrixXd& x) {
  const GhmmModel m = ghmm_from_spec(spec);
  const FilterResult f = forward_filter(m, x);
  return filter_prediction(m, f.posterior);
}

Ar1Model fit_ar1(const Eigen::MatrixXd& x) {
  const long n = x.rows();
  const int p = static_cast<int>(x.cols());
  if (n < 2) throw InsufficientDataError("fit_ar1: need at least 2 rows");

  Ar1Model m;
  m.intercept.resize(p);
  m.slope.resize(p);
  for (int j = 0; j < p; ++j) {
    const auto prev = x.col(j).head(n - 1);
    const auto next = x.col(j).tail(n - 1);
    const double mx = prev.mean();
    const double my = next.mean();
    const double sxx = (prev.array() - mx).square().sum();
    const double sxy = ((prev.array() - mx) * (next.array() - my)).sum();
    const double b = sxx > 0.0 ? sxy / sxx : 0.0;
    m.slope(j) = b;
    m.intercept(j) = my - b * mx;
  }
  return m;
}

Eigen::VectorXd predict_ar1(const Ar1Model& model, const Eigen::VectorXd& x_last) {
  return model.intercept.array() + model.slope.array() * x_last.array();
}

}  // namespace shmm
