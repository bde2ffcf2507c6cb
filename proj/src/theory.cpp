#include "shmm/theory.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include <Eigen/Dense>

#include "shmm/errors.hpp"
#include "shmm/spectral.hpp"

namespace shmm {

double ErrorExpansionCoefficients::linear_term(const Eigen::VectorXd& d_mu,
                                               const Eigen::MatrixXd& d_sigma,
                                               const Tensor3& d_k) const {
  Eigen::VectorXd d_theta(beta.size());
  const int d = static_cast<int>(d_mu.size());
  d_theta.head(d) = d_mu;
  d_theta.segment(d, static_cast<long>(d) * d) = flatten(d_sigma);
  d_theta.tail(static_cast<long>(d) * d * d) = flatten(d_k);
  return beta.dot(d_theta);
}

ErrorExpansionCoefficients expansion_coefficients(const SpectralMoments& population,
                                                  const Eigen::MatrixXd& y) {
  const int d = population.dim();
  const long t_len = y.rows();
  if (t_len > 0 && y.cols() != d)
    throw std::invalid_argument("expansion_coefficients: sequence dimension mismatch");

  const SpectralOperators ops = build_operators(population);
  const Eigen::MatrixXd& sigma_inv = ops.sigma_inv;

  // Prefix rows: pre[t] = mu^T S K(y_T) S ... K(y_{t+1}) S for t = T..0,
  // stored as columns. pre[T] = S^T mu; pre[t-1] = (pre[t]^T K(y_t) S)^T.
  std::vector<Eigen::VectorXd> pre(t_len + 1);
  pre[t_len] = sigma_inv.transpose() * population.mu;
  for (long t = t_len - 1; t >= 0; --t) {
    const Eigen::MatrixXd ky = population.k.contract_last(y.row(t).transpose());
    pre[t] = sigma_inv.transpose() * ky.transpose() * pre[t + 1];
  }
  // Suffix columns: suf[t] = S K(y_t) S ... K(y_1) S mu, suf[0] = S mu.
  std::vector<Eigen::VectorXd> suf(t_len + 1);
  suf[0] = sigma_inv * population.mu;
  for (long t = 1; t <= t_len; ++t) {
    const Eigen::MatrixXd ky = population.k.contract_last(y.row(t - 1).transpose());
    suf[t] = sigma_inv * ky * suf[t - 1];
  }

  ErrorExpansionCoefficients c;
  c.v = pre[0];
  c.v_tilde = suf[t_len];
  c.chain_value = pre[0].dot(population.mu);

  c.a.resize(t_len);
  c.a_tilde.resize(t_len);
  for (long t = 1; t <= t_len; ++t) {
    c.a[t - 1] = pre[t];
    c.a_tilde[t - 1] = suf[t - 1];
  }
  c.b.resize(t_len + 1);
  c.b_tilde.resize(t_len + 1);
  for (long t = 0; t <= t_len; ++t) {
    c.b[t] = pre[t];
    c.b_tilde[t] = suf[t];
  }

  c.beta.resize(d + static_cast<long>(d) * d + static_cast<long>(d) * d * d);
  c.beta.head(d) = c.v + c.v_tilde;
  Eigen::MatrixXd b_outer = Eigen::MatrixXd::Zero(d, d);
  for (long t = 0; t <= t_len; ++t) b_outer += c.b[t] * c.b_tilde[t].transpose();
  c.beta.segment(d, static_cast<long>(d) * d) = -flatten(b_outer);
  Tensor3 a_outer(d);
  for (long t = 1; t <= t_len; ++t)
    a_outer.add_outer(c.a[t - 1], c.a_tilde[t - 1], y.row(t - 1).transpose());
  c.beta.tail(static_cast<long>(d) * d * d) = flatten(a_outer);
  return c;
}

struct TripleSampler::Impl {
  HmmSpec spec;
  Eigen::MatrixXd u;
  Eigen::VectorXd pi;
  std::mt19937_64 rng;
  std::normal_distribution<double> gauss{0.0, 1.0};
  std::student_t_distribution<double> student;

  Impl(const HmmSpec& s, const Eigen::MatrixXd& u_in, std::uint64_t seed)
      : spec(s), u(u_in), pi(stationary_distribution(s.transition)), rng(seed),
        student(static_cast<double>(s.t_dof)) {}

  int draw_state(const Eigen::VectorXd& probs) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double x = unif(rng);
    double cum = 0.0;
    for (int i = 0; i < probs.size(); ++i) {
      cum += probs(i);
      if (x < cum) return i;
    }
    return static_cast<int>(probs.size()) - 1;
  }

  Eigen::VectorXd emit(int state) {
    const int p = spec.obs_dim();
    Eigen::VectorXd x(p);
    for (int j = 0; j < p; ++j) {
      const double noise =
          spec.family == EmissionFamily::kGaussian ? gauss(rng) : student(rng);
      x(j) = spec.means(j, state) + spec.sigma * noise;
    }
    return u.transpose() * x;
  }
};

TripleSampler::TripleSampler(const HmmSpec& spec, const Eigen::MatrixXd& u, std::uint64_t seed)
    : impl_(std::make_shared<Impl>(spec, u, seed)) {
  spec.validate();
  if (u.rows() != spec.obs_dim()) throw std::invalid_argument("TripleSampler: U rows != p");
}

ReducedTriple TripleSampler::draw() {
  auto& im = *impl_;
  const int h1 = im.draw_state(im.pi);
  const int h2 = im.draw_state(im.spec.transition.row(h1).transpose());
  const int h3 = im.draw_state(im.spec.transition.row(h2).transpose());
  return ReducedTriple{im.emit(h1), im.emit(h2), im.emit(h3)};
}

Eigen::MatrixXd population_basis(const HmmSpec& spec, int d) {
  const Eigen::MatrixXd bigram = population_bigram(spec);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(bigram, Eigen::ComputeThinU);
  Eigen::MatrixXd u = svd.matrixU().leftCols(d);
  for (int c = 0; c < u.cols(); ++c) {
    int idx = 0;
    u.col(c).cwiseAbs().maxCoeff(&idx);
    if (u(idx, c) < 0.0) u.col(c) = -u.col(c);
  }
  return u;
}

AsymptoticVariance asymptotic_variance(const HmmSpec& spec, const Eigen::MatrixXd& u,
                                       const Eigen::MatrixXd& y, long n_triples,
                                       std::uint64_t seed) {
  if (n_triples < 2) throw std::invalid_argument("asymptotic_variance: need n_triples >= 2");

  const SpectralMoments pop = population_moments(spec, u);
  const ErrorExpansionCoefficients coef = expansion_coefficients(pop, y);
  const long t_len = y.rows();

  // beta^T z for z = [Y1; F(Y2xY1); F(Y3xY1xY2)] expands into inner products
  // with the stored coefficient vectors, so no D-dimensional vector is built.
  TripleSampler sampler(spec, u, seed);
  std::vector<double> s(n_triples);
  double sum = 0.0, sum2 = 0.0;
  for (long i = 0; i < n_triples; ++i) {
    const ReducedTriple tr = sampler.draw();
    double val = (coef.v + coef.v_tilde).dot(tr.y1);
    for (long t = 0; t <= t_len; ++t)
      val -= coef.b[t].dot(tr.y2) * coef.b_tilde[t].dot(tr.y1);
    for (long t = 1; t <= t_len; ++t)
      val += coef.a[t - 1].dot(tr.y3) * coef.a_tilde[t - 1].dot(tr.y1) *
             y.row(t - 1).dot(tr.y2);
    if (!std::isfinite(val))
      throw NumericalError("asymptotic_variance: non-finite covariance contribution");
    s[i] = val;
    sum += val;
    sum2 += val * val;
  }

  const double n = static_cast<double>(n_triples);
  const double mean = sum / n;
  const double ss = sum2 - n * mean * mean;
  AsymptoticVariance out;
  out.value = ss / (n - 1.0);
  out.n_triples = n_triples;

  // Jackknife over leave-one-out sample variances.
  double jsum = 0.0, jsum2 = 0.0;
  for (long i = 0; i < n_triples; ++i) {
    const double mean_i = (sum - s[i]) / (n - 1.0);
    const double ss_i = (sum2 - s[i] * s[i]) - (n - 1.0) * mean_i * mean_i;
    const double var_i = ss_i / (n - 2.0);
    jsum += var_i;
    jsum2 += var_i * var_i;
  }
  const double jmean = jsum / n;
  out.std_error = std::sqrt(std::max(0.0, (n - 1.0) / n * (jsum2 - n * jmean * jmean)));
  return out;
}

double ks_p_value(double d, long n) {
  if (d <= 0.0) return 1.0;
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

// Kolmogorov-Smirnov statistic of samples against N(mean, var).
double ks_statistic_normal(std::vector<double> samples, double mean, double var) {
  std::sort(samples.begin(), samples.end());
  const double sd = std::sqrt(var);
  const double n = static_cast<double>(samples.size());
  double d_max = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double z = (samples[i] - mean) / sd;
    const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    d_max = std::max(d_max, std::abs(cdf - static_cast<double>(i) / n));
    d_max = std::max(d_max, std::abs(static_cast<double>(i + 1) / n - cdf));
  }
  return d_max;
}

}  // namespace

TheoryCheckReport clt_experiment(const HmmSpec& spec, int t_seq,
                                 const std::vector<long>& n_values, int replicates,
                                 std::uint64_t seed, const CltOptions& opts) {
  if (replicates < 100)
    throw std::invalid_argument("clt_experiment: need at least 100 replicates");
  if (t_seq < 0) throw std::invalid_argument("clt_experiment: negative sequence length");

  const int d = spec.states;
  const Eigen::MatrixXd u = population_basis(spec, d);
  const SpectralMoments pop = population_moments(spec, u);

  TheoryCheckReport report;
  report.seed = seed;
  report.requested_replicates = replicates;
  report.n_values = n_values;

  // Fixed test sequence drawn once from the stationary model.
  HmmSpec stationary_spec = spec;
  stationary_spec.pi0 = stationary_distribution(spec.transition);
  Trajectory traj = sample_trajectory(stationary_spec, std::max(t_seq, 1), seed);
  report.test_sequence = t_seq > 0
                             ? Eigen::MatrixXd(traj.observations.topRows(t_seq) * u)
                             : Eigen::MatrixXd(0, d);
  const Eigen::MatrixXd& y = report.test_sequence;

  const SpectralOperators pop_ops = build_operators(pop);
  report.population_score = sequence_score(pop_ops, y).value();

  const AsymptoticVariance av =
      asymptotic_variance(spec, u, y, opts.variance_triples, seed + 1);
  report.sigma2_theory = av.value;
  report.sigma2_theory_se = av.std_error;

  for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
    const long n = n_values[ni];
    CltPerN per;
    per.n = n;

    for (int rep = 0; rep < replicates; ++rep) {
      TripleSampler sampler(spec, u,
                            seed + 1000003ULL * (ni + 1) + 7919ULL * (rep + 1));
      SpectralMoments est;
      est.mu = Eigen::VectorXd::Zero(d);
      est.sigma = Eigen::MatrixXd::Zero(d, d);
      est.k = Tensor3(d);
      for (long i = 0; i < n; ++i) {
        const ReducedTriple tr = sampler.draw();
        est.mu += tr.y1;
        est.sigma += tr.y2 * tr.y1.transpose();
        est.k.add_outer(tr.y3, tr.y1, tr.y2);
      }
      est.mu /= static_cast<double>(n);
      est.sigma /= static_cast<double>(n);
      est.k *= 1.0 / static_cast<double>(n);
      est.n_points = n;

      try {
        const SpectralOperators ops = build_operators(est);
        const double score = sequence_score(ops, y).value();
        per.samples.push_back(std::sqrt(static_cast<double>(n)) *
                              (score - report.population_score));
      } catch (const NumericalError&) {
        ++per.excluded;
      }
    }
    per.replicates = static_cast<int>(per.samples.size());
    if (per.excluded > opts.max_exclusion_fraction * replicates)
      throw ExperimentInvalidError("clt_experiment: too many excluded replicates");

    const double m = static_cast<double>(per.samples.size());
    double mean = 0.0;
    for (double v : per.samples) mean += v;
    mean /= m;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : per.samples) {
      const double c = v - mean;
      m2 += c * c;
      m3 += c * c * c;
      m4 += c * c * c * c;
    }
    per.mean = mean;
    per.variance = m2 / (m - 1.0);
    per.mean_std_error = std::sqrt(per.variance / m);
    const double sd = std::sqrt(m2 / m);
    per.skewness = (m3 / m) / (sd * sd * sd);
    per.excess_kurtosis = (m4 / m) / (sd * sd * sd * sd) - 3.0;
    per.ks_statistic = ks_statistic_normal(per.samples, mean, per.variance);
    per.ks_p_value = ks_p_value(per.ks_statistic, per.samples.size());
    report.per_n.push_back(std::move(per));
  }
  return report;
}

}  // namespace shmm
