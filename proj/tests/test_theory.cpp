#include <doctest.h>

#include <Eigen/Dense>

#include "shmm/hmm_model.hpp"
#include "shmm/spectral.hpp"
#include "shmm/theory.hpp"
#include "test_util.hpp"

using namespace shmm;

namespace {

HmmSpec reference_spec() {
  HmmSpec spec;
  spec.states = 2;
  spec.pi0 = Eigen::VectorXd::Constant(2, 0.5);
  spec.transition = build_transition(2, 0.7);
  spec.means = one_hot_means(2, 3);
  spec.sigma = 0.4;
  return spec;
}

// Raw chain evaluation with explicitly perturbed moments.
double perturbed_score(const SpectralMoments& pop, const Eigen::MatrixXd& y,
                       const Eigen::VectorXd& d_mu, const Eigen::MatrixXd& d_sigma,
                       const Tensor3& d_k) {
  SpectralMoments m = pop;
  m.mu += d_mu;
  m.sigma += d_sigma;
  Tensor3 k = pop.k;
  for (std::size_t i = 0; i < k.raw().size(); ++i) k.raw()[i] += d_k.raw()[i];
  m.k = k;
  return sequence_score(build_operators(m), y).value();
}

}  // namespace

TEST_CASE("expansion_coefficients: empty chain reduces to the mean terms") {
  const HmmSpec spec = reference_spec();
  const Eigen::MatrixXd u = population_basis(spec, 2);
  const SpectralMoments pop = population_moments(spec, u);
  const ErrorExpansionCoefficients c = expansion_coefficients(pop, Eigen::MatrixXd(0, 2));

  const Eigen::MatrixXd sigma_inv =
      Eigen::PartialPivLU<Eigen::MatrixXd>(pop.sigma).solve(Eigen::MatrixXd::Identity(2, 2));
  CHECK(c.v.isApprox(Eigen::VectorXd(sigma_inv.transpose() * pop.mu), 1e-12));
  CHECK(c.v_tilde.isApprox(Eigen::VectorXd(sigma_inv * pop.mu), 1e-12));
  CHECK(c.a.empty());
  CHECK(c.b.size() == 1);
  CHECK(c.b[0].isApprox(c.v));
  CHECK(c.b_tilde[0].isApprox(c.v_tilde));
  // Third block of beta is all zero for T = 0.
  CHECK(c.beta.tail(8).cwiseAbs().maxCoeff() == 0.0);
  CHECK(c.chain_value == doctest::Approx(pop.mu.dot(sigma_inv * pop.mu)));
}

TEST_CASE("expansion_coefficients: scalar chain by direct multiplication") {
  // d = 1: every quantity is a product of scalars.
  SpectralMoments pop;
  pop.mu = Eigen::VectorXd::Constant(1, 0.8);
  pop.sigma = Eigen::MatrixXd::Constant(1, 1, 2.0);
  pop.k = Tensor3(1);
  pop.k(0, 0, 0) = 1.5;

  Eigen::MatrixXd y(2, 1);
  y << 0.9, -1.1;

  const double s = 0.5;          // sigma^{-1}
  const double k1 = 1.5 * 0.9;   // K(y_1)
  const double k2 = 1.5 * -1.1;  // K(y_2)
  const double mu = 0.8;

  const ErrorExpansionCoefficients c = expansion_coefficients(pop, y);
  CHECK(c.chain_value == doctest::Approx(mu * s * k2 * s * k1 * s * mu));
  CHECK(c.v(0) == doctest::Approx(mu * s * k2 * s * k1 * s));
  CHECK(c.v_tilde(0) == doctest::Approx(s * k2 * s * k1 * s * mu));
  // a_t flank K(y_t): a_1 = mu s K(y_2) s, a~_1 = s mu.
  CHECK(c.a[0](0) == doctest::Approx(mu * s * k2 * s));
  CHECK(c.a_tilde[0](0) == doctest::Approx(s * mu));
  CHECK(c.a[1](0) == doctest::Approx(mu * s));
  CHECK(c.a_tilde[1](0) == doctest::Approx(s * k1 * s * mu));
  // b_t flank the t-th inverse; b_0 = v, b~_0 = s mu; b_2 = s mu, b~_2 = v~.
  CHECK(c.b[0](0) == doctest::Approx(c.v(0)));
  CHECK(c.b_tilde[0](0) == doctest::Approx(s * mu));
  CHECK(c.b[2](0) == doctest::Approx(mu * s));
  CHECK(c.b_tilde[2](0) == doctest::Approx(c.v_tilde(0)));
  CHECK(c.b[1](0) == doctest::Approx(mu * s * k2 * s));
  CHECK(c.b_tilde[1](0) == doctest::Approx(s * k1 * s * mu));
}

TEST_CASE("beta linear form equals the explicit coefficient sums") {
  const HmmSpec spec = reference_spec();
  const Eigen::MatrixXd u = population_basis(spec, 2);
  const SpectralMoments pop = population_moments(spec, u);
  const Eigen::MatrixXd y = testutil::random_matrix(3, 2, 202, 0.7);
  const ErrorExpansionCoefficients c = expansion_coefficients(pop, y);

  const Eigen::VectorXd d_mu = testutil::random_vector(2, 301, 0.1);
  const Eigen::MatrixXd d_sigma = testutil::random_matrix(2, 2, 302, 0.1);
  const Tensor3 d_k = unflatten_tensor(testutil::random_vector(8, 303, 0.1), 2);

  double direct = (c.v + c.v_tilde).dot(d_mu);
  for (std::size_t t = 0; t < c.b.size(); ++t)
    direct -= c.b[t].dot(d_sigma * c.b_tilde[t]);
  for (std::size_t t = 0; t < c.a.size(); ++t)
    direct += c.a[t].dot(d_k.contract_last(y.row(t).transpose()) * c.a_tilde[t]);

  CHECK(c.linear_term(d_mu, d_sigma, d_k) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("first-order expansion: finite-difference order is quadratic") {
  const HmmSpec spec = reference_spec();
  const Eigen::MatrixXd u = population_basis(spec, 2);
  const SpectralMoments pop = population_moments(spec, u);

  HmmSpec stat = spec;
  stat.pi0 = stationary_distribution(spec.transition);
  const Eigen::MatrixXd y = sample_trajectory(stat, 3, 5).observations * u;
  const ErrorExpansionCoefficients c = expansion_coefficients(pop, y);
  const double base = c.chain_value;

  std::vector<double> orders;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd d_mu = testutil::random_vector(2, 900 + rep, 1.0);
    Eigen::MatrixXd d_sigma = testutil::random_matrix(2, 2, 940 + rep, 1.0);
    Tensor3 d_k = unflatten_tensor(testutil::random_vector(8, 980 + rep, 1.0), 2);
    const double norm = std::sqrt(d_mu.squaredNorm() + d_sigma.squaredNorm() +
                                  flatten(d_k).squaredNorm());
    d_mu /= norm;
    d_sigma /= norm;
    d_k *= 1.0 / norm;

    const double h = 1e-3;
    auto err_at = [&](double step) {
      const double perturbed = perturbed_score(pop, y, step * d_mu,
                                               (step * d_sigma).eval(), d_k * step);
      return std::abs(perturbed - base - step * c.linear_term(d_mu, d_sigma, d_k));
    };
    const double e1 = err_at(h);
    const double e2 = err_at(h / 2.0);
    if (e1 > 1e-13 && e2 > 1e-14) orders.push_back(std::log2(e1 / e2));
  }
  REQUIRE(orders.size() >= 10);
  std::sort(orders.begin(), orders.end());
  CHECK(orders[orders.size() / 2] > 1.9);
}

TEST_CASE("asymptotic_variance: projected-scalar route matches explicit covariance") {
  const HmmSpec spec = reference_spec();
  const Eigen::MatrixXd u = population_basis(spec, 2);
  HmmSpec stat = spec;
  stat.pi0 = stationary_distribution(spec.transition);
  const Eigen::MatrixXd y = sample_trajectory(stat, 2, 9).observations * u;

  const SpectralMoments pop = population_moments(spec, u);
  const ErrorExpansionCoefficients c = expansion_coefficients(pop, y);

  const long n = 4000;
  const AsymptoticVariance av = asymptotic_variance(spec, u, y, n, 77);

  // Explicit route: materialize z_i and form beta^T Cov beta.
  TripleSampler sampler(spec, u, 77);
  const int d = 2;
  const long dim = d + d * d + d * d * d;
  Eigen::MatrixXd z(n, dim);
  for (long i = 0; i < n; ++i) {
    const ReducedTriple tr = sampler.draw();
    z.block(i, 0, 1, d) = tr.y1.transpose();
    z.block(i, d, 1, d * d) = flatten((tr.y2 * tr.y1.transpose()).eval()).transpose();
    z.block(i, d + d * d, 1, d * d * d) = flatten(outer3(tr.y3, tr.y1, tr.y2)).transpose();
  }
  const Eigen::MatrixXd centered = z.rowwise() - z.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const double explicit_value = c.beta.dot(cov * c.beta);

  CHECK(av.value == doctest::Approx(explicit_value).epsilon(1e-10));
  CHECK(av.std_error > 0.0);
}

TEST_CASE("asymptotic_variance: noiseless permutation chain") {
  // Period-2 permutation with one-hot emissions and sigma = 0: the triple
  // law is supported on exactly two atoms, (e1,e2,e1) and (e2,e1,e2), each
  // with stationary probability 1/2, so the projected scalar has the exact
  // two-point variance (s1 - s2)^2 / 4.
  HmmSpec spec;
  spec.states = 2;
  spec.pi0 = Eigen::VectorXd::Constant(2, 0.5);
  spec.transition.resize(2, 2);
  spec.transition << 0, 1, 1, 0;
  spec.means = one_hot_means(2, 2);
  spec.sigma = 0.0;

  const Eigen::MatrixXd u = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd y(1, 2);
  y << 1.0, 0.0;

  const SpectralMoments pop = population_moments(spec, u);
  const ErrorExpansionCoefficients c = expansion_coefficients(pop, y);
  const AsymptoticVariance av = asymptotic_variance(spec, u, y, 20000, 5);

  auto scalar_for = [&](const Eigen::VectorXd& y1, const Eigen::VectorXd& y2,
                        const Eigen::VectorXd& y3) {
    double val = (c.v + c.v_tilde).dot(y1);
    for (std::size_t t = 0; t < c.b.size(); ++t)
      val -= c.b[t].dot(y2) * c.b_tilde[t].dot(y1);
    for (std::size_t t = 0; t < c.a.size(); ++t)
      val += c.a[t].dot(y3) * c.a_tilde[t].dot(y1) * y.row(t).dot(y2);
    return val;
  };
  const Eigen::VectorXd e1 = Eigen::Vector2d(1, 0), e2 = Eigen::Vector2d(0, 1);
  const double s1 = scalar_for(e1, e2, e1);
  const double s2 = scalar_for(e2, e1, e2);
  const double expected_var = 0.25 * (s1 - s2) * (s1 - s2);
  CHECK(av.value == doctest::Approx(expected_var).epsilon(0.05));
}

TEST_CASE("clt experiment: desk-scale sanity run") {
  const HmmSpec spec = reference_spec();
  CltOptions opts;
  opts.variance_triples = 50000;
  const TheoryCheckReport report = clt_experiment(spec, 2, {2000}, 120, 31, opts);
  REQUIRE(report.per_n.size() == 1);
  const CltPerN& per = report.per_n[0];
  CHECK(per.excluded <= 6);
  CHECK(std::abs(per.mean) < 5.0 * per.mean_std_error + 0.05 * std::sqrt(per.variance));
  CHECK(per.variance / report.sigma2_theory > 0.6);
  CHECK(per.variance / report.sigma2_theory < 1.6);
  CHECK(per.ks_p_value > 0.001);
}
