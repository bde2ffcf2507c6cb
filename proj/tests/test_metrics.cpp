#include <doctest.h>

#include <Eigen/Dense>

#include "shmm/errors.hpp"
#include "shmm/metrics.hpp"
#include "test_util.hpp"

using namespace shmm;

TEST_CASE("r_squared: perfect, mean, and offset predictions") {
  const Eigen::MatrixXd actual = testutil::random_matrix(30, 3, 5);
  CHECK(r_squared(actual, actual) == doctest::Approx(1.0));

  const Eigen::MatrixXd mean_pred = actual.colwise().mean().replicate(30, 1);
  CHECK(r_squared(mean_pred, actual) == doctest::Approx(0.0));

  // 2 x 1 hand case with a constant offset c: R^2 = 1 - T*c^2 / SST.
  Eigen::MatrixXd a(2, 1), p(2, 1);
  a << 1.0, 3.0;
  const double c = 0.5;
  p << 1.0 + c, 3.0 + c;
  const double sst = 2.0;  // (1-2)^2 + (3-2)^2
  CHECK(r_squared(p, a) == doctest::Approx(1.0 - 2.0 * c * c / sst));

  CHECK_THROWS_AS(r_squared(Eigen::MatrixXd::Ones(3, 1), Eigen::MatrixXd::Ones(3, 1)),
                  UndefinedMetricError);
  CHECK_THROWS_AS(r_squared(Eigen::MatrixXd::Ones(3, 1), Eigen::MatrixXd::Ones(4, 1)),
                  std::invalid_argument);
}

TEST_CASE("daily_strategy_return: perfect signs, hand case, zero predictions") {
  Eigen::VectorXd actual(3);
  actual << 0.01, -0.02, 0.005;

  // Perfect sign prediction earns the absolute sum.
  CHECK(daily_strategy_return({actual}, {actual}) ==
        doctest::Approx(actual.cwiseAbs().sum()));

  Eigen::VectorXd y(2), yhat(2);
  y << 0.01, -0.02;
  yhat << 0.02, -0.01;
  CHECK(daily_strategy_return({yhat}, {y}) == doctest::Approx(0.03));

  CHECK(daily_strategy_return({Eigen::VectorXd::Zero(3)}, {actual}) == doctest::Approx(0.0));

  // Averaging over currencies.
  CHECK(daily_strategy_return({yhat, Eigen::VectorXd::Zero(2)}, {y, y}) ==
        doctest::Approx(0.015));

  CHECK_THROWS_AS(daily_strategy_return({yhat}, {actual}), std::invalid_argument);
}

TEST_CASE("annualized_return") {
  CHECK(annualized_return({0.01, 0.01}) == doctest::Approx(3.65));
  CHECK(annualized_return({0.02, -0.01}) == doctest::Approx(1.825));
  CHECK_THROWS_AS(annualized_return({}), std::invalid_argument);
}

TEST_CASE("sharpe_ratio: hand value, degenerate, scale invariance") {
  const double value = sharpe_ratio({0.01, 0.03});
  CHECK(value == doctest::Approx(std::sqrt(365.0) * 0.02 / 0.014142135623730951));

  CHECK_THROWS_AS(sharpe_ratio({0.02, 0.02, 0.02}), UndefinedMetricError);
  CHECK_THROWS_AS(sharpe_ratio({0.02}), std::invalid_argument);

  std::vector<double> daily = {0.01, -0.02, 0.005, 0.03};
  std::vector<double> scaled = daily;
  for (double& r : scaled) r *= 7.5;
  CHECK(sharpe_ratio(scaled) == doctest::Approx(sharpe_ratio(daily)));
  CHECK(annualized_return(scaled) == doctest::Approx(7.5 * annualized_return(daily)));
}

TEST_CASE("max_drawdown: verbatim ratio formula") {
  // No drawdown on monotone gains.
  CHECK(max_drawdown({0.1, 0.2, 0.05}) == doctest::Approx(0.0));

  // Hand-enumerated case: optimum at (m1, m2) = (2, 3).
  CHECK(max_drawdown({0.1, -0.05, -0.05}) == doctest::Approx(0.1 / 1.05));

  // Losses can push the ratio above 1.
  CHECK(max_drawdown({-0.6, -0.6}) == doctest::Approx(3.0));

  CHECK_THROWS_AS(max_drawdown({0.1}), std::invalid_argument);
}

TEST_CASE("metrics recompute from stored daily returns") {
  const std::vector<double> daily = {0.012, -0.03, 0.007, 0.019, -0.001};
  const double a1 = annualized_return(daily);
  const double s1 = sharpe_ratio(daily);
  const double d1 = max_drawdown(daily);
  CHECK(a1 == annualized_return(daily));
  CHECK(s1 == sharpe_ratio(daily));
  CHECK(d1 == max_drawdown(daily));
}
