#pragma once

#include <vector>

#include <Eigen/Core>

namespace shmm {

/// Pooled R^2 over all cells: 1 - SSE / SST, with the total sum of squares
/// taken around the per-dimension mean of `actual`. Can be negative.
double r_squared(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& actual);

/// Daily sign-trading return (1/C) sum_i sum_t sign(pred) * actual, with
/// sign(0) = 0. One inner vector per currency; per-currency lengths must
/// match between predictions and actuals.
double daily_strategy_return(const std::vector<Eigen::VectorXd>& preds,
                             const std::vector<Eigen::VectorXd>& actuals);

/// 365 * mean(daily).
double annualized_return(const std::vector<double>& daily);

/// sqrt(365) * mean / sample standard deviation (divisor M-1).
double sharpe_ratio(const std::vector<double>& daily);

/// max over m1 < m2 of sum_{m=m1..m2}(-R_m) / (1 + sum_{m=1..m1} R_m),
/// floored at zero. The m1-th return appears in both the numerator range and
/// the denominator sum; values above 1 are possible.
double max_drawdown(const std::vector<double>& daily);

}  // namespace shmm
