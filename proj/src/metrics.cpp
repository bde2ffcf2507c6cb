#include "shmm/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "shmm/errors.hpp"

namespace shmm {

double r_squared(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& actual) {
  if (pred.rows() != actual.rows() || pred.cols() != actual.cols())
    throw std::invalid_argument("r_squared: shape mismatch");
  if (actual.rows() < 2) throw std::invalid_argument("r_squared: need at least 2 rows");

  const double sse = (pred - actual).squaredNorm();
  const Eigen::RowVectorXd col_mean = actual.colwise().mean();
  const double sst = (actual.rowwise() - col_mean).squaredNorm();
  if (sst == 0.0) throw UndefinedMetricError("r_squared: zero total variance");
  return 1.0 - sse / sst;
}

double daily_strategy_return(const std::vector<Eigen::VectorXd>& preds,
                             const std::vector<Eigen::VectorXd>& actuals) {
  if (preds.empty() || preds.size() != actuals.size())
    throw std::invalid_argument("daily_strategy_return: currency count mismatch");

  double total = 0.0;
  for (std::size_t c = 0; c < preds.size(); ++c) {
    if (preds[c].size() != actuals[c].size())
      throw std::invalid_argument("daily_strategy_return: misaligned lengths");
    for (long t = 0; t < preds[c].size(); ++t) {
      const double p = preds[c](t);
      const double sign = p > 0.0 ? 1.0 : (p < 0.0 ? -1.0 : 0.0);
      total += sign * actuals[c](t);
    }
  }
  return total / static_cast<double>(preds.size());
}

double annualized_return(const std::vector<double>& daily) {
  if (daily.empty()) throw std::invalid_argument("annualized_return: empty series");
  double mean = 0.0;
  for (double r : daily) mean += r;
  mean /= static_cast<double>(daily.size());
  return 365.0 * mean;
}

double sharpe_ratio(const std::vector<double>& daily) {
  const std::size_t m = daily.size();
  if (m < 2) throw std::invalid_argument("sharpe_ratio: need at least 2 days");
  double mean = 0.0;
  for (double r : daily) mean += r;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double r : daily) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / static_cast<double>(m - 1));
  if (sd == 0.0) throw UndefinedMetricError("sharpe_ratio: zero standard deviation");
  return std::sqrt(365.0) * mean / sd;
}

double max_drawdown(const std::vector<double>& daily) {
  const std::size_t m = daily.size();
  if (m < 2) throw std::invalid_argument("max_drawdown: need at least 2 days");

  // prefix[i] = R_1 + ... + R_i.
  std::vector<double> prefix(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) prefix[i + 1] = prefix[i] + daily[i];

  double worst = 0.0;
  for (std::size_t m1 = 1; m1 < m; ++m1) {
    const double base = 1.0 + prefix[m1];
    for (std::size_t m2 = m1 + 1; m2 <= m; ++m2) {
      const double loss = -(prefix[m2] - prefix[m1 - 1]);
      worst = std::max(worst, loss / base);
    }
  }
  return worst;
}

}  // namespace shmm
