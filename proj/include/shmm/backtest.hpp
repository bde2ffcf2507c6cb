#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shmm/market_data.hpp"
#include "shmm/pshmm.hpp"

namespace shmm {

enum class BacktestMethod { kPshmm, kShmm, kEm, kAr };

BacktestMethod parse_backtest_method(const std::string& name);
std::string backtest_method_name(BacktestMethod m);

struct BacktestConfig {
  BacktestMethod method = BacktestMethod::kPshmm;
  int train_days = 30;
  int states = 4;
  bool online = false;   // moment updates across the test day (spectral only)
  double gamma = 0.0;    // forgetting factor for online updates
  std::uint64_t seed = 0;
  ProjectionVariant variant = ProjectionVariant::kSimplex;
  WeightMode weight_mode = WeightMode::kMoment;
  double max_skip_fraction = 0.10;
};

struct BacktestReport {
  std::vector<double> daily_returns;
  double annualized_return = 0.0;
  double sharpe = 0.0;
  double max_drawdown = 0.0;
  std::vector<std::int64_t> scored_days;       // UTC day index per entry
  std::vector<long> predictions_per_day;
  std::vector<std::int64_t> skipped_days;      // fit failures
  bool valid = true;
  BacktestConfig config;
};

/// Rolling-window backtest: one joint model over all currencies is refit on
/// the trailing `train_days` days of minute log-returns for every test day,
/// then run as consecutive-minute recursive predictions across that day.
/// A minute is scored only when it follows its predecessor by exactly one
/// minute in every series; per-day sign returns aggregate into the three
/// trading metrics.
BacktestReport run_rolling_backtest(const std::vector<MinuteBarSeries>& series,
                                    const BacktestConfig& cfg);

/// Loads every *.csv under `dir` as one currency series (sorted by name).
std::vector<MinuteBarSeries> load_market_dir(const std::string& dir);

struct FixtureConfig {
  int days = 45;
  int minutes_per_day = 240;
  int currencies = 5;
  int states = 4;
  double p_stay = 0.95;
  double base_move = 8e-4;   // strong-regime mean per-minute log return
  double small_move = 3e-4;  // mild-regime mean
  double sigma = 1.2e-3;     // per-minute noise scale
  std::uint64_t seed = 20220701;
};

/// Deterministic synthetic minute-bar fixture: a sticky regime-switching
/// chain drives joint log-returns of all currencies; closes integrate the
/// returns. Writes cur1.csv..curN.csv under dir and returns the series.
std::vector<MinuteBarSeries> write_market_fixture(const std::string& dir,
                                                  const FixtureConfig& cfg = {});

/// Same fixture, in memory.
std::vector<MinuteBarSeries> make_market_fixture(const FixtureConfig& cfg = {});

}  // namespace shmm
