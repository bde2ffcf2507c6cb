#include "shmm/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <unordered_map>

#include <Eigen/Dense>

#include "shmm/baselines.hpp"
#include "shmm/errors.hpp"
#include "shmm/metrics.hpp"

namespace shmm {

BacktestMethod parse_backtest_method(const std::string& name) {
  if (name == "pshmm") return BacktestMethod::kPshmm;
  if (name == "shmm") return BacktestMethod::kShmm;
  if (name == "em") return BacktestMethod::kEm;
  if (name == "ar") return BacktestMethod::kAr;
  throw std::invalid_argument("unknown backtest method: " + name);
}

std::string backtest_method_name(BacktestMethod m) {
  switch (m) {
    case BacktestMethod::kPshmm: return "pshmm";
    case BacktestMethod::kShmm: return "shmm";
    case BacktestMethod::kEm: return "em";
    case BacktestMethod::kAr: return "ar";
  }
  return "?";
}

namespace {

struct MinuteRow {
  std::int64_t timestamp = 0;
  bool contiguous = false;  // predecessor minute is also present
  Eigen::VectorXd returns;  // one per currency
};

// Aligns per-currency one-minute returns on common timestamps. A return is
// kept only when it spans exactly one minute in its own series.
std::vector<MinuteRow> align_returns(const std::vector<MinuteBarSeries>& series) {
  const std::size_t c_cnt = series.size();
  std::vector<std::unordered_map<std::int64_t, double>> maps(c_cnt);
  for (std::size_t c = 0; c < c_cnt; ++c) {
    const auto& s = series[c];
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      if (!s.gap_after[i]) maps[c][s.timestamps[i + 1]] = s.log_returns[i];
    }
  }

  std::vector<MinuteRow> rows;
  for (std::size_t i = 0; i + 1 < series[0].size(); ++i) {
    if (series[0].gap_after[i]) continue;
    const std::int64_t ts = series[0].timestamps[i + 1];
    Eigen::VectorXd r(c_cnt);
    bool ok = true;
    for (std::size_t c = 0; c < c_cnt && ok; ++c) {
      auto it = maps[c].find(ts);
      if (it == maps[c].end())
        ok = false;
      else
        r(static_cast<long>(c)) = it->second;
    }
    if (ok) rows.push_back({ts, false, std::move(r)});
  }
  for (std::size_t i = 1; i < rows.size(); ++i)
    rows[i].contiguous = rows[i].timestamp == rows[i - 1].timestamp + 1;
  return rows;
}

// Per-day recursive prediction pass. Returns aligned (pred, actual) pairs
// for the scored minutes of the day.
struct DayScore {
  std::vector<Eigen::VectorXd> preds;    // per currency
  std::vector<Eigen::VectorXd> actuals;  // per currency
  long scored = 0;
};

DayScore score_day(const std::vector<MinuteRow>& day_rows, const Eigen::MatrixXd& train,
                   const BacktestConfig& cfg) {
  const int p = static_cast<int>(train.cols());
  const long n = static_cast<long>(day_rows.size());

  // Raw per-minute predictions; row j predicts day_rows[j].
  Eigen::MatrixXd preds = Eigen::MatrixXd::Zero(n, p);
  std::vector<bool> have(n, false);

  switch (cfg.method) {
    case BacktestMethod::kAr: {
      const Ar1Model ar = fit_ar1(train);
      for (long j = 1; j < n; ++j) {
        preds.row(j) = predict_ar1(ar, day_rows[j - 1].returns).transpose();
        have[j] = true;
      }
      break;
    }
    case BacktestMethod::kEm: {
      BaumWelchOptions opts;
      opts.max_iters = 60;
      const GhmmModel em =
          fit_baum_welch(train, cfg.states, cfg.seed, opts);
      Eigen::VectorXd posterior = em.pi0;
      for (long j = 1; j < n; ++j) {
        // Filter the previous minute, then predict the next.
        posterior = filter_step(em, posterior, day_rows[j - 1].returns, j == 1).posterior;
        preds.row(j) = filter_prediction(em, posterior).transpose();
        have[j] = true;
      }
      break;
    }
    case BacktestMethod::kShmm: {
      const int d = std::min(cfg.states, p);
      if (cfg.online) {
        OnlineShmm session = OnlineShmm::warm_up(train, d, cfg.gamma);
        for (long j = 1; j < n; ++j) {
          const OnlineStepOutput out = session.step(day_rows[j - 1].returns);
          preds.row(j) = out.x_hat.transpose();
          have[j] = true;
        }
      } else {
        const ShmmModel model = fit_shmm(train, d);
        Eigen::VectorXd belief = model.ops.c1;
        for (long j = 1; j < n; ++j) {
          const Eigen::VectorXd y = model.basis.u.transpose() * day_rows[j - 1].returns;
          auto next = try_propagate(model.ops, belief, y);
          if (next && next->allFinite()) belief = std::move(*next);
          preds.row(j) = (model.basis.u * belief).transpose();
          have[j] = true;
        }
      }
      break;
    }
    case BacktestMethod::kPshmm: {
      const int d = std::min(cfg.states, p);
      PshmmConfig pcfg;
      pcfg.seed = cfg.seed;
      pcfg.variant = cfg.variant;
      pcfg.weight_mode = cfg.weight_mode;
      if (cfg.online) {
        OnlinePshmm session = OnlinePshmm::warm_up(train, d, cfg.gamma, pcfg);
        for (long j = 1; j < n; ++j) {
          const OnlineStepOutput out = session.step(day_rows[j - 1].returns);
          preds.row(j) = out.x_hat.transpose();
          have[j] = true;
        }
      } else {
        const PshmmModel model = fit_pshmm(train, d, pcfg);
        BeliefVector belief = model.initial_belief();
        for (long j = 1; j < n; ++j) {
          const Eigen::VectorXd w = model.observation_weight(day_rows[j - 1].returns);
          const PshmmPrediction pred = predict_pshmm(model, belief, w);
          belief = pred.w_next;
          preds.row(j) = pred.x_hat.transpose();
          have[j] = true;
        }
      }
      break;
    }
  }

  DayScore score;
  score.preds.assign(p, Eigen::VectorXd());
  score.actuals.assign(p, Eigen::VectorXd());
  std::vector<std::vector<double>> pv(p), av(p);
  for (long j = 1; j < n; ++j) {
    if (!have[j] || !day_rows[j].contiguous) continue;
    for (int c = 0; c < p; ++c) {
      pv[c].push_back(preds(j, c));
      av[c].push_back(day_rows[j].returns(c));
    }
    ++score.scored;
  }
  for (int c = 0; c < p; ++c) {
    score.preds[c] = Eigen::Map<Eigen::VectorXd>(pv[c].data(), static_cast<long>(pv[c].size()));
    score.actuals[c] = Eigen::Map<Eigen::VectorXd>(av[c].data(), static_cast<long>(av[c].size()));
  }
  return score;
}

}  // namespace

BacktestReport run_rolling_backtest(const std::vector<MinuteBarSeries>& series,
                                    const BacktestConfig& cfg) {
  if (series.empty()) throw std::invalid_argument("run_rolling_backtest: no series");
  if (cfg.train_days < 1) throw std::invalid_argument("run_rolling_backtest: train_days < 1");

  const std::vector<MinuteRow> rows = align_returns(series);
  std::map<std::int64_t, std::pair<long, long>> day_span;  // day -> [first,last) row
  for (long i = 0; i < static_cast<long>(rows.size()); ++i) {
    const std::int64_t day = day_of(rows[i].timestamp);
    auto it = day_span.find(day);
    if (it == day_span.end())
      day_span[day] = {i, i + 1};
    else
      it->second.second = i + 1;
  }
  std::vector<std::int64_t> days;
  for (const auto& [day, span] : day_span) days.push_back(day);
  if (static_cast<long>(days.size()) < cfg.train_days + 1)
    throw InsufficientDataError("run_rolling_backtest: need train_days + 1 days of data");

  BacktestReport report;
  report.config = cfg;

  const int p = static_cast<int>(series.size());
  long attempted = 0;
  for (std::size_t di = cfg.train_days; di < days.size(); ++di) {
    ++attempted;

    // Trailing train window: rows of the previous train_days calendar days.
    std::vector<long> train_rows;
    for (int back = cfg.train_days; back >= 1; --back) {
      const auto span = day_span.at(days[di - back]);
      for (long r = span.first; r < span.second; ++r) train_rows.push_back(r);
    }
    Eigen::MatrixXd train(static_cast<long>(train_rows.size()), p);
    for (std::size_t r = 0; r < train_rows.size(); ++r)
      train.row(static_cast<long>(r)) = rows[train_rows[r]].returns.transpose();

    const auto span = day_span.at(days[di]);
    std::vector<MinuteRow> day_rows(rows.begin() + span.first, rows.begin() + span.second);
    // The first row of the day never scores; its predecessor belongs to the
    // previous day.
    if (!day_rows.empty()) day_rows[0].contiguous = false;

    try {
      const DayScore score = score_day(day_rows, train, cfg);
      if (score.scored == 0) {
        report.skipped_days.push_back(days[di]);
        continue;
      }
      report.daily_returns.push_back(daily_strategy_return(score.preds, score.actuals));
      report.scored_days.push_back(days[di]);
      report.predictions_per_day.push_back(score.scored);
    } catch (const std::exception&) {
      report.skipped_days.push_back(days[di]);
    }
  }

  if (report.daily_returns.size() >= 1)
    report.annualized_return = annualized_return(report.daily_returns);
  if (report.daily_returns.size() >= 2) {
    try {
      report.sharpe = sharpe_ratio(report.daily_returns);
    } catch (const UndefinedMetricError&) {
      report.sharpe = 0.0;
    }
    report.max_drawdown = max_drawdown(report.daily_returns);
  }
  report.valid = !report.daily_returns.empty() &&
                 static_cast<double>(report.skipped_days.size()) <=
                     cfg.max_skip_fraction * static_cast<double>(attempted);
  return report;
}

std::vector<MinuteBarSeries> load_market_dir(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw IngestionError("no .csv files under " + dir);
  std::vector<MinuteBarSeries> series;
  for (const auto& p : paths) series.push_back(ingest_minute_bars(p));
  return series;
}

std::vector<MinuteBarSeries> make_market_fixture(const FixtureConfig& cfg) {
  const int p = cfg.currencies;
  const long total = static_cast<long>(cfg.days) * cfg.minutes_per_day;

  HmmSpec spec;
  spec.states = cfg.states;
  spec.pi0 = Eigen::VectorXd::Constant(cfg.states, 1.0 / cfg.states);
  spec.transition = build_transition(cfg.states, cfg.p_stay);
  spec.means.resize(p, cfg.states);
  // Regime means: strong gain, mild gain, mild loss, strong loss (cycled if
  // more states), with a mild per-currency tilt.
  for (int c = 0; c < p; ++c) {
    const double tilt = 1.0 + 0.12 * c;
    for (int s = 0; s < cfg.states; ++s) {
      const double base = (s % 4 == 0)   ? cfg.base_move
                          : (s % 4 == 1) ? cfg.small_move
                          : (s % 4 == 2) ? -cfg.small_move
                                         : -cfg.base_move;
      spec.means(c, s) = base * tilt;
    }
  }
  spec.sigma = cfg.sigma;

  const Trajectory traj = sample_trajectory(spec, total, cfg.seed);

  // 2022-07-01 00:00 UTC in epoch minutes.
  const std::int64_t start_minute = parse_iso_minutes("2022-07-01T00:00:00Z");

  std::vector<MinuteBarSeries> series(p);
  for (int c = 0; c < p; ++c) {
    MinuteBarSeries& s = series[c];
    s.name = "cur" + std::to_string(c + 1);
    s.timestamps.resize(total);
    s.closes.resize(total);
    double close = 100.0 * (c + 1);
    for (long i = 0; i < total; ++i) {
      const long day = i / cfg.minutes_per_day;
      const long minute = i % cfg.minutes_per_day;
      s.timestamps[i] = start_minute + day * kMinutesPerDay + minute;
      if (i > 0) close *= std::exp(traj.observations(i, c));
      s.closes[i] = close;
    }
    s.log_returns.resize(total - 1);
    s.gap_after.resize(total - 1);
    for (long i = 0; i + 1 < total; ++i) {
      s.log_returns[i] = std::log(s.closes[i + 1] / s.closes[i]);
      s.gap_after[i] = s.timestamps[i + 1] - s.timestamps[i] > 1;
    }
  }
  return series;
}

std::vector<MinuteBarSeries> write_market_fixture(const std::string& dir,
                                                  const FixtureConfig& cfg) {
  std::filesystem::create_directories(dir);
  std::vector<MinuteBarSeries> series = make_market_fixture(cfg);
  for (const auto& s : series)
    write_minute_bars((std::filesystem::path(dir) / (s.name + ".csv")).string(), s);
  return series;
}

}  // namespace shmm
