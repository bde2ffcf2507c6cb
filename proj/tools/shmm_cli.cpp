// Command-line driver: simulate, fit, predict, fit-em, verify-clt, bench,
// backtest, fixture. Exit code 0 only on fully valid runs.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "shmm/backtest.hpp"
#include "shmm/baselines.hpp"
#include "shmm/bench.hpp"
#include "shmm/hmm_model.hpp"
#include "shmm/metrics.hpp"
#include "shmm/pshmm.hpp"
#include "shmm/serialize.hpp"
#include "shmm/theory.hpp"
#include "shmm/trajectory_io.hpp"

namespace {

using namespace shmm;

struct SimulateArgs {
  int states = 5;
  int dim = 100;
  double p_stay = 0.6;
  double sigma = 0.05;
  std::string family = "gaussian";
  int t_dof = 5;
  long length = 10000;
  std::uint64_t seed = 0;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  HmmSpec spec;
  spec.states = a.states;
  spec.pi0 = Eigen::VectorXd::Constant(a.states, 1.0 / a.states);
  spec.transition = build_transition(a.states, a.p_stay);
  spec.means = one_hot_means(a.states, a.dim);
  spec.sigma = a.sigma;
  spec.family = a.family == "student_t" ? EmissionFamily::kStudentT : EmissionFamily::kGaussian;
  spec.t_dof = a.t_dof;
  const Trajectory traj = sample_trajectory(spec, a.length, a.seed);
  write_trajectory_csv(a.out, traj);
  std::printf("wrote %ld rows x %d dims to %s\n", traj.length(), a.dim, a.out.c_str());
  return 0;
}

struct FitArgs {
  std::string input;
  std::string out;
  std::string model = "pshmm";
  std::string variant = "simplex";
  std::string weights = "moment";
  std::string basis = "bigram";
  std::string svd = "dense";
  int d = 5;
  std::uint64_t seed = 0;
};

PshmmConfig pshmm_config(const FitArgs& a) {
  PshmmConfig cfg;
  cfg.seed = a.seed;
  cfg.variant =
      a.variant == "polyhedron" ? ProjectionVariant::kPolyhedron : ProjectionVariant::kSimplex;
  cfg.weight_mode =
      a.weights == "probability" ? WeightMode::kProbability : WeightMode::kMoment;
  cfg.source = a.basis == "unigram" ? BasisSource::kUnigram : BasisSource::kBigram;
  cfg.method = a.svd == "randomized" ? SvdMethod::kRandomized : SvdMethod::kDense;
  cfg.rsvd.seed = a.seed;
  return cfg;
}

int run_fit(const FitArgs& a) {
  const Eigen::MatrixXd x = read_observation_csv(a.input);
  Json j;
  if (a.model == "shmm") {
    ShmmConfig cfg;
    cfg.source = a.basis == "unigram" ? BasisSource::kUnigram : BasisSource::kBigram;
    cfg.method = a.svd == "randomized" ? SvdMethod::kRandomized : SvdMethod::kDense;
    cfg.rsvd.seed = a.seed;
    j = shmm_to_json(fit_shmm(x, a.d, cfg));
  } else {
    j = pshmm_to_json(fit_pshmm(x, a.d, pshmm_config(a)));
  }
  write_json_file(a.out, j);
  std::printf("fitted %s (d=%d) on %ld rows -> %s\n", a.model.c_str(), a.d, x.rows(),
              a.out.c_str());
  return 0;
}

struct PredictArgs {
  std::string stream;
  std::string model_path;
  std::string out;
  long warmup = 0;
  double gamma = 0.0;
  FitArgs fit;  // used when no fitted model is given
};

int run_predict(const PredictArgs& a) {
  const Eigen::MatrixXd x = read_observation_csv(a.stream);

  if (!a.model_path.empty()) {
    // Offline: fixed operators, recursive predictions over the stream.
    const Json j = read_json_file(a.model_path);
    if (j.value("model", "") == "shmm") {
      const ShmmModel model = shmm_from_json(j);
      const PredictionRun run = predict_shmm(model, x);
      write_prediction_csv(a.out, run.predictions, run.fallback, 1);
    } else {
      const PshmmModel model = pshmm_from_json(j);
      const PredictionRun run = predict_pshmm_run(model, x);
      write_prediction_csv(a.out, run.predictions, run.fallback, 1);
    }
    std::printf("wrote %ld offline predictions to %s\n", x.rows() + 1, a.out.c_str());
    return 0;
  }

  // Online: warm-up fit on the stream head, then streaming updates.
  if (a.warmup < 3) {
    std::fprintf(stderr, "predict: need --warmup >= 3 (or --model)\n");
    return 1;
  }
  OnlineRun run;
  if (a.fit.model == "shmm") {
    ShmmConfig cfg;
    cfg.source = a.fit.basis == "unigram" ? BasisSource::kUnigram : BasisSource::kBigram;
    cfg.method = a.fit.svd == "randomized" ? SvdMethod::kRandomized : SvdMethod::kDense;
    cfg.rsvd.seed = a.fit.seed;
    run = run_online_shmm(x, a.warmup, a.gamma, a.fit.d, cfg);
  } else {
    run = run_online_pshmm(x, a.warmup, a.gamma, a.fit.d, pshmm_config(a.fit));
  }
  write_prediction_csv(a.out, run.predictions, run.fallback, a.warmup + 1);
  std::printf("wrote %ld online predictions (t=%ld..%ld) to %s\n", run.predictions.rows(),
              a.warmup + 1, a.warmup + run.predictions.rows(), a.out.c_str());
  return 0;
}

struct FitEmArgs {
  std::string input;
  std::string out;
  int states = 4;
  int restarts = 3;
  int max_iters = 200;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

int run_fit_em(const FitEmArgs& a) {
  const Eigen::MatrixXd x = read_observation_csv(a.input);
  BaumWelchOptions opts;
  opts.restarts = a.restarts;
  opts.max_iters = a.max_iters;
  opts.tol = a.tol;
  const GhmmModel model = fit_baum_welch(x, a.states, a.seed, opts);

  Json j;
  j["model"] = "ghmm";
  j["states"] = model.states;
  j["p"] = model.obs_dim();
  j["pi0"] = std::vector<double>(model.pi0.data(), model.pi0.data() + model.pi0.size());
  Json t = Json::array();
  for (int i = 0; i < model.states; ++i)
    for (int c = 0; c < model.states; ++c) t.push_back(model.transition(i, c));
  j["transition_rowmajor"] = t;
  Json means = Json::array();
  for (int r = 0; r < model.obs_dim(); ++r)
    for (int c = 0; c < model.states; ++c) means.push_back(model.means(r, c));
  j["means_rowmajor"] = means;
  j["variances"] =
      std::vector<double>(model.variances.data(), model.variances.data() + model.states);
  j["loglik"] = model.loglik_trace.empty() ? 0.0 : model.loglik_trace.back();
  j["iterations"] = model.loglik_trace.size();
  write_json_file(a.out, j);
  std::printf("fitted %d-state GHMM in %zu iterations, loglik %.6g -> %s\n", a.states,
              model.loglik_trace.size(),
              model.loglik_trace.empty() ? 0.0 : model.loglik_trace.back(), a.out.c_str());
  return 0;
}

struct VerifyCltArgs {
  int d = 2;
  int t_seq = 3;
  std::string n_list = "1000,10000";
  int reps = 500;
  std::uint64_t seed = 0;
  double sigma = 0.4;
  double p_stay = 0.7;
  std::string out = "clt_report.json";
  std::string samples_csv;
};

int run_verify_clt(const VerifyCltArgs& a) {
  HmmSpec spec;
  spec.states = a.d;
  spec.pi0 = Eigen::VectorXd::Constant(a.d, 1.0 / a.d);
  spec.transition = build_transition(a.d, a.p_stay);
  spec.means = one_hot_means(a.d, a.d + 1);
  spec.sigma = a.sigma;

  std::vector<long> n_values;
  std::stringstream ss(a.n_list);
  std::string item;
  while (std::getline(ss, item, ',')) n_values.push_back(std::stol(item));

  const TheoryCheckReport report = clt_experiment(spec, a.t_seq, n_values, a.reps, a.seed);
  write_json_file(a.out, theory_report_to_json(report));

  if (!a.samples_csv.empty()) {
    std::ofstream csv(a.samples_csv);
    csv << "n,sample\n";
    char buf[64];
    for (const auto& per : report.per_n)
      for (double s : per.samples) {
        std::snprintf(buf, sizeof(buf), "%ld,%.17g\n", per.n, s);
        csv << buf;
      }
  }

  bool ok = true;
  std::printf("sigma2_theory = %.6g (se %.2g)\n", report.sigma2_theory,
              report.sigma2_theory_se);
  for (const auto& per : report.per_n) {
    const double ratio = per.variance / report.sigma2_theory;
    const bool mean_ok = std::abs(per.mean) < 3.0 * per.mean_std_error;
    std::printf(
        "N=%-8ld reps=%d excluded=%d mean=%.4g (se %.2g) var=%.6g ratio=%.3f ks_p=%.3g\n",
        per.n, per.replicates, per.excluded, per.mean, per.mean_std_error, per.variance,
        ratio, per.ks_p_value);
    ok = ok && mean_ok && ratio > 0.8 && ratio < 1.2;
  }
  std::printf("report written to %s\n", a.out.c_str());
  return ok ? 0 : 1;
}

int run_backtest(const std::string& data_dir, BacktestConfig cfg, const std::string& method,
                 const std::string& variant, const std::string& weights,
                 const std::string& out, const std::string& preds_out) {
  cfg.method = parse_backtest_method(method);
  cfg.variant =
      variant == "polyhedron" ? ProjectionVariant::kPolyhedron : ProjectionVariant::kSimplex;
  cfg.weight_mode = weights == "probability" ? WeightMode::kProbability : WeightMode::kMoment;

  const auto series = load_market_dir(data_dir);
  const BacktestReport report = run_rolling_backtest(series, cfg);

  Json j;
  j["method"] = method;
  j["train_days"] = cfg.train_days;
  j["states"] = cfg.states;
  j["online"] = cfg.online;
  j["gamma"] = cfg.gamma;
  j["seed"] = cfg.seed;
  j["currencies"] = series.size();
  j["daily_returns"] = report.daily_returns;
  j["annualized_return"] = report.annualized_return;
  j["sharpe"] = report.sharpe;
  j["max_drawdown"] = report.max_drawdown;
  j["scored_days"] = report.scored_days;
  j["predictions_per_day"] = report.predictions_per_day;
  j["skipped_days"] = report.skipped_days;
  j["valid"] = report.valid;
  if (!out.empty()) write_json_file(out, j);

  std::printf("%s backtest: %zu days, annualized %.4f, sharpe %.4f, max drawdown %.4f%s\n",
              method.c_str(), report.daily_returns.size(), report.annualized_return,
              report.sharpe, report.max_drawdown, report.valid ? "" : " [INVALID]");
  (void)preds_out;
  return report.valid ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral HMM toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "sample an HMM trajectory to CSV");
  simulate->add_option("--states", sim.states);
  simulate->add_option("--dim", sim.dim);
  simulate->add_option("--p-stay", sim.p_stay);
  simulate->add_option("--sigma", sim.sigma);
  simulate->add_option("--family", sim.family)->check(CLI::IsMember({"gaussian", "student_t"}));
  simulate->add_option("--t-dof", sim.t_dof);
  simulate->add_option("--length", sim.length);
  simulate->add_option("--seed", sim.seed);
  simulate->add_option("--out", sim.out)->required();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit a spectral model on a trajectory CSV");
  fit_cmd->add_option("--input", fit.input)->required();
  fit_cmd->add_option("--out", fit.out)->required();
  fit_cmd->add_option("--model", fit.model)->check(CLI::IsMember({"pshmm", "shmm"}));
  fit_cmd->add_option("--variant", fit.variant)
      ->check(CLI::IsMember({"simplex", "polyhedron"}));
  fit_cmd->add_option("--weights", fit.weights)
      ->check(CLI::IsMember({"moment", "probability"}));
  fit_cmd->add_option("--basis", fit.basis)->check(CLI::IsMember({"bigram", "unigram"}));
  fit_cmd->add_option("--svd", fit.svd)->check(CLI::IsMember({"dense", "randomized"}));
  fit_cmd->add_option("--d", fit.d)->required();
  fit_cmd->add_option("--seed", fit.seed);

  PredictArgs pred;
  auto* predict = app.add_subcommand("predict", "recursive predictions over a stream CSV");
  predict->add_option("--stream", pred.stream)->required();
  predict->add_option("--model", pred.model_path);
  predict->add_option("--out", pred.out)->required();
  predict->add_option("--warmup", pred.warmup);
  predict->add_option("--gamma", pred.gamma);
  predict->add_option("--method", pred.fit.model)->check(CLI::IsMember({"pshmm", "shmm"}));
  predict->add_option("--variant", pred.fit.variant)
      ->check(CLI::IsMember({"simplex", "polyhedron"}));
  predict->add_option("--weights", pred.fit.weights)
      ->check(CLI::IsMember({"moment", "probability"}));
  predict->add_option("--basis", pred.fit.basis)->check(CLI::IsMember({"bigram", "unigram"}));
  predict->add_option("--svd", pred.fit.svd)->check(CLI::IsMember({"dense", "randomized"}));
  predict->add_option("--d", pred.fit.d);
  predict->add_option("--seed", pred.fit.seed);

  FitEmArgs em;
  auto* fit_em = app.add_subcommand("fit-em", "Baum-Welch Gaussian HMM baseline");
  fit_em->add_option("--input", em.input)->required();
  fit_em->add_option("--out", em.out)->required();
  fit_em->add_option("--states", em.states);
  fit_em->add_option("--restarts", em.restarts);
  fit_em->add_option("--max-iters", em.max_iters);
  fit_em->add_option("--tol", em.tol);
  fit_em->add_option("--seed", em.seed);

  VerifyCltArgs clt;
  auto* verify = app.add_subcommand("verify-clt", "Monte-Carlo check of the error CLT");
  verify->add_option("--d", clt.d);
  verify->add_option("--T", clt.t_seq);
  verify->add_option("--N", clt.n_list);
  verify->add_option("--reps", clt.reps);
  verify->add_option("--seed", clt.seed);
  verify->add_option("--sigma", clt.sigma);
  verify->add_option("--p-stay", clt.p_stay);
  verify->add_option("--out", clt.out);
  verify->add_option("--samples-csv", clt.samples_csv);

  BenchConfig bench_cfg;
  auto* bench = app.add_subcommand("bench", "timing comparison across methods");
  bench->add_option("--dim", bench_cfg.obs_dim);
  bench->add_option("--states", bench_cfg.states);
  bench->add_option("--sigma", bench_cfg.sigma);
  bench->add_option("--length", bench_cfg.length);
  bench->add_option("--warmup", bench_cfg.warmup);
  bench->add_option("--test-steps", bench_cfg.test_steps);
  bench->add_option("--repeats", bench_cfg.repeats);
  bench->add_option("--seed", bench_cfg.seed);
  bench->add_flag("--em", bench_cfg.include_em);
  std::string bench_out;
  bench->add_option("--out", bench_out);

  BacktestConfig bt_cfg;
  std::string bt_data, bt_method = "pshmm", bt_variant = "simplex", bt_weights = "moment";
  std::string bt_out, bt_preds;
  auto* backtest = app.add_subcommand("backtest", "rolling-window trading backtest");
  backtest->add_option("--data", bt_data)->required();
  backtest->add_option("--method", bt_method)
      ->check(CLI::IsMember({"pshmm", "shmm", "em", "ar"}));
  backtest->add_option("--train-days", bt_cfg.train_days);
  backtest->add_option("--states", bt_cfg.states);
  backtest->add_flag("--online", bt_cfg.online);
  backtest->add_option("--gamma", bt_cfg.gamma);
  backtest->add_option("--seed", bt_cfg.seed);
  backtest->add_option("--variant", bt_variant)
      ->check(CLI::IsMember({"simplex", "polyhedron"}));
  backtest->add_option("--weights", bt_weights)
      ->check(CLI::IsMember({"moment", "probability"}));
  backtest->add_option("--out", bt_out);
  backtest->add_option("--preds-out", bt_preds);

  FixtureConfig fix_cfg;
  std::string fix_out;
  auto* fixture = app.add_subcommand("fixture", "write the synthetic market fixture");
  fixture->add_option("--out", fix_out)->required();
  fixture->add_option("--days", fix_cfg.days);
  fixture->add_option("--minutes-per-day", fix_cfg.minutes_per_day);
  fixture->add_option("--currencies", fix_cfg.currencies);
  fixture->add_option("--states", fix_cfg.states);
  fixture->add_option("--p-stay", fix_cfg.p_stay);
  fixture->add_option("--sigma", fix_cfg.sigma);
  fixture->add_option("--seed", fix_cfg.seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return run_simulate(sim);
    if (*fit_cmd) return run_fit(fit);
    if (*predict) return run_predict(pred);
    if (*fit_em) return run_fit_em(em);
    if (*verify) return run_verify_clt(clt);
    if (*bench) {
      const BenchTable table = bench_timing(bench_cfg);
      std::fputs(format_bench_table(table).c_str(), stdout);
      if (!bench_out.empty()) {
        Json j;
        for (const auto& row : table.rows)
          j[row.method + "/" + row.mode] = row.seconds;
        write_json_file(bench_out, j);
      }
      return 0;
    }
    if (*backtest)
      return run_backtest(bt_data, bt_cfg, bt_method, bt_variant, bt_weights, bt_out, bt_preds);
    if (*fixture) {
      const auto series = write_market_fixture(fix_out, fix_cfg);
      std::printf("wrote %zu series x %zu bars under %s\n", series.size(), series[0].size(),
                  fix_out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
