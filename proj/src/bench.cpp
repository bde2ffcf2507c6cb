#include "shmm/bench.hpp"

#include <chrono>
#include <sstream>

#include <Eigen/Dense>

#include "shmm/baselines.hpp"
#include "shmm/hmm_model.hpp"
#include "shmm/pshmm.hpp"

namespace shmm {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Offline SHMM: refit on x[0..t) and run the full recursive pass before
// predicting test step t.
double time_shmm_offline(const Eigen::MatrixXd& x, long warmup, long steps, int d) {
  const auto start = Clock::now();
  volatile double sink = 0.0;
  for (long t = warmup; t < warmup + steps; ++t) {
    const ShmmModel model = fit_shmm(x.topRows(t), d);
    Eigen::VectorXd belief = model.ops.c1;
    for (long s = 0; s < t; ++s) {
      auto next = try_propagate(model.ops, belief, model.basis.u.transpose() * x.row(s).transpose());
      if (next && next->allFinite()) belief = std::move(*next);
    }
    sink = (model.basis.u * belief)(0);
  }
  (void)sink;
  return elapsed_seconds(start);
}

double time_pshmm_offline(const Eigen::MatrixXd& x, long warmup, long steps, int d,
                          ProjectionVariant variant) {
  PshmmConfig cfg;
  cfg.variant = variant;
  const auto start = Clock::now();
  volatile double sink = 0.0;
  for (long t = warmup; t < warmup + steps; ++t) {
    const PshmmModel model = fit_pshmm(x.topRows(t), d, cfg);
    BeliefVector belief = model.initial_belief();
    for (long s = 0; s < t; ++s) {
      const Eigen::VectorXd w = model.observation_weight(x.row(s).transpose());
      belief = predict_pshmm(model, belief, w).w_next;
    }
    sink = model.reconstruct_weight(belief.b)(0);
  }
  (void)sink;
  return elapsed_seconds(start);
}

double time_shmm_online(const Eigen::MatrixXd& x, long warmup, long steps, int d) {
  OnlineShmm session = OnlineShmm::warm_up(x.topRows(warmup), d, 0.0);
  const auto start = Clock::now();
  volatile double sink = 0.0;
  for (long t = warmup; t < warmup + steps; ++t)
    sink = session.step(x.row(t).transpose()).x_hat(0);
  (void)sink;
  return elapsed_seconds(start);
}

double time_pshmm_online(const Eigen::MatrixXd& x, long warmup, long steps, int d,
                         ProjectionVariant variant) {
  PshmmConfig cfg;
  cfg.variant = variant;
  OnlinePshmm session = OnlinePshmm::warm_up(x.topRows(warmup), d, 0.0, cfg);
  const auto start = Clock::now();
  volatile double sink = 0.0;
  for (long t = warmup; t < warmup + steps; ++t)
    sink = session.step(x.row(t).transpose()).x_hat(0);
  (void)sink;
  return elapsed_seconds(start);
}

double time_em(const Eigen::MatrixXd& x, long warmup, long steps, int states, int max_iters,
               std::uint64_t seed) {
  BaumWelchOptions opts;
  opts.max_iters = max_iters;
  opts.restarts = 1;
  const auto start = Clock::now();
  volatile double sink = 0.0;
  for (long t = warmup; t < warmup + steps; ++t) {
    const GhmmModel model = fit_baum_welch(x.topRows(t), states, seed, opts);
    const FilterResult f = forward_filter(model, x.topRows(t));
    sink = filter_prediction(model, f.posterior)(0);
  }
  (void)sink;
  return elapsed_seconds(start);
}

}  // namespace

double BenchTable::seconds(const std::string& method, const std::string& mode) const {
  for (const auto& row : rows)
    if (row.method == method && row.mode == mode) return row.seconds;
  return -1.0;
}

BenchTable bench_timing(const BenchConfig& cfg) {
  HmmSpec spec;
  spec.states = cfg.states;
  spec.pi0 = Eigen::VectorXd::Constant(cfg.states, 1.0 / cfg.states);
  spec.transition = build_transition(cfg.states, cfg.p_stay);
  spec.means = one_hot_means(cfg.states, cfg.obs_dim);
  spec.sigma = cfg.sigma;

  const long total = cfg.warmup + cfg.test_steps;
  if (cfg.length < total || cfg.warmup < 3)
    throw std::invalid_argument("bench_timing: length must cover warmup + test_steps");

  BenchTable table;
  table.config = cfg;
  const int d = cfg.states;

  std::vector<BenchRow> acc = {
      {"shmm", "offline", 0.0},          {"shmm", "online", 0.0},
      {"pshmm-simplex", "offline", 0.0}, {"pshmm-simplex", "online", 0.0},
      {"pshmm-polyhedron", "offline", 0.0}, {"pshmm-polyhedron", "online", 0.0},
  };
  if (cfg.include_em) acc.push_back({"em", "offline", 0.0});

  for (int rep = 0; rep < cfg.repeats; ++rep) {
    const Trajectory traj = sample_trajectory(spec, cfg.length, cfg.seed + rep);
    const Eigen::MatrixXd& x = traj.observations;
    for (auto& row : acc) {
      double sec = 0.0;
      if (row.method == "shmm" && row.mode == "offline")
        sec = time_shmm_offline(x, cfg.warmup, cfg.test_steps, d);
      else if (row.method == "shmm")
        sec = time_shmm_online(x, cfg.warmup, cfg.test_steps, d);
      else if (row.method == "pshmm-simplex" && row.mode == "offline")
        sec = time_pshmm_offline(x, cfg.warmup, cfg.test_steps, d, ProjectionVariant::kSimplex);
      else if (row.method == "pshmm-simplex")
        sec = time_pshmm_online(x, cfg.warmup, cfg.test_steps, d, ProjectionVariant::kSimplex);
      else if (row.method == "pshmm-polyhedron" && row.mode == "offline")
        sec = time_pshmm_offline(x, cfg.warmup, cfg.test_steps, d, ProjectionVariant::kPolyhedron);
      else if (row.method == "pshmm-polyhedron")
        sec = time_pshmm_online(x, cfg.warmup, cfg.test_steps, d, ProjectionVariant::kPolyhedron);
      else if (row.method == "em")
        sec = time_em(x, cfg.warmup, cfg.test_steps, cfg.states, cfg.em_max_iters, cfg.seed);
      row.seconds += sec;
    }
  }
  for (auto& row : acc) row.seconds /= static_cast<double>(cfg.repeats);
  table.rows = std::move(acc);
  return table;
}

std::string format_bench_table(const BenchTable& table) {
  std::ostringstream out;
  out << "method             mode     seconds\n";
  char buf[96];
  for (const auto& row : table.rows) {
    std::snprintf(buf, sizeof(buf), "%-18s %-8s %10.4f\n", row.method.c_str(), row.mode.c_str(),
                  row.seconds);
    out << buf;
  }
  return out.str();
}

}  // namespace shmm
