#include "shmm/pshmm.hpp"

#include <stdexcept>

#include <Eigen/Dense>

#include "shmm/errors.hpp"

namespace shmm {

Eigen::VectorXd PshmmModel::observation_weight(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = basis.u.transpose() * x;
  if (weight_mode == WeightMode::kMoment) return weights_moment(y, mixture.means);
  return weights_probability(y, mixture).w;
}

Eigen::VectorXd PshmmModel::apply_projection(const Eigen::VectorXd& w) const {
  if (variant == ProjectionVariant::kSimplex) return project_simplex(w);
  return polyhedron_weights(mixture.means * w, mixture.means, poly);
}

BeliefVector PshmmModel::initial_belief() const { return BeliefVector{apply_projection(ops.c1)}; }

Eigen::VectorXd PshmmModel::reconstruct_weight(const Eigen::VectorXd& w) const {
  return basis.u * (mixture.means * w);
}

PshmmModel fit_pshmm(const Eigen::MatrixXd& x, int d, const PshmmConfig& cfg) {
  if (x.rows() < 3) throw InsufficientDataError("fit_pshmm: need at least 3 rows");
  if (d > x.cols()) throw std::invalid_argument("fit_pshmm: d exceeds observation dimension");

  PshmmModel model;
  model.variant = cfg.variant;
  model.weight_mode = cfg.weight_mode;
  model.poly = cfg.poly;

  RandomizedSvdOptions rsvd = cfg.rsvd;
  rsvd.seed = cfg.seed;
  model.basis = estimate_basis(x, d, cfg.source, cfg.method, rsvd);

  const Eigen::MatrixXd y = x * model.basis.u;
  model.mixture = fit_gmm(y, d, cfg.seed, cfg.gmm);

  Eigen::MatrixXd w(y.rows(), d);
  if (cfg.weight_mode == WeightMode::kMoment) {
    // Same condition guard as weights_moment, then one factorization for
    // the whole block: w_t = M^{-1} y_t.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(model.mixture.means);
    const auto& sv = svd.singularValues();
    const double cond = sv(0) / std::max(sv(d - 1), 1e-300);
    if (!(cond < 1e10))
      throw SingularMatrixError("fit_pshmm: cluster mean matrix is ill-conditioned", cond);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(model.mixture.means);
    w = lu.solve(y.transpose()).transpose();
  } else {
    for (long t = 0; t < y.rows(); ++t)
      w.row(t) = weights_probability(y.row(t).transpose(), model.mixture).w.transpose();
  }

  model.moments = estimate_batch(w);
  model.ops = build_operators(model.moments);
  return model;
}

PshmmPrediction predict_pshmm(const PshmmModel& model, const BeliefVector& w_prev,
                              const Eigen::VectorXd& w_obs) {
  PshmmPrediction out;
  auto raw = try_propagate(model.ops, w_prev.b, w_obs);
  if (raw && raw->allFinite()) {
    out.w_next = BeliefVector{model.apply_projection(*raw)};
  } else {
    out.w_next = BeliefVector{model.apply_projection(w_prev.b)};
    out.fallback = true;
  }
  out.x_hat = model.reconstruct_weight(out.w_next.b);
  return out;
}

PredictionRun predict_pshmm_run(const PshmmModel& model, const Eigen::MatrixXd& x_test) {
  const long t_len = x_test.rows();
  PredictionRun run;
  run.predictions.resize(t_len + 1, model.obs_dim());
  run.fallback.assign(t_len + 1, false);

  BeliefVector belief = model.initial_belief();
  run.predictions.row(0) = model.reconstruct_weight(belief.b).transpose();
  for (long t = 0; t < t_len; ++t) {
    const Eigen::VectorXd w_obs = model.observation_weight(x_test.row(t).transpose());
    PshmmPrediction pred = predict_pshmm(model, belief, w_obs);
    belief = pred.w_next;
    run.fallback[t + 1] = pred.fallback;
    run.predictions.row(t + 1) = pred.x_hat.transpose();
  }
  return run;
}

namespace {

// Moment update that never throws: applies the plain or forgetful rule.
void update_moments(MomentAccumulator& acc, const Eigen::VectorXd& w, double gamma) {
  if (gamma > 0.0)
    update_forgetful(acc, w, gamma);
  else
    update_online(acc, w);
}

}  // namespace

OnlinePshmm::OnlinePshmm(PshmmModel model, MomentAccumulator acc, double gamma)
    : model_(std::move(model)), acc_(std::move(acc)), gamma_(gamma) {}

OnlinePshmm OnlinePshmm::warm_up(const Eigen::MatrixXd& x_warm, int d, double gamma,
                                 const PshmmConfig& cfg) {
  if (x_warm.rows() < 3) throw InsufficientDataError("OnlinePshmm: warm-up too short");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("OnlinePshmm: gamma must lie in [0,1)");

  PshmmModel model = fit_pshmm(x_warm, d, cfg);

  // Weight sequence over the warm-up block for the accumulator history and
  // the initial recursive belief pass.
  const long l = x_warm.rows();
  Eigen::MatrixXd w(l, d);
  for (long t = 0; t < l; ++t)
    w.row(t) = model.observation_weight(x_warm.row(t).transpose()).transpose();

  MomentAccumulator acc = MomentAccumulator::warm_start(
      model.moments, w.row(l - 2).transpose(), w.row(l - 1).transpose());

  OnlinePshmm session(std::move(model), std::move(acc), gamma);

  // Recursive projected pass through the warm-up block yields the belief and
  // the prediction for the first post-warm-up arrival.
  BeliefVector belief = session.model_.initial_belief();
  bool fallback = false;
  for (long t = 0; t < l; ++t) {
    PshmmPrediction pred = predict_pshmm(session.model_, belief, w.row(t).transpose());
    belief = pred.w_next;
    fallback = pred.fallback;
  }
  session.belief_ = belief;
  session.pending_ = session.model_.reconstruct_weight(belief.b);
  session.pending_fallback_ = fallback;
  return session;
}

OnlineStepOutput OnlinePshmm::step(const Eigen::VectorXd& x) {
  OnlineStepOutput out;
  bool flagged = false;

  Eigen::VectorXd w_obs;
  try {
    w_obs = model_.observation_weight(x);
    update_moments(acc_, w_obs, gamma_);
    model_.ops = build_operators(acc_.moments());
  } catch (const NumericalError&) {
    flagged = true;  // keep previous operators, hold belief below
  }

  if (!flagged && w_obs.size() == model_.dim()) {
    PshmmPrediction pred = predict_pshmm(model_, belief_, w_obs);
    belief_ = pred.w_next;
    flagged = pred.fallback;
  } else {
    belief_ = BeliefVector{model_.apply_projection(belief_.b)};
    flagged = true;
  }

  pending_ = model_.reconstruct_weight(belief_.b);
  pending_fallback_ = flagged;
  out.x_hat = pending_;
  out.fallback = flagged;
  return out;
}

OnlineRun run_online_pshmm(const Eigen::MatrixXd& x, long warmup_len, double gamma,
                           int d, const PshmmConfig& cfg) {
  if (warmup_len < 3 || warmup_len > x.rows())
    throw std::invalid_argument("run_online_pshmm: invalid warm-up length");

  OnlinePshmm session = OnlinePshmm::warm_up(x.topRows(warmup_len), d, gamma, cfg);
  const long n_out = x.rows() - warmup_len + 1;
  OnlineRun run;
  run.predictions.resize(n_out, x.cols());
  run.fallback.assign(n_out, false);

  run.predictions.row(0) = session.pending_prediction().transpose();
  run.fallback[0] = session.pending_fallback();
  for (long t = warmup_len; t < x.rows(); ++t) {
    OnlineStepOutput out = session.step(x.row(t).transpose());
    run.predictions.row(t - warmup_len + 1) = out.x_hat.transpose();
    run.fallback[t - warmup_len + 1] = out.fallback;
  }
  return run;
}

OnlineShmm::OnlineShmm(ShmmModel model, MomentAccumulator acc, double gamma)
    : model_(std::move(model)), acc_(std::move(acc)), gamma_(gamma) {}

OnlineShmm OnlineShmm::warm_up(const Eigen::MatrixXd& x_warm, int d, double gamma,
                               const ShmmConfig& cfg) {
  if (x_warm.rows() < 3) throw InsufficientDataError("OnlineShmm: warm-up too short");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("OnlineShmm: gamma must lie in [0,1)");

  ShmmModel model = fit_shmm(x_warm, d, cfg);
  const long l = x_warm.rows();
  const Eigen::MatrixXd y = x_warm * model.basis.u;

  MomentAccumulator acc = MomentAccumulator::warm_start(
      model.moments, y.row(l - 2).transpose(), y.row(l - 1).transpose());

  OnlineShmm session(std::move(model), std::move(acc), gamma);

  Eigen::VectorXd belief = session.model_.ops.c1;
  for (long t = 0; t < l; ++t) {
    auto next = try_propagate(session.model_.ops, belief, y.row(t).transpose());
    if (next && next->allFinite()) belief = std::move(*next);
  }
  session.belief_ = belief;
  session.pending_ = session.model_.basis.u * belief;
  return session;
}

OnlineStepOutput OnlineShmm::step(const Eigen::VectorXd& x) {
  OnlineStepOutput out;
  bool flagged = false;

  const Eigen::VectorXd y_obs = model_.basis.u.transpose() * x;
  try {
    update_moments(acc_, y_obs, gamma_);
    model_.ops = build_operators(acc_.moments());
  } catch (const NumericalError&) {
    flagged = true;
  }

  auto next = try_propagate(model_.ops, belief_, y_obs);
  if (next && next->allFinite()) {
    belief_ = std::move(*next);
  } else {
    flagged = true;  // hold belief
  }

  pending_ = model_.basis.u * belief_;
  out.x_hat = pending_;
  out.fallback = flagged;
  return out;
}

OnlineRun run_online_shmm(const Eigen::MatrixXd& x, long warmup_len, double gamma,
                          int d, const ShmmConfig& cfg) {
  if (warmup_len < 3 || warmup_len > x.rows())
    throw std::invalid_argument("run_online_shmm: invalid warm-up length");

  OnlineShmm session = OnlineShmm::warm_up(x.topRows(warmup_len), d, gamma, cfg);
  const long n_out = x.rows() - warmup_len + 1;
  OnlineRun run;
  run.predictions.resize(n_out, x.cols());
  run.fallback.assign(n_out, false);

  run.predictions.row(0) = session.pending_prediction().transpose();
  for (long t = warmup_len; t < x.rows(); ++t) {
    OnlineStepOutput out = session.step(x.row(t).transpose());
    run.predictions.row(t - warmup_len + 1) = out.x_hat.transpose();
    run.fallback[t - warmup_len + 1] = out.fallback;
  }
  return run;
}

}  // namespace shmm
