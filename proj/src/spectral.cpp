#include "shmm/spectral.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "shmm/errors.hpp"

namespace shmm {

namespace {

// Fixes the SVD sign ambiguity: flip each column so its largest-magnitude
// entry is positive (first such entry on ties).
void canonicalize_columns(Eigen::MatrixXd& u) {
  for (int c = 0; c < u.cols(); ++c) {
    int idx = 0;
    u.col(c).cwiseAbs().maxCoeff(&idx);
    if (u(idx, c) < 0.0) u.col(c) = -u.col(c);
  }
}

Eigen::MatrixXd gaussian_matrix(long rows, long cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) g(i, j) = gauss(rng);
  return g;
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& a) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
}

}  // namespace

SvdResult randomized_svd(const Eigen::MatrixXd& a, int rank, const RandomizedSvdOptions& opts) {
  const long n = a.rows(), p = a.cols();
  if (rank < 1 || rank > std::min(n, p))
    throw std::invalid_argument("randomized_svd: rank out of range");
  const long sketch = std::min<long>(rank + opts.oversample, std::min(n, p));

  Eigen::MatrixXd q = orthonormalize(a * gaussian_matrix(p, sketch, opts.seed));
  for (int it = 0; it < opts.power_iters; ++it) {
    q = orthonormalize(a.transpose() * q);
    q = orthonormalize(a * q);
  }
  const Eigen::MatrixXd small = q.transpose() * a;  // sketch x p
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(small, Eigen::ComputeThinU | Eigen::ComputeThinV);

  SvdResult out;
  out.left = (q * svd.matrixU()).leftCols(rank);
  out.singular_values = svd.singularValues().head(rank);
  out.right = svd.matrixV().leftCols(rank);
  return out;
}

SvdResult randomized_bigram_svd(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2,
                                int d_tilde, const RandomizedSvdOptions& opts) {
  if (x1.rows() != x2.rows() || x1.cols() != x2.cols())
    throw std::invalid_argument("randomized_bigram_svd: x1/x2 shape mismatch");
  const long n = x1.rows();
  if (d_tilde < 1 || d_tilde > std::min(n, x1.cols()))
    throw std::invalid_argument("randomized_bigram_svd: d_tilde out of range");

  RandomizedSvdOptions o1 = opts;
  RandomizedSvdOptions o2 = opts;
  o2.seed = opts.seed + 0x9e3779b97f4a7c15ULL;
  const SvdResult r1 = randomized_svd(x1, d_tilde, o1);
  const SvdResult r2 = randomized_svd(x2, d_tilde, o2);

  // x2^T x1 = V2 (S2 U2^T U1 S1) V1^T; the small core's SVD rotates the V
  // factors into the singular vectors of the full product.
  const Eigen::MatrixXd core = r2.singular_values.asDiagonal() * (r2.left.transpose() * r1.left) *
                               r1.singular_values.asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);

  const double scale = 1.0 / static_cast<double>(n - 1);
  SvdResult out;
  out.left = r2.right * svd.matrixU();
  out.singular_values = svd.singularValues() * scale;
  out.right = r1.right * svd.matrixV();
  return out;
}

ProjectionBasis estimate_basis(const Eigen::MatrixXd& x, int d, BasisSource source,
                               SvdMethod method, const RandomizedSvdOptions& opts) {
  const long l = x.rows();
  const long p = x.cols();
  if (l < 3) throw InsufficientDataError("estimate_basis: need at least 3 rows");
  if (d < 1 || d > std::min<long>(p, l - 2))
    throw std::invalid_argument("estimate_basis: d out of range");

  ProjectionBasis basis;
  basis.source = source;
  basis.method = method;

  if (method == SvdMethod::kDense) {
    Eigen::MatrixXd m;
    if (source == BasisSource::kBigram) {
      m = x.bottomRows(l - 1).transpose() * x.topRows(l - 1) / static_cast<double>(l - 2);
    } else {
      m = x.transpose() * x / static_cast<double>(l);
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    if (sv(d - 1) <= 1e-10 * sv(0))
      throw RankDeficientError("estimate_basis: requested dimension exceeds numerical rank");
    basis.u = svd.matrixU().leftCols(d);
  } else {
    const int d_tilde = std::min<long>(d + opts.oversample, std::min(p, l - 1));
    SvdResult r;
    if (source == BasisSource::kBigram) {
      r = randomized_bigram_svd(x.topRows(l - 1), x.bottomRows(l - 1), d_tilde, opts);
    } else {
      r = randomized_svd(x, d_tilde, opts);
      // Unigram target is x^T x / L; left singular vectors of x^T x are the
      // right singular vectors of x.
      r.left = r.right;
    }
    const auto& sv = r.singular_values;
    if (sv(d - 1) <= 1e-10 * sv(0))
      throw RankDeficientError("estimate_basis: requested dimension exceeds numerical rank");
    basis.u = r.left.leftCols(d);
  }
  canonicalize_columns(basis.u);
  return basis;
}

SpectralOperators build_operators(const SpectralMoments& m) {
  const int d = m.dim();
  if (m.sigma.rows() != d || m.sigma.cols() != d || m.k.dim() != d)
    throw std::invalid_argument("build_operators: inconsistent moment dimensions");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.sigma);
  const auto& sv = svd.singularValues();
  const double cond = sv(0) / std::max(sv(d - 1), 1e-300);
  if (!(cond < 1e12))
    throw SingularMatrixError("build_operators: sigma is too ill-conditioned", cond);

  SpectralOperators ops;
  ops.sigma_inv = Eigen::PartialPivLU<Eigen::MatrixXd>(m.sigma).solve(
      Eigen::MatrixXd::Identity(d, d));
  ops.c1 = m.mu;
  ops.c_inf = ops.sigma_inv.transpose() * m.mu;
  ops.k = m.k;
  return ops;
}

SequenceScore sequence_score(const SpectralOperators& ops, const Eigen::MatrixXd& y) {
  if (y.cols() != ops.dim() && y.rows() != 0)
    throw std::invalid_argument("sequence_score: dimension mismatch");

  Eigen::VectorXd running = ops.c1;
  double log_scale = 0.0;
  for (long t = 0; t < y.rows(); ++t) {
    running = ops.transfer(y.row(t).transpose()) * running;
    const double scale = running.cwiseAbs().maxCoeff();
    if (scale == 0.0)
      throw DegenerateScoreError("sequence_score: running vector underflowed to zero");
    running /= scale;
    log_scale += std::log(scale);
  }
  const double final_val = ops.c_inf.dot(running);
  if (final_val == 0.0)
    throw DegenerateScoreError("sequence_score: score is exactly zero");

  SequenceScore s;
  s.log_magnitude = log_scale + std::log(std::abs(final_val));
  s.sign = final_val > 0.0 ? 1 : -1;
  return s;
}

std::optional<Eigen::VectorXd> try_propagate(const SpectralOperators& ops,
                                             const Eigen::VectorXd& belief,
                                             const Eigen::VectorXd& y_prev) {
  const Eigen::VectorXd numerator = ops.transfer(y_prev) * belief;
  const double denom = ops.c_inf.dot(numerator);
  const double floor = 1e-12 * numerator.lpNorm<1>();
  if (!(std::abs(denom) > floor) || !std::isfinite(denom)) return std::nullopt;
  return Eigen::VectorXd(numerator / denom);
}

BeliefVector predict_next(const SpectralOperators& ops, const BeliefVector& belief,
                          const Eigen::VectorXd& y_prev) {
  auto next = try_propagate(ops, belief.b, y_prev);
  if (!next) throw DegenerateBeliefError("predict_next: degenerate belief normalizer");
  return BeliefVector{std::move(*next)};
}

Eigen::VectorXd reconstruct(const ProjectionBasis& basis, const Eigen::VectorXd& y) {
  if (y.size() != basis.dim()) throw std::invalid_argument("reconstruct: dimension mismatch");
  return basis.u * y;
}

ShmmModel fit_shmm(const Eigen::MatrixXd& x, int d, const ShmmConfig& cfg) {
  ShmmModel model;
  model.basis = estimate_basis(x, d, cfg.source, cfg.method, cfg.rsvd);
  const Eigen::MatrixXd y = x * model.basis.u;
  model.moments = estimate_batch(y);
  model.ops = build_operators(model.moments);
  return model;
}

PredictionRun predict_shmm(const ShmmModel& model, const Eigen::MatrixXd& x_test) {
  const long t_len = x_test.rows();
  PredictionRun run;
  run.predictions.resize(t_len + 1, model.basis.obs_dim());
  run.fallback.assign(t_len + 1, false);

  Eigen::VectorXd belief = model.ops.c1;
  run.predictions.row(0) = reconstruct(model.basis, belief).transpose();
  for (long t = 0; t < t_len; ++t) {
    const Eigen::VectorXd y_obs = model.basis.u.transpose() * x_test.row(t).transpose();
    auto next = try_propagate(model.ops, belief, y_obs);
    if (next) {
      belief = std::move(*next);
    } else {
      run.fallback[t + 1] = true;  // hold previous belief
    }
    run.predictions.row(t + 1) = reconstruct(model.basis, belief).transpose();
  }
  return run;
}

}  // namespace shmm
