#include "shmm/serialize.hpp"

#include <fstream>

#include "shmm/errors.hpp"

namespace shmm {

namespace {

Json vector_to_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (long i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<long>(i)) = j[i].get<double>();
  return v;
}

Json matrix_rowmajor_to_json(const Eigen::MatrixXd& m) {
  Json arr = Json::array();
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
  return arr;
}

Eigen::MatrixXd matrix_rowmajor_from_json(const Json& j, long rows, long cols) {
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long c = 0; c < cols; ++c) m(i, c) = j[static_cast<std::size_t>(i * cols + c)].get<double>();
  return m;
}

}  // namespace

Json moments_to_json(const SpectralMoments& m, double effective_n) {
  Json j;
  j["d"] = m.dim();
  j["n_points"] = m.n_points;
  j["effective_n"] = effective_n;
  j["mu"] = vector_to_json(m.mu);
  j["sigma_rowmajor"] = matrix_rowmajor_to_json(m.sigma);
  j["k_flat"] = vector_to_json(flatten(m.k));
  return j;
}

SpectralMoments moments_from_json(const Json& j, double* effective_n) {
  const int d = j.at("d").get<int>();
  SpectralMoments m;
  m.mu = vector_from_json(j.at("mu"));
  m.sigma = matrix_rowmajor_from_json(j.at("sigma_rowmajor"), d, d);
  m.k = unflatten_tensor(vector_from_json(j.at("k_flat")), d);
  m.n_points = j.at("n_points").get<long>();
  if (effective_n) *effective_n = j.at("effective_n").get<double>();
  return m;
}

Json basis_to_json(const ProjectionBasis& basis) {
  Json j;
  j["p"] = basis.obs_dim();
  j["d"] = basis.dim();
  j["u_rowmajor"] = matrix_rowmajor_to_json(basis.u);
  j["source"] = basis.source == BasisSource::kBigram ? "bigram" : "unigram";
  j["method"] = basis.method == SvdMethod::kDense ? "dense" : "randomized";
  return j;
}

ProjectionBasis basis_from_json(const Json& j) {
  ProjectionBasis b;
  b.u = matrix_rowmajor_from_json(j.at("u_rowmajor"), j.at("p").get<long>(),
                                  j.at("d").get<long>());
  b.source = j.at("source").get<std::string>() == "unigram" ? BasisSource::kUnigram
                                                            : BasisSource::kBigram;
  b.method = j.at("method").get<std::string>() == "randomized" ? SvdMethod::kRandomized
                                                               : SvdMethod::kDense;
  return b;
}

Json mixture_to_json(const GaussianMixture& g) {
  Json j;
  j["k"] = g.k;
  j["d"] = g.dim();
  j["means_rowmajor"] = matrix_rowmajor_to_json(g.means);
  Json covs = Json::array();
  for (const auto& c : g.covariances) covs.push_back(matrix_rowmajor_to_json(c));
  j["covariances_rowmajor"] = covs;
  j["weights"] = vector_to_json(g.weights);
  j["seed"] = g.fit_meta.seed;
  return j;
}

GaussianMixture mixture_from_json(const Json& j) {
  GaussianMixture g;
  g.k = j.at("k").get<int>();
  const long d = j.at("d").get<long>();
  g.means = matrix_rowmajor_from_json(j.at("means_rowmajor"), d, g.k);
  for (const auto& c : j.at("covariances_rowmajor"))
    g.covariances.push_back(matrix_rowmajor_from_json(c, d, d));
  g.weights = vector_from_json(j.at("weights"));
  g.fit_meta.seed = j.at("seed").get<std::uint64_t>();
  return g;
}

Json shmm_to_json(const ShmmModel& model) {
  Json j = moments_to_json(model.moments, static_cast<double>(model.moments.n_points));
  j["basis"] = basis_to_json(model.basis);
  j["model"] = "shmm";
  return j;
}

ShmmModel shmm_from_json(const Json& j) {
  ShmmModel m;
  m.moments = moments_from_json(j);
  m.basis = basis_from_json(j.at("basis"));
  m.ops = build_operators(m.moments);
  return m;
}

Json pshmm_to_json(const PshmmModel& model) {
  Json j = moments_to_json(model.moments, static_cast<double>(model.moments.n_points));
  j["basis"] = basis_to_json(model.basis);
  j["mixture"] = mixture_to_json(model.mixture);
  j["variant"] = model.variant == ProjectionVariant::kSimplex ? "simplex" : "polyhedron";
  j["weights"] = model.weight_mode == WeightMode::kMoment ? "moment" : "probability";
  j["model"] = "pshmm";
  return j;
}

PshmmModel pshmm_from_json(const Json& j) {
  PshmmModel m;
  m.moments = moments_from_json(j);
  m.basis = basis_from_json(j.at("basis"));
  m.mixture = mixture_from_json(j.at("mixture"));
  m.variant = j.at("variant").get<std::string>() == "polyhedron" ? ProjectionVariant::kPolyhedron
                                                                 : ProjectionVariant::kSimplex;
  m.weight_mode = j.at("weights").get<std::string>() == "probability" ? WeightMode::kProbability
                                                                      : WeightMode::kMoment;
  m.ops = build_operators(m.moments);
  return m;
}

Json theory_report_to_json(const TheoryCheckReport& report) {
  Json j;
  j["seed"] = report.seed;
  j["requested_replicates"] = report.requested_replicates;
  j["sigma2_theory"] = report.sigma2_theory;
  j["sigma2_theory_se"] = report.sigma2_theory_se;
  j["population_score"] = report.population_score;
  j["test_sequence_rowmajor"] = matrix_rowmajor_to_json(report.test_sequence);
  j["test_sequence_length"] = report.test_sequence.rows();
  j["n_values"] = report.n_values;
  Json per = Json::array();
  for (const auto& p : report.per_n) {
    Json e;
    e["n"] = p.n;
    e["replicates"] = p.replicates;
    e["excluded"] = p.excluded;
    e["mean"] = p.mean;
    e["variance"] = p.variance;
    e["mean_std_error"] = p.mean_std_error;
    e["skewness"] = p.skewness;
    e["excess_kurtosis"] = p.excess_kurtosis;
    e["ks_statistic"] = p.ks_statistic;
    e["ks_p_value"] = p.ks_p_value;
    e["variance_ratio_vs_theory"] =
        report.sigma2_theory > 0.0 ? p.variance / report.sigma2_theory : 0.0;
    per.push_back(e);
  }
  j["per_n"] = per;
  return j;
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path);
  out << j.dump(2) << "\n";
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path);
  Json j;
  in >> j;
  return j;
}

}  // namespace shmm
