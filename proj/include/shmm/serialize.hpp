#pragma once

#include <string>

#include <json.hpp>

#include "shmm/gmm.hpp"
#include "shmm/moments.hpp"
#include "shmm/pshmm.hpp"
#include "shmm/spectral.hpp"
#include "shmm/theory.hpp"

namespace shmm {

using Json = nlohmann::json;

/// Moments as {d, n_points, effective_n, mu, sigma_rowmajor, k_flat}, using
/// the shared flatten ordering.
Json moments_to_json(const SpectralMoments& m, double effective_n);
SpectralMoments moments_from_json(const Json& j, double* effective_n = nullptr);

Json basis_to_json(const ProjectionBasis& basis);
ProjectionBasis basis_from_json(const Json& j);

Json mixture_to_json(const GaussianMixture& g);
GaussianMixture mixture_from_json(const Json& j);

Json shmm_to_json(const ShmmModel& model);
ShmmModel shmm_from_json(const Json& j);

Json pshmm_to_json(const PshmmModel& model);
PshmmModel pshmm_from_json(const Json& j);

Json theory_report_to_json(const TheoryCheckReport& report);

void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

}  // namespace shmm
