#pragma once

#include <string>

#include "shmm/hmm_model.hpp"

namespace shmm {

/// Writes a trajectory as CSV with header `t,h,x1..xp`; floats carry 17
/// significant digits so the round trip is exact.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

Trajectory read_trajectory_csv(const std::string& path);

/// Reads only the observation block of a trajectory CSV (accepts files with
/// or without the `h` column; header decides).
Eigen::MatrixXd read_observation_csv(const std::string& path);

/// Writes prediction rows `t,flag,x_hat_1..p` starting at time index t0.
void write_prediction_csv(const std::string& path, const Eigen::MatrixXd& predictions,
                          const std::vector<bool>& fallback, long t0);

}  // namespace shmm
