#include "shmm/trajectory_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "shmm/errors.hpp"

namespace shmm {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path);
  const int p = static_cast<int>(traj.observations.cols());
  out << "t,h";
  for (int j = 1; j <= p; ++j) out << ",x" << j;
  out << "\n";
  char buf[64];
  for (long t = 0; t < traj.length(); ++t) {
    out << (t + 1) << ',' << traj.states[t];
    for (int j = 0; j < p; ++j) {
      std::snprintf(buf, sizeof(buf), ",%.17g", traj.observations(t, j));
      out << buf;
    }
    out << "\n";
  }
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw IngestionError(path + ": empty file");
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "t" || header[1] != "h")
    throw IngestionError(path + ": expected header `t,h,x1..xp`");
  const int p = static_cast<int>(header.size()) - 2;

  std::vector<int> states;
  std::vector<double> values;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (static_cast<int>(fields.size()) != p + 2)
      throw IngestionError(path + ": row " + std::to_string(row) + " has wrong field count");
    states.push_back(std::stoi(fields[1]));
    for (int j = 0; j < p; ++j) values.push_back(std::stod(fields[2 + j]));
  }

  Trajectory traj;
  traj.states = std::move(states);
  traj.observations.resize(static_cast<long>(traj.states.size()), p);
  for (long t = 0; t < traj.length(); ++t)
    for (int j = 0; j < p; ++j) traj.observations(t, j) = values[t * p + j];
  return traj;
}

Eigen::MatrixXd read_observation_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw IngestionError(path + ": empty file");
  const auto header = split_csv(line);
  int skip = 0;
  for (const auto& h : header) {
    if (h == "t" || h == "h" || h == "flag") ++skip;
  }
  const int p = static_cast<int>(header.size()) - skip;
  if (p < 1) throw IngestionError(path + ": no observation columns");

  std::vector<double> values;
  long rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (static_cast<int>(fields.size()) != p + skip)
      throw IngestionError(path + ": inconsistent field count");
    for (int j = 0; j < p; ++j) values.push_back(std::stod(fields[skip + j]));
    ++rows;
  }
  Eigen::MatrixXd x(rows, p);
  for (long t = 0; t < rows; ++t)
    for (int j = 0; j < p; ++j) x(t, j) = values[t * p + j];
  return x;
}

void write_prediction_csv(const std::string& path, const Eigen::MatrixXd& predictions,
                          const std::vector<bool>& fallback, long t0) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path);
  const int p = static_cast<int>(predictions.cols());
  out << "t,flag";
  for (int j = 1; j <= p; ++j) out << ",x" << j;
  out << "\n";
  char buf[64];
  for (long r = 0; r < predictions.rows(); ++r) {
    out << (t0 + r) << ',' << (r < static_cast<long>(fallback.size()) && fallback[r] ? 1 : 0);
    for (int j = 0; j < p; ++j) {
      std::snprintf(buf, sizeof(buf), ",%.17g", predictions(r, j));
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace shmm
