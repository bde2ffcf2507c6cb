#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace shmm {

struct BenchConfig {
  int obs_dim = 100;
  int states = 3;
  double sigma = 0.05;
  double p_stay = 0.6;
  long length = 2000;
  long warmup = 1000;
  long test_steps = 1000;
  int repeats = 1;
  std::uint64_t seed = 7;
  bool include_em = false;
  int em_max_iters = 20;
};

struct BenchRow {
  std::string method;  // shmm | pshmm-simplex | pshmm-polyhedron | em
  std::string mode;    // offline | online
  double seconds = 0.0;
};

struct BenchTable {
  std::vector<BenchRow> rows;
  BenchConfig config;

  double seconds(const std::string& method, const std::string& mode) const;
};

/// Timing comparison on simulated data. Offline modes refit from scratch on
/// all data seen so far before every test-step prediction (including the
/// full recursive prediction pass the refit invalidates); online modes pay
/// only the streaming update. Reported seconds cover the test loop,
/// averaged over cfg.repeats.
BenchTable bench_timing(const BenchConfig& cfg = {});

std::string format_bench_table(const BenchTable& table);

}  // namespace shmm
