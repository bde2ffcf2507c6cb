#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "shmm/backtest.hpp"
#include "shmm/errors.hpp"
#include "shmm/market_data.hpp"
#include "shmm/trajectory_io.hpp"

using namespace shmm;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("shmm_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("ingest_minute_bars: epoch minutes and log returns") {
  TempDir dir;
  const auto csv = dir.path / "a.csv";
  write_file(csv, "timestamp,close\n100,100\n101,101\n");
  const MinuteBarSeries s = ingest_minute_bars(csv.string());
  REQUIRE(s.size() == 2);
  CHECK(s.log_returns[0] == doctest::Approx(std::log(1.01)));
  CHECK_FALSE(s.gap_after[0]);
}

TEST_CASE("ingest_minute_bars: ISO timestamps and gap flags") {
  TempDir dir;
  const auto csv = dir.path / "iso.csv";
  write_file(csv,
             "timestamp,close\n"
             "2022-07-01T00:00:00Z,50\n"
             "2022-07-01T00:01:00Z,51\n"
             "2022-07-01T00:05:00Z,52\n");
  const MinuteBarSeries s = ingest_minute_bars(csv.string());
  REQUIRE(s.size() == 3);
  CHECK(s.timestamps[1] - s.timestamps[0] == 1);
  CHECK_FALSE(s.gap_after[0]);
  CHECK(s.gap_after[1]);
  CHECK(day_of(s.timestamps[0]) == day_of(s.timestamps[2]));
}

TEST_CASE("ingest_minute_bars rejects duplicates and bad closes with row numbers") {
  TempDir dir;
  const auto csv = dir.path / "bad.csv";
  write_file(csv, "timestamp,close\n100,100\n100,101\n102,-5\n");
  try {
    ingest_minute_bars(csv.string());
    FAIL("expected IngestionError");
  } catch (const IngestionError& e) {
    const std::string what = e.what();
    CHECK(what.find("row 3") != std::string::npos);
    CHECK(what.find("row 4") != std::string::npos);
  }
}

TEST_CASE("minute bars round trip through write/ingest") {
  TempDir dir;
  MinuteBarSeries s;
  s.name = "x";
  s.timestamps = {1000, 1001, 1002};
  s.closes = {100.0, 100.5, 99.75};
  const auto csv = dir.path / "rt.csv";
  write_minute_bars(csv.string(), s);
  const MinuteBarSeries back = ingest_minute_bars(csv.string());
  CHECK(back.timestamps == s.timestamps);
  CHECK(back.closes == s.closes);
}

TEST_CASE("market fixture has the expected shape and determinism") {
  TempDir dir;
  FixtureConfig cfg;
  cfg.days = 3;
  cfg.minutes_per_day = 50;
  cfg.currencies = 2;
  const auto series = write_market_fixture(dir.path.string(), cfg);
  REQUIRE(series.size() == 2);
  for (const auto& s : series) CHECK(s.size() == 150);

  const auto loaded = load_market_dir(dir.path.string());
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].closes == series[0].closes);
  CHECK(loaded[0].timestamps == series[0].timestamps);

  // Regenerating gives identical bytes.
  const auto again = make_market_fixture(cfg);
  CHECK(again[1].closes == series[1].closes);
}

TEST_CASE("trajectory CSV round trip is exact") {
  HmmSpec spec;
  spec.states = 2;
  spec.pi0 = Eigen::VectorXd::Constant(2, 0.5);
  spec.transition = build_transition(2, 0.6);
  spec.means = one_hot_means(2, 3);
  spec.sigma = 0.7;
  const Trajectory traj = sample_trajectory(spec, 40, 13);

  TempDir dir;
  const auto csv = dir.path / "traj.csv";
  write_trajectory_csv(csv.string(), traj);
  const Trajectory back = read_trajectory_csv(csv.string());
  CHECK(back.states == traj.states);
  CHECK(back.observations == traj.observations);

  const Eigen::MatrixXd obs = read_observation_csv(csv.string());
  CHECK(obs == traj.observations);
}
