#include "shmm/market_data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "shmm/errors.hpp"

namespace shmm {

namespace {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool parse_int(const std::string& s, std::int64_t& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

}  // namespace

std::int64_t parse_iso_minutes(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  const int n = std::sscanf(text.c_str(), "%d-%d-%d%*1[T ]%d:%d:%d", &y, &mo, &d, &h, &mi, &s);
  if (n < 3) throw IngestionError("unparseable timestamp: " + text);
  return days_from_civil(y, mo, d) * kMinutesPerDay + h * 60 + mi;
}

MinuteBarSeries ingest_minute_bars(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path);

  MinuteBarSeries series;
  series.name = std::filesystem::path(path).stem().string();

  std::string line;
  if (!std::getline(in, line)) throw IngestionError(path + ": empty file");
  if (line.rfind("timestamp", 0) != 0)
    throw IngestionError(path + ": expected header `timestamp,close`");

  std::vector<std::string> bad_rows;
  bool iso_mode = false;
  bool mode_known = false;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      bad_rows.push_back("row " + std::to_string(row) + ": missing comma");
      continue;
    }
    const std::string ts_text = line.substr(0, comma);
    const std::string close_text = line.substr(comma + 1);

    if (!mode_known) {
      std::int64_t probe = 0;
      iso_mode = !parse_int(ts_text, probe);
      mode_known = true;
    }

    std::int64_t ts = 0;
    try {
      if (iso_mode) {
        ts = parse_iso_minutes(ts_text);
      } else if (!parse_int(ts_text, ts)) {
        throw IngestionError("bad integer");
      }
    } catch (const IngestionError&) {
      bad_rows.push_back("row " + std::to_string(row) + ": bad timestamp `" + ts_text + "`");
      continue;
    }

    double close = 0.0;
    try {
      close = std::stod(close_text);
    } catch (...) {
      bad_rows.push_back("row " + std::to_string(row) + ": bad close `" + close_text + "`");
      continue;
    }

    if (!series.timestamps.empty() && ts <= series.timestamps.back()) {
      bad_rows.push_back("row " + std::to_string(row) + ": non-increasing timestamp");
      continue;
    }
    if (!(close > 0.0)) {
      bad_rows.push_back("row " + std::to_string(row) + ": non-positive close");
      continue;
    }
    series.timestamps.push_back(ts);
    series.closes.push_back(close);
  }

  if (!bad_rows.empty()) {
    std::ostringstream msg;
    msg << path << ": " << bad_rows.size() << " invalid row(s):";
    for (const auto& r : bad_rows) msg << "\n  " << r;
    throw IngestionError(msg.str());
  }
  if (series.closes.size() < 2) throw IngestionError(path + ": need at least 2 bars");

  series.log_returns.resize(series.closes.size() - 1);
  series.gap_after.resize(series.closes.size() - 1);
  for (std::size_t i = 0; i + 1 < series.closes.size(); ++i) {
    series.log_returns[i] = std::log(series.closes[i + 1] / series.closes[i]);
    series.gap_after[i] = series.timestamps[i + 1] - series.timestamps[i] > 1;
  }
  return series;
}

void write_minute_bars(const std::string& path, const MinuteBarSeries& series) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path);
  out << "timestamp,close\n";
  char buf[64];
  for (std::size_t i = 0; i < series.closes.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g\n",
                  static_cast<long long>(series.timestamps[i]), series.closes[i]);
    out << buf;
  }
}

}  // namespace shmm
