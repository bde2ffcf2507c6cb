#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace shmm {

/// Minute-close series with derived log returns. Timestamps are epoch
/// minutes (UTC), strictly increasing; gap_after[i] marks a jump of more
/// than one minute between bars i and i+1.
struct MinuteBarSeries {
  std::string name;
  std::vector<std::int64_t> timestamps;
  std::vector<double> closes;
  std::vector<double> log_returns;  // size = closes.size() - 1
  std::vector<bool> gap_after;      // size = closes.size() - 1

  std::size_t size() const { return closes.size(); }
};

/// Parses a `timestamp,close` CSV. Timestamps are epoch minutes or ISO-8601
/// (UTC), auto-detected from the first data row. Throws IngestionError
/// listing the offending rows on duplicate/backward timestamps or
/// non-positive closes.
MinuteBarSeries ingest_minute_bars(const std::string& path);

/// Writes the same format back (epoch-minute timestamps).
void write_minute_bars(const std::string& path, const MinuteBarSeries& series);

/// Epoch minutes for an ISO-8601 UTC timestamp like "2022-07-01T00:01:00Z",
/// "2022-07-01 00:01", or a date alone.
std::int64_t parse_iso_minutes(const std::string& text);

constexpr std::int64_t kMinutesPerDay = 1440;

/// UTC day index of an epoch-minute timestamp.
inline std::int64_t day_of(std::int64_t minutes) {
  return minutes >= 0 ? minutes / kMinutesPerDay
                      : -((-minutes + kMinutesPerDay - 1) / kMinutesPerDay);
}

}  // namespace shmm
