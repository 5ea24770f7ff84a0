// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace roadfriction {

/// Calculated road surface status reported by the optical sensor. The numeric
/// value is the status code; lower codes win ties wherever a mode is taken.
enum class Status : std::uint8_t { kDry = 0, kMoist, kWet, kSlush, kIce, kSnowHoarfrost };

inline constexpr std::size_t kStatusCount = 6;
inline constexpr std::array<Status, kStatusCount> kAllStatuses = {
    Status::kDry, Status::kMoist, Status::kWet, Status::kSlush, Status::kIce, Status::kSnowHoarfrost};

std::string_view to_string(Status status) noexcept;
/// Throws Error(kEnum) for unknown tokens.
Status parse_status(std::string_view token);

using Timestamp = std::chrono::sys_seconds;

std::string format_timestamp(Timestamp ts);
/// Accepts `YYYY-MM-DDTHH:MM:SSZ` only.
Timestamp parse_timestamp(std::string_view text);

struct SensorRecord {
  Timestamp timestamp{};
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  double friction = 0.0;
  double water_mm = 0.0;
  double surface_temp_c = 0.0;
  double air_temp_c = 0.0;
  Status status = Status::kDry;

  friend bool operator==(const SensorRecord&, const SensorRecord&) = default;
};

inline constexpr std::string_view kTraceHeader =
    "timestamp,lat,lon,friction,water_mm,surf_temp_c,air_temp_c,status";

/// Rounds every field to the precision the CSV stores, so that
/// parse_trace(write_trace(canonicalize(r))) == canonicalize(r).
SensorRecord canonicalize(const SensorRecord& record);

/// Throws Error(kRange) when a field violates the record invariants.
void validate(const SensorRecord& record);

std::vector<SensorRecord> parse_trace_text(std::string_view text);
std::string format_trace(std::span<const SensorRecord> records);

/// Reads a trace CSV. Rows are validated and returned sorted by timestamp;
/// duplicate timestamps are rejected.
std::vector<SensorRecord> parse_trace(const std::filesystem::path& path);
void write_trace(std::span<const SensorRecord> records, const std::filesystem::path& path);

}  // namespace roadfriction
