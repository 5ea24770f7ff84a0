// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "roadfriction/error.hpp"
#include "roadfriction/io.hpp"

namespace roadfriction {

namespace {

constexpr std::array<std::string_view, kStatusCount> kStatusTokens = {
    "dry", "moist", "wet", "slush", "ice", "snow_hoarfrost"};

constexpr int kCoordDecimals = 6;
constexpr int kFrictionDecimals = 4;
constexpr int kWaterDecimals = 3;
constexpr int kTempDecimals = 2;

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  // Avoid "-0.0000" so canonical text does not depend on the sign of zero.
  std::string_view text(buf);
  if (text.front() == '-' && text.find_first_not_of("-0.") == std::string_view::npos) {
    return std::string(text.substr(1));
  }
  return std::string(text);
}

double round_to(double value, int decimals) {
  const std::string text = format_fixed(value, decimals);
  double out = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), out);
  return out;
}

double parse_number(std::string_view field, std::size_t line, std::string_view name) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw ParseError(line, "malformed " + std::string(name) + " '" + std::string(field) + "'");
  }
  return value;
}

int parse_int(std::string_view text, bool& ok) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  ok = ok && ec == std::errc() && ptr == text.data() + text.size();
  return value;
}

std::vector<std::string_view> split_fields(std::string_view row) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = row.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(row.substr(start));
      break;
    }
    fields.push_back(row.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace

std::string_view to_string(Status status) noexcept {
  return kStatusTokens[static_cast<std::size_t>(status)];
}

Status parse_status(std::string_view token) {
  for (std::size_t i = 0; i < kStatusCount; ++i) {
    if (kStatusTokens[i] == token) return static_cast<Status>(i);
  }
  throw Error(ErrorKind::kEnum, "unknown status token '" + std::string(token) + "'");
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const sys_days day = floor<days>(ts);
  const year_month_day ymd{day};
  const hh_mm_ss<seconds> hms{ts - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  // YYYY-MM-DDTHH:MM:SSZ
  bool ok = text.size() == 20 && text[4] == '-' && text[7] == '-' && text[10] == 'T' &&
            text[13] == ':' && text[16] == ':' && text[19] == 'Z';
  if (!ok) throw Error(ErrorKind::kParse, "malformed timestamp '" + std::string(text) + "'");
  const int y = parse_int(text.substr(0, 4), ok);
  const int mo = parse_int(text.substr(5, 2), ok);
  const int d = parse_int(text.substr(8, 2), ok);
  const int h = parse_int(text.substr(11, 2), ok);
  const int mi = parse_int(text.substr(14, 2), ok);
  const int s = parse_int(text.substr(17, 2), ok);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ok || !ymd.ok() || h > 23 || mi > 59 || s > 59 || h < 0 || mi < 0 || s < 0) {
    throw Error(ErrorKind::kParse, "malformed timestamp '" + std::string(text) + "'");
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

SensorRecord canonicalize(const SensorRecord& record) {
  SensorRecord out = record;
  out.lat_deg = round_to(record.lat_deg, kCoordDecimals);
  out.lon_deg = round_to(record.lon_deg, kCoordDecimals);
  out.friction = round_to(record.friction, kFrictionDecimals);
  out.water_mm = round_to(record.water_mm, kWaterDecimals);
  out.surface_temp_c = round_to(record.surface_temp_c, kTempDecimals);
  out.air_temp_c = round_to(record.air_temp_c, kTempDecimals);
  return out;
}

void validate(const SensorRecord& record) {
  if (!(record.friction >= 0.0 && record.friction <= 1.0)) {
    throw Error(ErrorKind::kRange, "friction " + std::to_string(record.friction) +
                                       " outside [0, 1]");
  }
  if (!(std::abs(record.lat_deg) <= 90.0) || !(std::abs(record.lon_deg) <= 180.0)) {
    throw Error(ErrorKind::kRange, "coordinate out of range");
  }
  if (!(record.water_mm >= 0.0) || !std::isfinite(record.water_mm)) {
    throw Error(ErrorKind::kRange, "water thickness must be finite and non-negative");
  }
  if (!std::isfinite(record.surface_temp_c) || !std::isfinite(record.air_temp_c)) {
    throw Error(ErrorKind::kRange, "temperatures must be finite");
  }
}

std::vector<SensorRecord> parse_trace_text(std::string_view text) {
  std::vector<SensorRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view row = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (!saw_header) {
      if (row != kTraceHeader) {
        throw ParseError(ErrorKind::kSchema, line_no, "header does not match trace schema");
      }
      saw_header = true;
      continue;
    }
    if (row.empty()) continue;
    const auto fields = split_fields(row);
    if (fields.size() != 8) {
      throw ParseError(line_no, "expected 8 fields, got " + std::to_string(fields.size()));
    }
    SensorRecord r;
    try {
      r.timestamp = parse_timestamp(fields[0]);
      r.status = parse_status(fields[7]);
    } catch (const Error& e) {
      throw ParseError(e.kind(), line_no, e.what());
    }
    r.lat_deg = parse_number(fields[1], line_no, "lat");
    r.lon_deg = parse_number(fields[2], line_no, "lon");
    r.friction = parse_number(fields[3], line_no, "friction");
    r.water_mm = parse_number(fields[4], line_no, "water_mm");
    r.surface_temp_c = parse_number(fields[5], line_no, "surf_temp_c");
    r.air_temp_c = parse_number(fields[6], line_no, "air_temp_c");
    try {
      validate(r);
    } catch (const Error& e) {
      throw ParseError(e.kind(), line_no, e.what());
    }
    records.push_back(r);
  }
  if (!saw_header) throw ParseError(ErrorKind::kSchema, 1, "missing header row");

  std::stable_sort(records.begin(), records.end(),
                   [](const SensorRecord& a, const SensorRecord& b) { return a.timestamp < b.timestamp; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].timestamp == records[i - 1].timestamp) {
      throw Error(ErrorKind::kParse,
                  "duplicate timestamp " + format_timestamp(records[i].timestamp));
    }
  }
  return records;
}

std::string format_trace(std::span<const SensorRecord> records) {
  std::string out;
  out.reserve(80 * (records.size() + 1));
  out += kTraceHeader;
  out += '\n';
  for (const SensorRecord& r : records) {
    out += format_timestamp(r.timestamp);
    out += ',';
    out += format_fixed(r.lat_deg, kCoordDecimals);
    out += ',';
    out += format_fixed(r.lon_deg, kCoordDecimals);
    out += ',';
    out += format_fixed(r.friction, kFrictionDecimals);
    out += ',';
    out += format_fixed(r.water_mm, kWaterDecimals);
    out += ',';
    out += format_fixed(r.surface_temp_c, kTempDecimals);
    out += ',';
    out += format_fixed(r.air_temp_c, kTempDecimals);
    out += ',';
    out += to_string(r.status);
    out += '\n';
  }
  return out;
}

std::vector<SensorRecord> parse_trace(const std::filesystem::path& path) {
  return parse_trace_text(read_file(path));
}

void write_trace(std::span<const SensorRecord> records, const std::filesystem::path& path) {
  for (const SensorRecord& r : records) validate(r);
  atomic_write(path, format_trace(records));
}

}  // namespace roadfriction
