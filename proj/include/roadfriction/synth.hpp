// SPDX-License-Identifier: Apache-2.0
//
// Synthetic route traces with documented dynamics. The route runs from
// `start` to `end`, sampled at n_points locations split into contiguous
// status blocks. Each block cycles through a regime (dry, snow, wet, ice,
// moist, slush) that fixes its surface microclimate and standing water.
//
// Per block b and day d:
//   air(b, d)     = mean - amplitude cos(2 pi (d - coldest_day) / period) + ar(b, d)
//   ar(b, d)      = rho ar(b, d-1) + ar_sd N(0, 1)
//   film(b, d)    = film_decay film(b, d-1) + pulse, pulse ~ Exp(pulse_mean) w.p. pulse_prob
//   water(b, d)   = regime base + film(b, d)
//   treat(b, d)   = treatment_rho treat(b, d-1) + treatment_sd N(0, 1)
// Per point p of block b:
//   air_temp      = air(b, d) + point_temp_sd N
//   surface_temp  = air_temp + regime offset + surface_noise_sd N
//   water_mm      = max(0, water(b, d) + water_noise_sd N)
//   friction      = clamp(base + offset(p) - ice_weight logistic(-air(b, d) / ice_scale_c)
//                         - water_weight water(b, d-1) + treat(b, d) + block_noise(b, d)
//                         + noise_sd N,
//                         0.05, 0.95)
// The treatment term models road maintenance reacting to yesterday's grip:
// a negative coefficient makes a slippery day likely to be followed by an
// over-treated one. Statuses follow from the record's surface temperature
// and water (see classify_status).
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "roadfriction/ingest.hpp"

namespace roadfriction {

struct SynthConfig {
  std::size_t n_points = 200;
  std::size_t n_days = 446;
  std::size_t n_status_blocks = 5;
  double start_lat_deg = 67.416;
  double start_lon_deg = 26.589;
  double end_lat_deg = 65.736;
  double end_lon_deg = 24.564;
  /// Extra route spacing inserted at each block boundary, in units of the
  /// regular point spacing.
  double block_gap = 4.0;
  /// First observed day, as days since 1970-01-01 (2017-10-01).
  std::int64_t start_day = 17440;
  /// Seconds between consecutive route points within one daily pass.
  std::int64_t sampling_interval_s = 30;
  std::int64_t pass_start_s = 6 * 3600;

  double air_mean_c = -1.0;
  double seasonal_amplitude_c = 14.0;
  double seasonal_period_days = 365.0;
  double coldest_day = 106.0;
  double ar_rho = 0.85;
  double ar_sd = 3.0;
  double point_temp_sd = 0.3;
  double surface_noise_sd = 0.5;
  double microclimate_offset_c = 20.0;

  double pulse_prob = 0.25;
  double pulse_mean_mm = 0.4;
  double film_decay = 0.2;
  double water_noise_sd = 0.02;

  double friction_base = 0.8;
  double ice_weight = 0.25;
  double ice_scale_c = 3.0;
  double water_weight = 0.3;
  double treatment_rho = -0.7;
  double treatment_sd = 0.05;
  double block_noise_sd = 0.02;
  double point_offset_sd = 0.02;
  double noise_sd = 0.01;

  double missing_day_prob = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

/// Standing water (mm) and surface offset sign for each regime.
struct Regime {
  Status status = Status::kDry;
  double water_base_mm = 0.0;
  bool frozen = false;
};
/// Regime of block `block`: dry, snow_hoarfrost, wet, ice, moist, slush, repeating.
Regime block_regime(std::size_t block) noexcept;

/// frozen = surface below 0 C. Water >= 0.5 mm gives slush / wet, >= 0.1 mm
/// ice / moist, otherwise snow_hoarfrost / dry.
Status classify_status(double surface_temp_c, double water_mm) noexcept;

struct BlockTruth {
  std::size_t block = 0;
  Status status = Status::kDry;
  /// Route point indices [first_point, last_point].
  std::size_t first_point = 0;
  std::size_t last_point = 0;
  /// Coordinates of the first point of the block.
  double lat_deg = 0.0;
  double lon_deg = 0.0;

  friend bool operator==(const BlockTruth&, const BlockTruth&) = default;
};

struct GroundTruthManifest {
  SynthConfig config;
  std::vector<BlockTruth> blocks;
  std::size_t n_records = 0;
  std::vector<std::int64_t> missing_days;
  /// Features with a direct causal path into next-day friction.
  std::vector<std::string> friction_drivers;

  friend bool operator==(const GroundTruthManifest&, const GroundTruthManifest&) = default;
};

std::vector<SensorRecord> generate_trace(const SynthConfig& config);
GroundTruthManifest ground_truth_manifest(const SynthConfig& config);

std::string manifest_to_json(const GroundTruthManifest& manifest);
GroundTruthManifest manifest_from_json(std::string_view text);

}  // namespace roadfriction
