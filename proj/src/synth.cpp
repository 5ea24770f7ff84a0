// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "roadfriction/error.hpp"
#include "roadfriction/random.hpp"

namespace roadfriction {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SynthConfig, n_points, n_days, n_status_blocks, start_lat_deg,
                                   start_lon_deg, end_lat_deg, end_lon_deg, block_gap, start_day,
                                   sampling_interval_s, pass_start_s, air_mean_c,
                                   seasonal_amplitude_c, seasonal_period_days, coldest_day, ar_rho,
                                   ar_sd, point_temp_sd, surface_noise_sd, microclimate_offset_c,
                                   pulse_prob, pulse_mean_mm, film_decay, water_noise_sd,
                                   friction_base, ice_weight, ice_scale_c, water_weight,
                                   treatment_rho, treatment_sd, block_noise_sd, point_offset_sd, noise_sd, missing_day_prob, seed)

namespace {

constexpr double kFrictionFloor = 0.05;
constexpr double kFrictionCeil = 0.95;

enum Stream : std::uint64_t { kMissingStream = 1, kBlockStream = 2, kPointStream = 3 };

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::kInvalidInput, "synth config: " + what);
}

// Block index of every route point; earlier blocks take the remainder.
std::vector<std::size_t> point_blocks(const SynthConfig& c) {
  std::vector<std::size_t> out;
  out.reserve(c.n_points);
  const std::size_t base = c.n_points / c.n_status_blocks;
  const std::size_t extra = c.n_points % c.n_status_blocks;
  for (std::size_t b = 0; b < c.n_status_blocks; ++b) {
    out.insert(out.end(), base + (b < extra ? 1 : 0), b);
  }
  return out;
}

struct RoutePoint {
  double lat_deg;
  double lon_deg;
};

std::vector<RoutePoint> route_points(const SynthConfig& c, const std::vector<std::size_t>& blocks) {
  std::vector<double> position(c.n_points);
  for (std::size_t i = 0; i < c.n_points; ++i) {
    position[i] = static_cast<double>(i) + c.block_gap * static_cast<double>(blocks[i]);
  }
  const double total = position.back();
  std::vector<RoutePoint> out(c.n_points);
  for (std::size_t i = 0; i < c.n_points; ++i) {
    const double s = total > 0.0 ? position[i] / total : 0.0;
    out[i] = {c.start_lat_deg + s * (c.end_lat_deg - c.start_lat_deg),
              c.start_lon_deg + s * (c.end_lon_deg - c.start_lon_deg)};
    // Match the trace's coordinate precision so manifest coordinates equal
    // the ones a parser sees.
    SensorRecord probe;
    probe.lat_deg = out[i].lat_deg;
    probe.lon_deg = out[i].lon_deg;
    probe = canonicalize(probe);
    out[i] = {probe.lat_deg, probe.lon_deg};
  }
  return out;
}

std::vector<bool> missing_mask(const SynthConfig& c) {
  std::vector<bool> missing(c.n_days, false);
  if (c.missing_day_prob <= 0.0) return missing;
  Rng rng(derive_seed(c.seed, kMissingStream));
  for (std::size_t d = 0; d < c.n_days; ++d) missing[d] = rng.bernoulli(c.missing_day_prob);
  return missing;
}

struct BlockSeries {
  std::vector<double> air;
  std::vector<double> water;
  std::vector<double> treatment;
  std::vector<double> noise;
};

BlockSeries block_series(const SynthConfig& c, std::size_t block) {
  Rng rng(derive_seed(c.seed, kBlockStream, block));
  const Regime regime = block_regime(block);
  BlockSeries s;
  s.air.resize(c.n_days);
  s.water.resize(c.n_days);
  s.treatment.resize(c.n_days);
  s.noise.resize(c.n_days);
  const double ar_stationary_sd = c.ar_sd / std::sqrt(1.0 - c.ar_rho * c.ar_rho);
  double ar = ar_stationary_sd * rng.normal();
  double film = 0.0;
  double treat = c.treatment_sd / std::sqrt(1.0 - c.treatment_rho * c.treatment_rho) * rng.normal();
  for (std::size_t d = 0; d < c.n_days; ++d) {
    if (d > 0) ar = c.ar_rho * ar + c.ar_sd * rng.normal();
    const double phase = 2.0 * std::numbers::pi * (static_cast<double>(d) - c.coldest_day) /
                         c.seasonal_period_days;
    s.air[d] = c.air_mean_c - c.seasonal_amplitude_c * std::cos(phase) + ar;
    film *= c.film_decay;
    if (rng.bernoulli(c.pulse_prob)) film += rng.exponential(c.pulse_mean_mm);
    s.water[d] = regime.water_base_mm + film;
    if (d > 0) treat = c.treatment_rho * treat + c.treatment_sd * rng.normal();
    s.treatment[d] = treat;
    s.noise[d] = c.block_noise_sd * rng.normal();
  }
  return s;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void SynthConfig::validate() const {
  require(n_points >= 1, "n_points must be >= 1");
  require(n_days >= 30, "n_days must be >= 30");
  require(n_status_blocks >= 1 && n_status_blocks <= n_points,
          "n_status_blocks must lie in [1, n_points]");
  require(std::abs(start_lat_deg) <= 90.0 && std::abs(end_lat_deg) <= 90.0 &&
              std::abs(start_lon_deg) <= 180.0 && std::abs(end_lon_deg) <= 180.0,
          "route endpoints out of range");
  require(block_gap >= 0.0, "block_gap must be >= 0");
  require(sampling_interval_s >= 1, "sampling_interval_s must be >= 1");
  require(pass_start_s >= 0 &&
              pass_start_s + static_cast<std::int64_t>(n_points) * sampling_interval_s <= 86400,
          "a daily pass must fit inside one UTC day");
  require(seasonal_period_days > 0.0, "seasonal period must be positive");
  require(ar_rho >= 0.0 && ar_rho < 1.0, "AR coefficient must lie in [0, 1)");
  require(treatment_rho > -1.0 && treatment_rho < 1.0, "treatment_rho must lie in (-1, 1)");
  for (double sd : {ar_sd, treatment_sd, point_temp_sd, surface_noise_sd, water_noise_sd, block_noise_sd,
                    point_offset_sd, noise_sd, seasonal_amplitude_c}) {
    require(sd >= 0.0 && std::isfinite(sd), "noise scales and amplitudes must be >= 0");
  }
  require(microclimate_offset_c >= 0.0, "microclimate offset must be >= 0");
  require(pulse_prob >= 0.0 && pulse_prob <= 1.0, "pulse_prob must lie in [0, 1]");
  require(pulse_mean_mm > 0.0, "pulse_mean_mm must be positive");
  require(film_decay >= 0.0 && film_decay < 1.0, "film_decay must lie in [0, 1)");
  require(ice_scale_c > 0.0, "ice_scale_c must be positive");
  require(missing_day_prob >= 0.0 && missing_day_prob < 1.0, "missing_day_prob must lie in [0, 1)");
}

Regime block_regime(std::size_t block) noexcept {
  static constexpr Regime kCycle[] = {
      {Status::kDry, 0.0, false},  {Status::kSnowHoarfrost, 0.0, true}, {Status::kWet, 0.8, false},
      {Status::kIce, 0.2, true},   {Status::kMoist, 0.2, false},        {Status::kSlush, 0.8, true},
  };
  return kCycle[block % std::size(kCycle)];
}

Status classify_status(double surface_temp_c, double water_mm) noexcept {
  const bool frozen = surface_temp_c < 0.0;
  if (water_mm >= 0.5) return frozen ? Status::kSlush : Status::kWet;
  if (water_mm >= 0.1) return frozen ? Status::kIce : Status::kMoist;
  return frozen ? Status::kSnowHoarfrost : Status::kDry;
}

std::vector<SensorRecord> generate_trace(const SynthConfig& config) {
  config.validate();
  const auto blocks = point_blocks(config);
  const auto route = route_points(config, blocks);
  const auto missing = missing_mask(config);

  std::vector<BlockSeries> series;
  for (std::size_t b = 0; b < config.n_status_blocks; ++b) series.push_back(block_series(config, b));

  std::vector<Rng> point_rng;
  std::vector<double> point_offset;
  for (std::size_t p = 0; p < config.n_points; ++p) {
    point_rng.emplace_back(derive_seed(config.seed, kPointStream, p));
    point_offset.push_back(config.point_offset_sd * point_rng.back().normal());
  }

  std::vector<SensorRecord> records;
  records.reserve(config.n_points * config.n_days);
  for (std::size_t d = 0; d < config.n_days; ++d) {
    const std::chrono::sys_days day{std::chrono::days{config.start_day + static_cast<std::int64_t>(d)}};
    for (std::size_t p = 0; p < config.n_points; ++p) {
      Rng& rng = point_rng[p];
      const std::size_t b = blocks[p];
      const BlockSeries& s = series[b];
      const Regime regime = block_regime(b);
      // Draw every day's noise so a missing day does not shift later days.
      const double temp_noise = rng.normal();
      const double surface_noise = rng.normal();
      const double water_noise = rng.normal();
      const double friction_noise = rng.normal();
      if (missing[d]) continue;

      SensorRecord r;
      r.timestamp = day + std::chrono::seconds(config.pass_start_s +
                                               static_cast<std::int64_t>(p) * config.sampling_interval_s);
      r.lat_deg = route[p].lat_deg;
      r.lon_deg = route[p].lon_deg;
      r.air_temp_c = s.air[d] + config.point_temp_sd * temp_noise;
      const double offset = regime.frozen ? -config.microclimate_offset_c : config.microclimate_offset_c;
      r.surface_temp_c = r.air_temp_c + offset + config.surface_noise_sd * surface_noise;
      r.water_mm = std::max(0.0, s.water[d] + config.water_noise_sd * water_noise);
      const double water_prev = d > 0 ? s.water[d - 1] : regime.water_base_mm;
      const double friction = config.friction_base + point_offset[p] -
                              config.ice_weight * logistic(-s.air[d] / config.ice_scale_c) -
                              config.water_weight * water_prev + s.treatment[d] + s.noise[d] +
                              config.noise_sd * friction_noise;
      r.friction = std::clamp(friction, kFrictionFloor, kFrictionCeil);
      r = canonicalize(r);
      r.status = classify_status(r.surface_temp_c, r.water_mm);
      records.push_back(r);
    }
  }
  return records;
}

GroundTruthManifest ground_truth_manifest(const SynthConfig& config) {
  config.validate();
  const auto blocks = point_blocks(config);
  const auto route = route_points(config, blocks);
  const auto missing = missing_mask(config);
  GroundTruthManifest m;
  m.config = config;
  for (std::size_t p = 0; p < config.n_points; ++p) {
    if (p == 0 || blocks[p] != blocks[p - 1]) {
      m.blocks.push_back({blocks[p], block_regime(blocks[p]).status, p, p, route[p].lat_deg,
                          route[p].lon_deg});
    }
    m.blocks.back().last_point = p;
  }
  std::size_t present = 0;
  for (std::size_t d = 0; d < config.n_days; ++d) {
    if (missing[d]) m.missing_days.push_back(config.start_day + static_cast<std::int64_t>(d));
    else ++present;
  }
  m.n_records = present * config.n_points;
  m.friction_drivers = {"air_temp", "water_thickness"};
  return m;
}

std::string manifest_to_json(const GroundTruthManifest& manifest) {
  nlohmann::json j;
  j["config"] = manifest.config;
  nlohmann::json blocks = nlohmann::json::array();
  for (const BlockTruth& b : manifest.blocks) {
    blocks.push_back({{"block", b.block},
                      {"status", to_string(b.status)},
                      {"first_point", b.first_point},
                      {"last_point", b.last_point},
                      {"lat_deg", b.lat_deg},
                      {"lon_deg", b.lon_deg}});
  }
  j["blocks"] = std::move(blocks);
  j["n_records"] = manifest.n_records;
  j["missing_days"] = manifest.missing_days;
  j["friction_drivers"] = manifest.friction_drivers;
  return j.dump(2) + "\n";
}

GroundTruthManifest manifest_from_json(std::string_view text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    GroundTruthManifest m;
    m.config = j.at("config").get<SynthConfig>();
    for (const auto& b : j.at("blocks")) {
      m.blocks.push_back({b.at("block").get<std::size_t>(),
                          parse_status(b.at("status").get<std::string>()),
                          b.at("first_point").get<std::size_t>(), b.at("last_point").get<std::size_t>(),
                          b.at("lat_deg").get<double>(), b.at("lon_deg").get<double>()});
    }
    m.n_records = j.at("n_records").get<std::size_t>();
    m.missing_days = j.at("missing_days").get<std::vector<std::int64_t>>();
    m.friction_drivers = j.at("friction_drivers").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kSchema, std::string("bad manifest: ") + e.what());
  }
}

}  // namespace roadfriction
