// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>

#include "roadfriction/error.hpp"
#include "roadfriction/geo_segmentation.hpp"
#include "roadfriction/synth.hpp"

using namespace roadfriction;

namespace {

SynthConfig small(std::uint64_t seed = 1) {
  SynthConfig c;
  c.n_points = 60;
  c.n_days = 60;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Synth, QuietConfigGivesConstantFriction) {
  SynthConfig c = small();
  c.seasonal_amplitude_c = 0;
  c.ar_sd = 0;
  c.point_temp_sd = 0;
  c.surface_noise_sd = 0;
  c.pulse_prob = 0;
  c.water_noise_sd = 0;
  c.ice_weight = 0;
  c.water_weight = 0;
  c.treatment_sd = 0;
  c.block_noise_sd = 0;
  c.point_offset_sd = 0;
  c.noise_sd = 0;
  for (const auto& r : generate_trace(c)) ASSERT_EQ(r.friction, c.friction_base);
}

TEST(Synth, RecordCountBookkeeping) {
  const SynthConfig c = small();
  const auto trace = generate_trace(c);
  EXPECT_EQ(trace.size(), c.n_points * c.n_days);
  EXPECT_EQ(ground_truth_manifest(c).n_records, trace.size());

  SynthConfig m = small();
  m.missing_day_prob = 0.2;
  const auto gappy = generate_trace(m);
  const GroundTruthManifest manifest = ground_truth_manifest(m);
  EXPECT_FALSE(manifest.missing_days.empty());
  EXPECT_EQ(gappy.size(), m.n_points * (m.n_days - manifest.missing_days.size()));
  EXPECT_EQ(manifest.n_records, gappy.size());
}

TEST(Synth, MissingDayLeavesOtherDaysUntouched) {
  SynthConfig full = small(3), gappy = small(3);
  gappy.missing_day_prob = 0.3;
  const auto a = generate_trace(full), b = generate_trace(gappy);
  std::set<std::pair<std::int64_t, std::pair<double, double>>> keys;
  std::size_t matched = 0;
  for (const auto& r : b) {
    const auto it = std::find_if(a.begin(), a.end(), [&](const SensorRecord& x) {
      return x.timestamp == r.timestamp && x.lat_deg == r.lat_deg;
    });
    ASSERT_NE(it, a.end());
    EXPECT_EQ(*it, r);
    ++matched;
  }
  EXPECT_EQ(matched, b.size());
}

TEST(Synth, FrictionInRangeAndStatusesConsistent) {
  SynthConfig c;
  c.seed = 4;
  const auto trace = generate_trace(c);
  std::set<Status> seen;
  for (const auto& r : trace) {
    ASSERT_GE(r.friction, 0.05);
    ASSERT_LE(r.friction, 0.95);
    ASSERT_GE(r.water_mm, 0.0);
    ASSERT_EQ(r.status, classify_status(r.surface_temp_c, r.water_mm));
    seen.insert(r.status);
  }
  EXPECT_GE(seen.size(), 5u);
}

TEST(Synth, ClassifyThresholds) {
  EXPECT_EQ(classify_status(2.0, 0.0), Status::kDry);
  EXPECT_EQ(classify_status(2.0, 0.1), Status::kMoist);
  EXPECT_EQ(classify_status(2.0, 0.5), Status::kWet);
  EXPECT_EQ(classify_status(-0.1, 0.0), Status::kSnowHoarfrost);
  EXPECT_EQ(classify_status(-0.1, 0.2), Status::kIce);
  EXPECT_EQ(classify_status(-0.1, 0.9), Status::kSlush);
  EXPECT_EQ(classify_status(0.0, 0.0), Status::kDry);
}

TEST(Synth, SameSeedSameBytes) {
  const SynthConfig c = small(9);
  EXPECT_EQ(format_trace(generate_trace(c)), format_trace(generate_trace(c)));
  EXPECT_NE(format_trace(generate_trace(c)), format_trace(generate_trace(small(10))));
}

TEST(Synth, TraceSurvivesCsvRoundTrip) {
  const auto trace = generate_trace(small(2));
  EXPECT_EQ(parse_trace_text(format_trace(trace)), trace);
}

TEST(Synth, InvalidConfigRejected) {
  SynthConfig c = small();
  c.ar_rho = 1.0;
  EXPECT_THROW(generate_trace(c), Error);
  c = small();
  c.n_days = 29;
  EXPECT_THROW(generate_trace(c), Error);
  c = small();
  c.noise_sd = -1;
  EXPECT_THROW(c.validate(), Error);
  c = small();
  c.missing_day_prob = 1.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Manifest, ListsEveryBlock) {
  SynthConfig c;
  const GroundTruthManifest m = ground_truth_manifest(c);
  ASSERT_EQ(m.blocks.size(), 5u);
  EXPECT_EQ(m.blocks.front().first_point, 0u);
  EXPECT_EQ(m.blocks.back().last_point, c.n_points - 1);
  for (std::size_t b = 0; b < 5; ++b) {
    EXPECT_EQ(m.blocks[b].status, block_regime(b).status);
    if (b > 0) EXPECT_EQ(m.blocks[b].first_point, m.blocks[b - 1].last_point + 1);
  }
  EXPECT_EQ(m.friction_drivers, (std::vector<std::string>{"air_temp", "water_thickness"}));
}

TEST(Manifest, JsonRoundTripIsExact) {
  SynthConfig c;
  c.missing_day_prob = 0.05;
  c.seed = 12;
  const GroundTruthManifest m = ground_truth_manifest(c);
  const GroundTruthManifest back = manifest_from_json(manifest_to_json(m));
  EXPECT_EQ(back, m);
  EXPECT_EQ(manifest_to_json(back), manifest_to_json(m));
  EXPECT_THROW(manifest_from_json("{\"blocks\": 3}"), Error);
}

TEST(Manifest, SegmentationRecoversBlockBoundaries) {
  SynthConfig c;
  c.seed = 7;
  const auto trace = generate_trace(c);
  const RoutePoints route = collect_route_points(trace);
  ASSERT_EQ(route.size(), c.n_points);
  const SegmentAssignment a = select_k(route.points, route.statuses, SegmentationConfig{});
  // Cluster changes along the route; adjacent clusters that share a label
  // run are one merged segment.
  std::vector<std::size_t> changes;
  for (std::size_t p = 1; p < route.size(); ++p)
    if (a.labels[p] != a.labels[p - 1]) changes.push_back(p);
  const GroundTruthManifest m = ground_truth_manifest(c);
  for (std::size_t b = 1; b < m.blocks.size(); ++b) {
    const auto truth = static_cast<long>(m.blocks[b].first_point);
    long best = 1'000'000;
    for (std::size_t p : changes) best = std::min(best, std::abs(static_cast<long>(p) - truth));
    EXPECT_LE(best, 2) << "block " << b;
  }
}
