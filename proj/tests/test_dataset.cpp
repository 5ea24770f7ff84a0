// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>
#include <set>

#include "roadfriction/error.hpp"
#include "roadfriction/dataset.hpp"
#include "roadfriction/experiments.hpp"
#include "roadfriction/synth.hpp"

using namespace roadfriction;

namespace {

// Day d carries friction d, water 100 + d, surface 200 + d, air 300 + d.
std::vector<DayRow> ramp(std::size_t days) {
  std::vector<DayRow> rows(days);
  for (std::size_t d = 0; d < days; ++d) {
    const auto v = static_cast<double>(d);
    rows[d].values = {v, 100 + v, 200 + v, 300 + v};
  }
  return rows;
}

// Window starts i with all of i, i+L, ..., i+tL inside the series and present.
std::vector<std::size_t> enumerate_starts(const std::vector<DayRow>& rows, std::size_t t, std::size_t l) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i + t * l < rows.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j <= t; ++j) ok = ok && !rows[i + j * l].missing;
    if (ok) out.push_back(i);
  }
  return out;
}

}  // namespace

TEST(Windows, SampleCountExhaustive) {
  for (std::size_t d = 1; d <= 60; ++d) {
    const auto rows = ramp(d);
    for (std::size_t t = 1; t <= 10; ++t) {
      for (std::size_t l = 1; l <= 10; ++l) {
        const WindowConfig cfg{t, l, {Feature::kFriction}};
        if (d < t * l + 1) {
          EXPECT_THROW(build_windows(rows, cfg), Error);
          continue;
        }
        const auto ds = build_windows(rows, cfg);
        ASSERT_EQ(ds.size(), d - t * l) << d << ' ' << t << ' ' << l;
        const auto starts = enumerate_starts(rows, t, l);
        ASSERT_EQ(ds.start_day, starts);
        for (std::size_t s = 0; s < ds.size(); ++s) {
          for (std::size_t j = 0; j < t; ++j) {
            ASSERT_EQ(ds.samples.sample(s)[j], static_cast<double>(starts[s] + j * l));
          }
          ASSERT_EQ(ds.samples.targets[s], static_cast<double>(starts[s] + t * l));
        }
      }
    }
  }
}

TEST(Windows, ReferenceInstanceAndSplitSizes) {
  const auto ds = build_windows(ramp(446), {7, 1, {Feature::kFriction}});
  EXPECT_EQ(ds.size(), 439u);
  const auto sp = split_indices(439, 1);
  EXPECT_EQ(sp.train.size(), 307u);
  EXPECT_EQ(sp.validate.size(), 87u);
  EXPECT_EQ(sp.test.size(), 45u);
}

TEST(Windows, FeatureLayoutIsLagMajor) {
  const auto ds = build_windows(ramp(20), {7, 1, {Feature::kFriction, Feature::kWaterThickness,
                                                   Feature::kSurfaceTemp}});
  EXPECT_EQ(ds.samples.inputs.size(), ds.size() * 7 * 3);
  const auto s = ds.samples.sample(2);
  EXPECT_EQ(s[0], 2.0);
  EXPECT_EQ(s[1], 102.0);
  EXPECT_EQ(s[2], 202.0);
  EXPECT_EQ(s[3], 3.0);
  EXPECT_EQ(ds.samples.targets[2], 9.0);
}

TEST(Windows, MissingDaysDropTouchingWindows) {
  auto rows = ramp(50);
  rows[10].missing = true;
  rows[31].missing = true;
  const auto ds = build_windows(rows, {3, 2, {Feature::kFriction}});
  EXPECT_EQ(ds.start_day, enumerate_starts(rows, 3, 2));
  EXPECT_EQ(ds.dropped_windows, 44u - ds.size());
}

TEST(Split, PartitionIsDisjointAndComplete) {
  for (std::size_t n : {10u, 11u, 57u, 439u}) {
    const auto sp = split_indices(n, 5);
    EXPECT_EQ(sp.train.size(), 7 * n / 10);
    EXPECT_EQ(sp.validate.size(), 2 * n / 10);
    std::set<std::size_t> all;
    for (const auto* part : {&sp.train, &sp.validate, &sp.test}) all.insert(part->begin(), part->end());
    EXPECT_EQ(all.size(), n);
    EXPECT_EQ(*all.rbegin(), n - 1);
  }
}

TEST(Split, DeterministicPerSeed) {
  const auto a = split_indices(100, 3), b = split_indices(100, 3), c = split_indices(100, 4);
  EXPECT_EQ(a.train, b.train);
  EXPECT_NE(a.train, c.train);
}

TEST(Split, TooFewSamples) {
  EXPECT_THROW(split_indices(9, 0), Error);
  WindowedDataset ds = build_windows(ramp(30), {1, 1, {Feature::kFriction}});
  EXPECT_THROW(ds.require_split(), Error);
}

TEST(Scaler, FittedOnTrainOnly) {
  const auto ds = split(build_windows(ramp(100), {3, 1, {Feature::kFriction, Feature::kAirTemp}}), 2);
  const auto& sp = ds.require_split();
  const SampleSet train = ds.subset(sp.train);
  const Scaler sc = Scaler::fit(train);
  const SampleSet norm = sc.transform(train);
  for (double v : norm.inputs) {
    EXPECT_GE(v, -1e-12);
    EXPECT_LE(v, 1 + 1e-12);
  }
  double lo = 1e9, hi = -1e9;
  // Channel 0 at every lag position.
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::size_t lag = 0; lag < train.t_lags; ++lag) {
      lo = std::min(lo, train.sample(i)[lag * train.width]);
      hi = std::max(hi, train.sample(i)[lag * train.width]);
    }
  }
  EXPECT_EQ(sc.shift()[0], lo);
  EXPECT_EQ(sc.scale()[0], hi - lo);
  for (double y : train.targets) EXPECT_NEAR(sc.invert_target(sc.apply_target(y)), y, 1e-12);
}

TEST(Scaler, ConstantChannelMapsToZero) {
  auto rows = ramp(40);
  for (auto& r : rows) r.values[1] = 3.5;
  const auto ds = build_windows(rows, {2, 1, {Feature::kWaterThickness}});
  const Scaler sc = Scaler::fit(ds.samples);
  EXPECT_EQ(sc.scale()[0], 1.0);
  for (double v : sc.transform(ds.samples).inputs) EXPECT_EQ(v, 0.0);
}

TEST(Scaler, UnfittedIsStateError) {
  const Scaler sc;
  try {
    sc.transform(SampleSet{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kState);
  }
}

TEST(Correlation, SurfaceTracksAirOnSynthSegment) {
  SynthConfig c;
  c.n_points = 20;
  c.seed = 4;
  const auto trace = generate_trace(c);
  SegmentationConfig seg;
  const Corpus corpus = build_corpus(trace, seg, 0);
  const std::vector<Feature> f{Feature::kFriction, Feature::kWaterThickness, Feature::kSurfaceTemp,
                               Feature::kAirTemp};
  for (const auto& series : corpus.series) {
    const auto m = correlation_matrix(series, f);
    ASSERT_TRUE(m.at(2, 3).has_value());
    EXPECT_GT(*m.at(2, 3), 0.9);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_NEAR(*m.at(i, i), 1.0, 1e-12);
      for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(*m.at(i, j), *m.at(j, i));
    }
  }
}

TEST(Correlation, ZeroVarianceAndTooFewRows) {
  auto rows = ramp(10);
  for (auto& r : rows) r.values[1] = 0.0;
  const std::vector<Feature> f{Feature::kFriction, Feature::kWaterThickness};
  const auto m = correlation_matrix(rows, f);
  EXPECT_FALSE(m.at(0, 1).has_value());
  EXPECT_NEAR(*m.at(0, 0), 1.0, 1e-12);
  EXPECT_THROW(correlation_matrix(std::span(rows).first(2), f), Error);
}

TEST(Features, NamesRoundTrip) {
  const std::vector<Feature> f{Feature::kFriction, Feature::kWaterThickness, Feature::kSurfaceTemp};
  EXPECT_EQ(join_features(f), "friction+water_thickness+surface_temp");
  EXPECT_EQ(parse_feature_list("friction+water_thickness+surface_temp"), f);
  EXPECT_THROW(parse_feature("snow_depth"), Error);
}

TEST(DatasetCsv, HeaderAndSplitColumn) {
  const auto ds = split(build_windows(ramp(30), {2, 1, {Feature::kFriction}}), 1);
  const std::string csv = format_dataset_csv(ds);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "sample_id,lag_0,lag_1,target,split");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 29);
  EXPECT_NE(csv.find(",train\n"), std::string::npos);
  EXPECT_NE(csv.find(",test\n"), std::string::npos);
}

TEST(Fingerprint, DetectsAnyByteChange) {
  const auto ds = build_windows(ramp(30), {2, 1, {Feature::kFriction}});
  SampleSet copy = ds.samples;
  EXPECT_EQ(fingerprint(copy), fingerprint(ds.samples));
  copy.inputs[5] = std::nextafter(copy.inputs[5], 1e9);
  EXPECT_NE(fingerprint(copy), fingerprint(ds.samples));
}
