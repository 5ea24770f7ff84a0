// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "roadfriction/error.hpp"
#include "roadfriction/metrics.hpp"

using namespace roadfriction;

TEST(Metrics, TwoPointExample) {
  const std::vector<double> truth{0.5, 0.2}, pred{0.4, 0.3};
  const MetricsReport r = compute_metrics(truth, pred);
  EXPECT_NEAR(r.mae, 0.1, 1e-12);
  EXPECT_NEAR(r.mse, 0.01, 1e-12);
  ASSERT_TRUE(r.mape);
  EXPECT_NEAR(*r.mape, 35.0, 1e-9);
  EXPECT_EQ(r.n, 2u);
  EXPECT_EQ(r.n_excluded, 0u);
}

TEST(Metrics, AgreeWithDirectFormulas) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::vector<double> truth(10000), pred(10000);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = u(gen);
    pred[i] = u(gen);
  }
  const MetricsReport r = compute_metrics(truth, pred);
  EXPECT_NEAR(r.mae, oracle::mae(truth, pred), 1e-12);
  EXPECT_NEAR(r.mse, oracle::mse(truth, pred), 1e-12);
  EXPECT_NEAR(*r.mape, oracle::mape(truth, pred), 1e-12 * 100);
}

TEST(Metrics, PerfectPredictionIsZero) {
  const std::vector<double> v{0.3, 0.6, 0.9};
  const MetricsReport r = compute_metrics(v, v);
  EXPECT_EQ(r.mae, 0.0);
  EXPECT_EQ(r.mse, 0.0);
  EXPECT_EQ(*r.mape, 0.0);
}

TEST(Metrics, ScaleEquivariance) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> truth(200), pred(200), truth_s(200), pred_s(200);
  const double c = 3.5;
  for (std::size_t i = 0; i < 200; ++i) {
    truth[i] = u(gen);
    pred[i] = u(gen);
    truth_s[i] = c * truth[i];
    pred_s[i] = c * pred[i];
  }
  const auto a = compute_metrics(truth, pred), b = compute_metrics(truth_s, pred_s);
  EXPECT_NEAR(b.mae, c * a.mae, 1e-12);
  EXPECT_NEAR(b.mse, c * c * a.mse, 1e-12);
  EXPECT_NEAR(*b.mape, *a.mape, 1e-10);
}

TEST(Metrics, NearZeroTruthExcludedFromMapeOnly) {
  const std::vector<double> truth{0.0, 0.5, 1e-9}, pred{0.1, 0.4, 0.2};
  const MetricsReport r = compute_metrics(truth, pred);
  EXPECT_EQ(r.n, 3u);
  EXPECT_EQ(r.n_excluded, 2u);
  EXPECT_NEAR(*r.mape, 20.0, 1e-9);
  EXPECT_NEAR(r.mae, (0.1 + 0.1 + (0.2 - 1e-9)) / 3, 1e-12);

  const MetricsReport none = compute_metrics(std::vector<double>{0.0}, std::vector<double>{1.0});
  EXPECT_FALSE(none.mape);
  EXPECT_EQ(none.n_excluded, 1u);
}

TEST(Metrics, InvalidInputs) {
  try {
    compute_metrics(std::vector<double>{1, 2}, std::vector<double>{1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
  try {
    compute_metrics(std::vector<double>{}, std::vector<double>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidInput);
  }
}

TEST(Averaging, MeansAndCounts) {
  const std::vector<MetricsReport> reports{{0.1, 0.02, 10.0, 5, 0}, {0.3, 0.04, 30.0, 7, 1}};
  const MetricsReport avg = average_over_segments(reports);
  EXPECT_NEAR(avg.mae, 0.2, 1e-15);
  EXPECT_NEAR(avg.mse, 0.03, 1e-15);
  EXPECT_NEAR(*avg.mape, 20.0, 1e-12);
  EXPECT_EQ(avg.n, 12u);
  EXPECT_EQ(avg.n_excluded, 1u);

  const std::vector<MetricsReport> one{{0.1, 0.02, 10.0, 5, 0}};
  EXPECT_EQ(average_over_segments(one), one[0]);
}

TEST(Averaging, SkipsMissingMape) {
  const std::vector<MetricsReport> reports{{0.1, 0.02, std::nullopt, 5, 5}, {0.3, 0.04, 30.0, 7, 0}};
  EXPECT_NEAR(*average_over_segments(reports).mape, 30.0, 1e-12);
}

TEST(Averaging, PermutationInvariant) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<MetricsReport> reports;
  for (int i = 0; i < 20; ++i) reports.push_back({u(gen), u(gen), 100 * u(gen), 10, 0});
  const MetricsReport a = average_over_segments(reports);
  std::shuffle(reports.begin(), reports.end(), gen);
  const MetricsReport b = average_over_segments(reports);
  EXPECT_NEAR(a.mae, b.mae, 1e-14);
  EXPECT_NEAR(a.mse, b.mse, 1e-14);
  EXPECT_NEAR(*a.mape, *b.mape, 1e-12);
}

TEST(Percentiles, OneToHundred) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  std::shuffle(v.begin(), v.end(), std::mt19937_64(4));
  const PercentileSummary s = percentile_summary(v);
  ASSERT_EQ(s.values.size(), 3u);
  EXPECT_NEAR(s.values[0], 25.75, 1e-12);
  EXPECT_NEAR(s.values[1], 50.5, 1e-12);
  EXPECT_NEAR(s.values[2], 75.25, 1e-12);
  EXPECT_EQ(s.min, 1.0);
  EXPECT_EQ(s.max, 100.0);
  EXPECT_EQ(s.whisker_low, 1.0);
  EXPECT_EQ(s.whisker_high, 100.0);
}

TEST(Percentiles, WhiskersExcludeOutliers) {
  std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 100};
  const PercentileSummary s = percentile_summary(v);
  EXPECT_EQ(s.q1, 3.0);
  EXPECT_EQ(s.q3, 7.0);
  EXPECT_EQ(s.whisker_high, 8.0);
  EXPECT_EQ(s.whisker_low, 1.0);
  EXPECT_EQ(s.max, 100.0);
}

TEST(Percentiles, OrderedAndBounded) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + trial * 3);
    for (double& x : v) x = n(gen);
    const PercentileSummary s = percentile_summary(v);
    EXPECT_LE(s.min, s.whisker_low);
    EXPECT_LE(s.whisker_low, s.q1);
    EXPECT_LE(s.q1, s.median);
    EXPECT_LE(s.median, s.q3);
    EXPECT_LE(s.q3, s.whisker_high);
    EXPECT_LE(s.whisker_high, s.max);
  }
}
