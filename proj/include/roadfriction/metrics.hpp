// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace roadfriction {

/// Ground-truth magnitudes below this are left out of MAPE.
inline constexpr double kMapeFloor = 1e-6;

struct MetricsReport {
  double mae = 0.0;
  double mse = 0.0;
  /// Percent. nullopt when every pair was excluded.
  std::optional<double> mape;
  std::size_t n = 0;
  std::size_t n_excluded = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport compute_metrics(std::span<const double> truth, std::span<const double> predicted);

/// Unweighted mean of each metric. MAPE averages over the reports that have
/// one; counts are summed.
MetricsReport average_over_segments(std::span<const MetricsReport> reports);

inline constexpr std::array<double, 3> kDefaultPercentiles{25.0, 50.0, 75.0};

struct PercentileSummary {
  std::vector<double> percentiles;
  std::vector<double> values;
  double min = 0.0;
  double max = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  /// Most extreme data points within 1.5 IQR of the quartiles.
  double whisker_low = 0.0;
  double whisker_high = 0.0;
};

/// Linear interpolation between order statistics at rank (n - 1) p / 100.
double percentile(std::span<const double> sorted, double p);

PercentileSummary percentile_summary(std::span<const double> values,
                                     std::span<const double> percentiles = kDefaultPercentiles);

}  // namespace roadfriction
