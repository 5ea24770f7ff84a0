// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "roadfriction/error.hpp"

namespace roadfriction {

MetricsReport compute_metrics(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorKind::kDimension, "truth and predictions differ in length");
  }
  if (truth.empty()) throw Error(ErrorKind::kInvalidInput, "metrics need at least one pair");
  double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
  std::size_t n_pct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double err = truth[i] - predicted[i];
    abs_sum += std::abs(err);
    sq_sum += err * err;
    if (std::abs(truth[i]) < kMapeFloor) continue;
    pct_sum += std::abs(err / truth[i]);
    ++n_pct;
  }
  const auto n = static_cast<double>(truth.size());
  MetricsReport r;
  r.n = truth.size();
  r.n_excluded = truth.size() - n_pct;
  r.mae = abs_sum / n;
  r.mse = sq_sum / n;
  if (n_pct > 0) r.mape = 100.0 * pct_sum / static_cast<double>(n_pct);
  return r;
}

MetricsReport average_over_segments(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw Error(ErrorKind::kInvalidInput, "no reports to average");
  MetricsReport out;
  double mape_sum = 0.0;
  std::size_t n_mape = 0;
  for (const MetricsReport& r : reports) {
    out.mae += r.mae;
    out.mse += r.mse;
    out.n += r.n;
    out.n_excluded += r.n_excluded;
    if (r.mape) {
      mape_sum += *r.mape;
      ++n_mape;
    }
  }
  const auto k = static_cast<double>(reports.size());
  out.mae /= k;
  out.mse /= k;
  if (n_mape > 0) out.mape = mape_sum / static_cast<double>(n_mape);
  return out;
}

double percentile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::kInvalidInput, "percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw Error(ErrorKind::kRange, "percentile must lie in [0, 100]");
  const double h = static_cast<double>(sorted.size() - 1) * p / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

PercentileSummary percentile_summary(std::span<const double> values,
                                     std::span<const double> percentiles) {
  if (values.empty()) throw Error(ErrorKind::kInvalidInput, "percentile summary of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  PercentileSummary s;
  s.percentiles.assign(percentiles.begin(), percentiles.end());
  for (double p : percentiles) s.values.push_back(percentile(sorted, p));
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = percentile(sorted, 25.0);
  s.median = percentile(sorted, 50.0);
  s.q3 = percentile(sorted, 75.0);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_low = *std::find_if(sorted.begin(), sorted.end(), [&](double v) { return v >= lo_fence; });
  s.whisker_high = *std::find_if(sorted.rbegin(), sorted.rend(), [&](double v) { return v <= hi_fence; });
  return s;
}

}  // namespace roadfriction
