// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "roadfriction/error.hpp"
#include "roadfriction/random.hpp"

namespace roadfriction {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "friction", "water_thickness", "surface_temp", "air_temp"};

}  // namespace

std::string_view to_string(Feature feature) noexcept {
  return kFeatureNames[static_cast<std::size_t>(feature)];
}

Feature parse_feature(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (kFeatureNames[i] == name) return static_cast<Feature>(i);
  }
  throw Error(ErrorKind::kEnum, "unknown feature '" + std::string(name) + "'");
}

std::string join_features(std::span<const Feature> features, char sep) {
  std::string out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (i) out += sep;
    out += to_string(features[i]);
  }
  return out;
}

std::vector<Feature> parse_feature_list(std::string_view text, char sep) {
  std::vector<Feature> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(sep, start);
    if (end == std::string_view::npos) end = text.size();
    out.push_back(parse_feature(text.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

std::string_view to_string(SplitPart part) noexcept {
  switch (part) {
    case SplitPart::kTrain: return "train";
    case SplitPart::kValidate: return "validate";
    case SplitPart::kTest: return "test";
  }
  return "?";
}

void WindowConfig::validate() const {
  if (t_lags < 1) throw Error(ErrorKind::kInvalidInput, "t_lags must be >= 1");
  if (interval_days < 1) throw Error(ErrorKind::kInvalidInput, "interval_days must be >= 1");
  if (features.empty()) throw Error(ErrorKind::kInvalidInput, "feature list is empty");
}

std::vector<DayRow> series_from_segment(const SegmentModel& segment) {
  std::vector<DayRow> rows(segment.days.size());
  for (std::size_t d = 0; d < rows.size(); ++d) {
    const DailyFeatures& f = segment.days[d];
    rows[d].missing = f.missing;
    rows[d].values = {f.friction, f.water_mm, f.surface_temp_c, f.air_temp_c};
  }
  return rows;
}

SampleSet WindowedDataset::subset(std::span<const std::size_t> indices) const {
  SampleSet out;
  out.t_lags = samples.t_lags;
  out.width = samples.width;
  const std::size_t stride = samples.sample_stride();
  out.inputs.reserve(indices.size() * stride);
  out.targets.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= samples.size()) throw Error(ErrorKind::kDimension, "sample index out of range");
    auto s = samples.sample(i);
    out.inputs.insert(out.inputs.end(), s.begin(), s.end());
    out.targets.push_back(samples.targets[i]);
  }
  return out;
}

const SplitIndices& WindowedDataset::require_split() const {
  if (!split) throw Error(ErrorKind::kState, "dataset has not been split");
  return *split;
}

WindowedDataset build_windows(std::span<const DayRow> series, const WindowConfig& config) {
  config.validate();
  const std::size_t t = config.t_lags;
  const std::size_t l = config.interval_days;
  const std::size_t reach = t * l;
  if (series.size() < reach + 1) {
    throw Error(ErrorKind::kInsufficientData,
                "series of " + std::to_string(series.size()) + " days is shorter than T*L + 1 = " +
                    std::to_string(reach + 1));
  }

  WindowedDataset ds;
  ds.config = config;
  ds.samples.t_lags = t;
  ds.samples.width = config.width();
  const std::size_t candidates = series.size() - reach;
  ds.samples.inputs.reserve(candidates * t * config.width());
  ds.samples.targets.reserve(candidates);
  for (std::size_t i = 0; i < candidates; ++i) {
    bool complete = !series[i + reach].missing;
    for (std::size_t lag = 0; lag < t && complete; ++lag) complete = !series[i + lag * l].missing;
    if (!complete) {
      ++ds.dropped_windows;
      continue;
    }
    for (std::size_t lag = 0; lag < t; ++lag) {
      const DayRow& row = series[i + lag * l];
      for (Feature f : config.features) ds.samples.inputs.push_back(row[f]);
    }
    ds.samples.targets.push_back(series[i + reach][Feature::kFriction]);
    ds.start_day.push_back(i);
  }
  return ds;
}

SplitIndices split_indices(std::size_t n, std::uint64_t seed, std::array<std::size_t, 3> ratios) {
  if (n < 10) {
    throw Error(ErrorKind::kInsufficientData,
                "need at least 10 samples to split, have " + std::to_string(n));
  }
  const std::size_t total = ratios[0] + ratios[1] + ratios[2];
  if (total == 0) throw Error(ErrorKind::kInvalidInput, "split ratios sum to zero");
  const std::size_t n_train = n * ratios[0] / total;
  const std::size_t n_validate = n * ratios[1] / total;

  Rng rng(seed);
  const std::vector<std::size_t> order = random_permutation(n, rng);
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + n_train);
  out.validate.assign(order.begin() + n_train, order.begin() + n_train + n_validate);
  out.test.assign(order.begin() + n_train + n_validate, order.end());
  return out;
}

WindowedDataset split(WindowedDataset dataset, std::uint64_t seed, std::array<std::size_t, 3> ratios) {
  dataset.split = split_indices(dataset.size(), seed, ratios);
  return dataset;
}

Scaler Scaler::fit(const SampleSet& train) {
  if (train.size() == 0) throw Error(ErrorKind::kInsufficientData, "empty training split");
  Scaler s;
  const std::size_t p = train.width;
  std::vector<double> lo(p, INFINITY), hi(p, -INFINITY);
  for (std::size_t i = 0; i < train.inputs.size(); ++i) {
    const std::size_t c = i % p;
    lo[c] = std::min(lo[c], train.inputs[i]);
    hi[c] = std::max(hi[c], train.inputs[i]);
  }
  s.shift_ = lo;
  s.scale_.resize(p);
  for (std::size_t c = 0; c < p; ++c) {
    const double range = hi[c] - lo[c];
    s.scale_[c] = range > 0.0 ? range : 1.0;
  }
  const auto [tlo, thi] = std::minmax_element(train.targets.begin(), train.targets.end());
  s.target_shift_ = *tlo;
  s.target_scale_ = *thi - *tlo > 0.0 ? *thi - *tlo : 1.0;
  s.fitted_ = true;
  return s;
}

Scaler Scaler::from_parts(std::vector<double> shift, std::vector<double> scale, double target_shift,
                          double target_scale) {
  if (shift.size() != scale.size()) throw Error(ErrorKind::kDimension, "scaler size mismatch");
  for (double v : scale) {
    if (!(v > 0.0)) throw Error(ErrorKind::kInvalidInput, "scaler scale must be positive");
  }
  if (!(target_scale > 0.0)) throw Error(ErrorKind::kInvalidInput, "scaler scale must be positive");
  Scaler s;
  s.shift_ = std::move(shift);
  s.scale_ = std::move(scale);
  s.target_shift_ = target_shift;
  s.target_scale_ = target_scale;
  s.fitted_ = true;
  return s;
}

void Scaler::require_fitted() const {
  if (!fitted_) throw Error(ErrorKind::kState, "scaler has not been fitted");
}

SampleSet Scaler::transform_inputs(const SampleSet& raw) const {
  require_fitted();
  if (raw.width != width()) throw Error(ErrorKind::kDimension, "scaler width mismatch");
  SampleSet out = raw;
  for (std::size_t i = 0; i < out.inputs.size(); ++i) {
    out.inputs[i] = apply(i % raw.width, out.inputs[i]);
  }
  return out;
}

SampleSet Scaler::transform(const SampleSet& raw) const {
  SampleSet out = transform_inputs(raw);
  for (double& y : out.targets) y = apply_target(y);
  return out;
}

CorrelationMatrix correlation_matrix(std::span<const DayRow> rows,
                                     std::span<const Feature> features) {
  std::vector<const DayRow*> present;
  for (const DayRow& r : rows) {
    if (r.missing) continue;
    for (Feature f : features) {
      if (!std::isfinite(r[f])) throw Error(ErrorKind::kInvalidInput, "non-finite feature value");
    }
    present.push_back(&r);
  }
  if (present.size() < 3) {
    throw Error(ErrorKind::kInsufficientData, "correlation needs at least 3 rows");
  }
  const std::size_t p = features.size();
  const auto n = static_cast<double>(present.size());
  std::vector<double> mean(p, 0.0);
  for (const DayRow* r : present) {
    for (std::size_t a = 0; a < p; ++a) mean[a] += (*r)[features[a]];
  }
  for (double& m : mean) m /= n;
  std::vector<double> cov(p * p, 0.0);
  for (const DayRow* r : present) {
    for (std::size_t a = 0; a < p; ++a) {
      const double da = (*r)[features[a]] - mean[a];
      for (std::size_t b = 0; b < p; ++b) cov[a * p + b] += da * ((*r)[features[b]] - mean[b]);
    }
  }

  CorrelationMatrix out;
  out.features.assign(features.begin(), features.end());
  out.values.resize(p * p);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      const double va = cov[a * p + a];
      const double vb = cov[b * p + b];
      if (!(va > 0.0) || !(vb > 0.0)) continue;
      if (a == b) {
        out.values[a * p + b] = 1.0;
        continue;
      }
      const double r = cov[a * p + b] / std::sqrt(va * vb);
      out.values[a * p + b] = std::clamp(r, -1.0, 1.0);
    }
  }
  // Exact symmetry regardless of rounding in the two accumulation orders.
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a + 1; b < p; ++b) out.values[b * p + a] = out.values[a * p + b];
  }
  return out;
}

std::string format_dataset_csv(const WindowedDataset& dataset) {
  const std::size_t stride = dataset.samples.sample_stride();
  std::vector<std::string_view> part(dataset.size(), "unsplit");
  if (dataset.split) {
    for (std::size_t i : dataset.split->train) part[i] = "train";
    for (std::size_t i : dataset.split->validate) part[i] = "validate";
    for (std::size_t i : dataset.split->test) part[i] = "test";
  }
  std::string out = "sample_id";
  for (std::size_t j = 0; j < stride; ++j) out += ",lag_" + std::to_string(j);
  out += ",target,split\n";
  char buf[64];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out += std::to_string(i);
    for (double v : dataset.samples.sample(i)) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g,", dataset.samples.targets[i]);
    out += buf;
    out += part[i];
    out += '\n';
  }
  return out;
}

std::uint64_t fingerprint(const SampleSet& samples, std::uint64_t basis) {
  std::uint64_t h = basis;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(&samples.t_lags, sizeof samples.t_lags);
  mix(&samples.width, sizeof samples.width);
  mix(samples.inputs.data(), samples.inputs.size() * sizeof(double));
  mix(samples.targets.data(), samples.targets.size() * sizeof(double));
  return h;
}

}  // namespace roadfriction
