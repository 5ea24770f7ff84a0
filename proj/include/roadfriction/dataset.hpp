// SPDX-License-Identifier: Apache-2.0
//
// Supervised sample construction from per-segment daily series.
//
// A sample with T lags spaced L days apart starting at day i reads days
// i, i + L, ..., i + (T - 1) L and targets friction at day i + T L, so a
// complete series of D days yields N = D - T L samples.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roadfriction/geo_segmentation.hpp"

namespace roadfriction {

enum class Feature : std::uint8_t { kFriction = 0, kWaterThickness, kSurfaceTemp, kAirTemp };
inline constexpr std::size_t kFeatureCount = 4;

std::string_view to_string(Feature feature) noexcept;
/// Throws Error(kEnum) for unknown names.
Feature parse_feature(std::string_view name);
std::string join_features(std::span<const Feature> features, char sep = '+');
/// Parses a `sep`-separated feature list such as "friction+water_thickness".
std::vector<Feature> parse_feature_list(std::string_view text, char sep = '+');

struct WindowConfig {
  std::size_t t_lags = 7;
  std::size_t interval_days = 1;
  std::vector<Feature> features{Feature::kFriction};

  std::size_t width() const noexcept { return features.size(); }
  void validate() const;
};

/// One day of a segment series, values indexed by Feature.
struct DayRow {
  bool missing = false;
  std::array<double, kFeatureCount> values{};

  double operator[](Feature f) const noexcept { return values[static_cast<std::size_t>(f)]; }
};

std::vector<DayRow> series_from_segment(const SegmentModel& segment);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validate;
  std::vector<std::size_t> test;
};

enum class SplitPart : std::uint8_t { kTrain, kValidate, kTest };
std::string_view to_string(SplitPart part) noexcept;

/// Samples laid out row-major as [sample][lag][feature].
struct SampleSet {
  std::size_t t_lags = 0;
  std::size_t width = 0;
  std::vector<double> inputs;
  std::vector<double> targets;

  std::size_t size() const noexcept { return targets.size(); }
  std::size_t sample_stride() const noexcept { return t_lags * width; }
  std::span<const double> sample(std::size_t i) const {
    return {inputs.data() + i * sample_stride(), sample_stride()};
  }
};

struct WindowedDataset {
  WindowConfig config;
  SampleSet samples;
  /// Day index (into the source series) of each sample's first lag.
  std::vector<std::size_t> start_day;
  /// Windows skipped because an input or target day was missing.
  std::size_t dropped_windows = 0;
  std::optional<SplitIndices> split;

  std::size_t size() const noexcept { return samples.size(); }
  /// Samples at `indices`, in that order.
  SampleSet subset(std::span<const std::size_t> indices) const;
  /// Throws Error(kState) when the dataset has not been split.
  const SplitIndices& require_split() const;
};

/// Throws Error(kInsufficientData) when the series has fewer than T L + 1 days.
WindowedDataset build_windows(std::span<const DayRow> series, const WindowConfig& config);

/// Sizes are floor(r0 N / sum), floor(r1 N / sum) and the remainder, drawn
/// from a uniform permutation seeded by `seed`. Requires N >= 10.
SplitIndices split_indices(std::size_t n, std::uint64_t seed,
                           std::array<std::size_t, 3> ratios = {7, 2, 1});
WindowedDataset split(WindowedDataset dataset, std::uint64_t seed,
                      std::array<std::size_t, 3> ratios = {7, 2, 1});

/// Min-max scaling of every input channel and of the target onto [0, 1],
/// fitted on training samples only. A constant channel maps to 0 (scale 1).
class Scaler {
 public:
  Scaler() = default;

  static Scaler fit(const SampleSet& train);

  bool fitted() const noexcept { return fitted_; }
  std::size_t width() const noexcept { return shift_.size(); }

  double apply(std::size_t channel, double x) const { return (x - shift_[channel]) / scale_[channel]; }
  double invert(std::size_t channel, double y) const { return y * scale_[channel] + shift_[channel]; }
  double apply_target(double y) const { return (y - target_shift_) / target_scale_; }
  double invert_target(double y) const { return y * target_scale_ + target_shift_; }

  /// Normalises inputs and targets. Throws Error(kState) if unfitted.
  SampleSet transform(const SampleSet& raw) const;
  /// Normalises inputs only; targets are copied unchanged.
  SampleSet transform_inputs(const SampleSet& raw) const;

  const std::vector<double>& shift() const noexcept { return shift_; }
  const std::vector<double>& scale() const noexcept { return scale_; }
  double target_shift() const noexcept { return target_shift_; }
  double target_scale() const noexcept { return target_scale_; }

  static Scaler from_parts(std::vector<double> shift, std::vector<double> scale,
                           double target_shift, double target_scale);

 private:
  void require_fitted() const;

  bool fitted_ = false;
  std::vector<double> shift_;
  std::vector<double> scale_;
  double target_shift_ = 0.0;
  double target_scale_ = 1.0;
};

inline Scaler fit_scaler(const SampleSet& train) { return Scaler::fit(train); }

/// Pearson correlations between features over non-missing days. Entries
/// involving a zero-variance feature are nullopt.
struct CorrelationMatrix {
  std::vector<Feature> features;
  std::vector<std::optional<double>> values;

  std::size_t size() const noexcept { return features.size(); }
  const std::optional<double>& at(std::size_t i, std::size_t j) const {
    return values[i * features.size() + j];
  }
};

CorrelationMatrix correlation_matrix(std::span<const DayRow> rows,
                                     std::span<const Feature> features);

/// `sample_id,lag_0..lag_{T*P-1},target,split`
std::string format_dataset_csv(const WindowedDataset& dataset);

/// FNV-1a over the raw bytes of a sample set; equal fingerprints mean
/// bitwise-identical tensors.
std::uint64_t fingerprint(const SampleSet& samples, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace roadfriction
