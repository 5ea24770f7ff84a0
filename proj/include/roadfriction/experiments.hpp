// SPDX-License-Identifier: Apache-2.0
//
// The four studies: model comparison, lag sweep, interval sweep and feature
// ablation. A study is a grid of independent cells
//   (repetition seed, variant, model, segment)
// executed by a bounded worker pool. Each cell writes only its own slot, so
// results do not depend on scheduling.
//
// Seeds: the split of segment s under repetition seed r uses
// derive_seed(r, s); the model uses derive_seed(r, s, model). Neither depends
// on the variant, so equal (t, L, features) settings reproduce equal cells
// across studies.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roadfriction/dataset.hpp"
#include "roadfriction/ffnn.hpp"
#include "roadfriction/geo_segmentation.hpp"
#include "roadfriction/lstm.hpp"
#include "roadfriction/metrics.hpp"
#include "roadfriction/model_io.hpp"
#include "roadfriction/random_forest.hpp"
#include "roadfriction/svr.hpp"

namespace roadfriction {

enum class ExperimentKind : std::uint8_t {
  kModelComparison,
  kLagSweep,
  kIntervalSweep,
  kFeatureAblation
};

std::string_view to_string(ExperimentKind kind) noexcept;
ExperimentKind parse_experiment_kind(std::string_view name);

struct ModelOverrides {
  LstmTrainConfig lstm;
  FfnnConfig ffnn;
  ForestConfig forest;
  SvrConfig svr;
};

struct ExperimentPlan {
  ExperimentKind kind = ExperimentKind::kModelComparison;
  /// Fixed settings; the swept one is replaced per variant.
  std::size_t t_lags = 7;
  std::size_t interval_days = 1;
  std::vector<Feature> features{Feature::kFriction};
  /// Lag counts (lag sweep) or intervals (interval sweep), each in 1..10.
  std::vector<std::size_t> sweep_values;
  /// Feature ablation variants.
  std::vector<std::vector<Feature>> feature_sets;
  std::vector<ModelKind> models;
  std::vector<std::uint64_t> seeds{0};
  ModelOverrides overrides;

  void validate() const;
  /// Number of variants (sweep values, feature sets, or 1).
  std::size_t variant_count() const;
  WindowConfig window(std::size_t variant) const;
  /// Column label of a variant: "7", "friction+water_thickness", ...
  std::string variant_label(std::size_t variant) const;
};

/// Paper-shaped defaults for each study: all five models for the comparison,
/// t or L in 1..10 for the sweeps, the three nested feature sets for the
/// ablation; LSTM only outside the comparison.
ExperimentPlan default_plan(ExperimentKind kind);

/// `{kind, t_values|l_values|feature_sets, seeds, model_overrides, ...}`
ExperimentPlan plan_from_json(std::string_view text);
std::string plan_to_json(const ExperimentPlan& plan);

/// Daily series of the segments a study runs over.
struct Corpus {
  std::vector<std::size_t> segment_ids;
  std::vector<std::vector<DayRow>> series;

  std::size_t size() const noexcept { return series.size(); }
};

/// Segments `records` with select_k starting at K = max_segments and keeps the
/// first `max_segments` segments in route order (all when 0).
Corpus build_corpus(std::span<const SensorRecord> records, SegmentationConfig config,
                    std::size_t max_segments);

struct CellKey {
  std::size_t seed_index = 0;
  std::size_t variant = 0;
  std::size_t model_index = 0;
  std::size_t segment = 0;
};

struct CellResult {
  CellKey key;
  std::optional<MetricsReport> metrics;
  std::string error;
  std::size_t n_train = 0;
  std::size_t n_validate = 0;
  std::size_t n_test = 0;
  /// Fingerprint of the normalised train/validate/test tensors the model saw.
  std::uint64_t input_fingerprint = 0;

  bool ok() const noexcept { return metrics.has_value(); }
};

struct AggregateRow {
  std::size_t variant = 0;
  ModelKind model = ModelKind::kLstm;
  /// Mean over repetition seeds of average_over_segments.
  MetricsReport metrics;
  std::size_t failed_cells = 0;
};

struct PercentileRow {
  std::size_t variant = 0;
  ModelKind model = ModelKind::kLstm;
  /// Across segments, each segment averaged over seeds.
  PercentileSummary mae;
  PercentileSummary mse;
  std::optional<PercentileSummary> mape;
};

struct ExperimentResult {
  ExperimentPlan plan;
  std::vector<std::size_t> segment_ids;
  /// Ordered by (seed, variant, model, segment).
  std::vector<CellResult> cells;
  std::vector<AggregateRow> aggregates;
  /// Filled for interval sweeps.
  std::vector<PercentileRow> percentiles;

  std::size_t failed_cells() const;
  const CellResult& cell(const CellKey& key) const;
  const AggregateRow& aggregate(std::size_t variant, ModelKind model) const;
};

/// Trains and evaluates one model on one split dataset. When `model` is
/// given it receives the trained model.
CellResult run_cell(const ExperimentPlan& plan, const Corpus& corpus, const CellKey& key,
                    SavedModel* model = nullptr);

/// Runs every cell of `plan` over `corpus` with at most `workers` threads
/// (0 means 1). Cell failures are recorded, never thrown.
ExperimentResult run_experiment(const ExperimentPlan& plan, const Corpus& corpus,
                                std::size_t workers = 1);

ExperimentResult run_model_comparison(ExperimentPlan plan, const Corpus& corpus, std::size_t workers = 1);
ExperimentResult run_lag_sweep(ExperimentPlan plan, const Corpus& corpus, std::size_t workers = 1);
ExperimentResult run_interval_sweep(ExperimentPlan plan, const Corpus& corpus, std::size_t workers = 1);
ExperimentResult run_feature_ablation(ExperimentPlan plan, const Corpus& corpus, std::size_t workers = 1);

/// Recomputes aggregates and percentile rows from the cells.
void summarize(ExperimentResult& result);

/// Paper-layout table: `model,mae,mse,mape_pct` for a comparison,
/// `metric,<v1>,...` for the sweeps, `features,mae,mse,mape_pct` for the ablation.
std::string format_table_csv(const ExperimentResult& result);
/// `seed,variant,model,segment_id,n_train,n_validate,n_test,n,n_excluded,mae,mse,mape_pct,status,error`
std::string format_cells_csv(const ExperimentResult& result);
/// Box-plot data per variant and metric (interval sweeps).
std::string format_percentiles_csv(const ExperimentResult& result);
std::string result_to_json(const ExperimentResult& result);
ExperimentResult result_from_json(std::string_view text);

/// Writes table.csv, cells.csv, result.json and, for interval sweeps,
/// percentiles.csv into `out_dir`, each atomically.
void emit_report(const ExperimentResult& result, const std::filesystem::path& out_dir);

}  // namespace roadfriction
