// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <thread>

#include "json.hpp"
#include "roadfriction/error.hpp"
#include "roadfriction/persistence.hpp"
#include "roadfriction/random.hpp"

namespace roadfriction {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::size_t kSweepMax = 10;

std::vector<std::size_t> one_to_ten() {
  std::vector<std::size_t> v(kSweepMax);
  for (std::size_t i = 0; i < kSweepMax; ++i) v[i] = i + 1;
  return v;
}

template <class T>
void read_if(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_optimizer(const Json& j, OptimizerConfig& o) {
  read_if(j, "learning_rate", o.learning_rate);
  read_if(j, "beta1", o.beta1);
  read_if(j, "beta2", o.beta2);
  read_if(j, "epsilon", o.epsilon);
  read_if(j, "max_epochs", o.max_epochs);
  read_if(j, "batch_size", o.batch_size);
  read_if(j, "patience", o.patience);
  read_if(j, "clip_norm", o.clip_norm);
}

Json optimizer_json(const OptimizerConfig& o) {
  return Json{{"learning_rate", o.learning_rate}, {"beta1", o.beta1},
              {"beta2", o.beta2},                 {"epsilon", o.epsilon},
              {"max_epochs", o.max_epochs},       {"batch_size", o.batch_size},
              {"patience", o.patience},           {"clip_norm", o.clip_norm}};
}

Json features_json(std::span<const Feature> features) {
  Json out = Json::array();
  for (Feature f : features) out.push_back(to_string(f));
  return out;
}

std::vector<Feature> features_from_json(const Json& j) {
  if (j.is_string()) return parse_feature_list(j.get<std::string>());
  std::vector<Feature> out;
  for (const Json& f : j) out.push_back(parse_feature(f.get<std::string>()));
  return out;
}

std::uint64_t chain_fingerprint(std::initializer_list<const SampleSet*> sets) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const SampleSet* s : sets) h = fingerprint(*s, h);
  return h;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::kModelComparison: return "model_comparison";
    case ExperimentKind::kLagSweep: return "lag_sweep";
    case ExperimentKind::kIntervalSweep: return "interval_sweep";
    case ExperimentKind::kFeatureAblation: return "feature_ablation";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::kModelComparison, ExperimentKind::kLagSweep,
                 ExperimentKind::kIntervalSweep, ExperimentKind::kFeatureAblation}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::kEnum, "unknown experiment kind '" + std::string(name) + "'");
}

void ExperimentPlan::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kInvalidInput, "plan: " + msg); };
  if (seeds.empty()) fail("at least one repetition seed is required");
  if (models.empty()) fail("at least one model is required");
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (models[i] == models[j]) fail("duplicate model " + std::string(to_string(models[i])));
    }
  }
  const bool sweep = kind == ExperimentKind::kLagSweep || kind == ExperimentKind::kIntervalSweep;
  if (sweep) {
    if (sweep_values.empty()) fail("sweep values are empty");
    for (std::size_t v : sweep_values) {
      if (v < 1 || v > kSweepMax) fail("sweep values must lie in 1..10");
    }
  }
  if (kind == ExperimentKind::kFeatureAblation && feature_sets.empty()) fail("no feature sets");
  for (std::size_t v = 0; v < variant_count(); ++v) window(v).validate();
  overrides.lstm.optimizer.validate();
  overrides.ffnn.optimizer.validate();
  if (overrides.lstm.hidden_dim < 1) fail("LSTM hidden_dim must be >= 1");
  if (overrides.ffnn.hidden1 < 1 || overrides.ffnn.hidden2 < 1) fail("FFNN layers must be >= 1");
  if (overrides.forest.n_trees < 1) fail("forest needs at least one tree");
  if (!(overrides.svr.c > 0.0) || !(overrides.svr.epsilon > 0.0) || overrides.svr.gamma < 0.0) {
    fail("SVR needs C > 0, epsilon > 0 and gamma >= 0");
  }
}

std::size_t ExperimentPlan::variant_count() const {
  switch (kind) {
    case ExperimentKind::kLagSweep:
    case ExperimentKind::kIntervalSweep: return sweep_values.size();
    case ExperimentKind::kFeatureAblation: return feature_sets.size();
    case ExperimentKind::kModelComparison: return 1;
  }
  return 1;
}

WindowConfig ExperimentPlan::window(std::size_t variant) const {
  WindowConfig w{t_lags, interval_days, features};
  switch (kind) {
    case ExperimentKind::kLagSweep: w.t_lags = sweep_values.at(variant); break;
    case ExperimentKind::kIntervalSweep: w.interval_days = sweep_values.at(variant); break;
    case ExperimentKind::kFeatureAblation: w.features = feature_sets.at(variant); break;
    case ExperimentKind::kModelComparison: break;
  }
  return w;
}

std::string ExperimentPlan::variant_label(std::size_t variant) const {
  switch (kind) {
    case ExperimentKind::kLagSweep:
    case ExperimentKind::kIntervalSweep: return std::to_string(sweep_values.at(variant));
    case ExperimentKind::kFeatureAblation: return join_features(feature_sets.at(variant));
    case ExperimentKind::kModelComparison: return "all";
  }
  return "";
}

ExperimentPlan default_plan(ExperimentKind kind) {
  ExperimentPlan p;
  p.kind = kind;
  p.models = {ModelKind::kLstm};
  switch (kind) {
    case ExperimentKind::kModelComparison:
      p.models.assign(std::begin(kAllModelKinds), std::end(kAllModelKinds));
      break;
    case ExperimentKind::kLagSweep:
    case ExperimentKind::kIntervalSweep: p.sweep_values = one_to_ten(); break;
    case ExperimentKind::kFeatureAblation:
      p.feature_sets = {{Feature::kFriction},
                        {Feature::kFriction, Feature::kWaterThickness},
                        {Feature::kFriction, Feature::kWaterThickness, Feature::kSurfaceTemp}};
      break;
  }
  return p;
}

ExperimentPlan plan_from_json(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    ExperimentPlan p = default_plan(parse_experiment_kind(j.at("kind").get<std::string>()));
    read_if(j, "t_lags", p.t_lags);
    read_if(j, "interval_days", p.interval_days);
    if (j.contains("features")) p.features = features_from_json(j.at("features"));
    if (j.contains("t_values") && j.contains("l_values")) {
      throw Error(ErrorKind::kSchema, "plan may give t_values or l_values, not both");
    }
    if (j.contains("t_values")) {
      if (p.kind != ExperimentKind::kLagSweep) throw Error(ErrorKind::kSchema, "t_values needs kind lag_sweep");
      p.sweep_values = j.at("t_values").get<std::vector<std::size_t>>();
    }
    if (j.contains("l_values")) {
      if (p.kind != ExperimentKind::kIntervalSweep) {
        throw Error(ErrorKind::kSchema, "l_values needs kind interval_sweep");
      }
      p.sweep_values = j.at("l_values").get<std::vector<std::size_t>>();
    }
    if (j.contains("feature_sets")) {
      if (p.kind != ExperimentKind::kFeatureAblation) {
        throw Error(ErrorKind::kSchema, "feature_sets needs kind feature_ablation");
      }
      p.feature_sets.clear();
      for (const Json& set : j.at("feature_sets")) p.feature_sets.push_back(features_from_json(set));
    }
    if (j.contains("models")) {
      p.models.clear();
      for (const Json& m : j.at("models")) p.models.push_back(parse_model_kind(m.get<std::string>()));
    }
    if (j.contains("seeds")) {
      const Json& s = j.at("seeds");
      if (s.is_number_unsigned()) {
        p.seeds.clear();
        for (std::uint64_t i = 0; i < s.get<std::uint64_t>(); ++i) p.seeds.push_back(i);
      } else {
        p.seeds = s.get<std::vector<std::uint64_t>>();
      }
    }
    if (j.contains("model_overrides")) {
      const Json& o = j.at("model_overrides");
      if (o.contains("lstm")) {
        read_if(o["lstm"], "hidden_dim", p.overrides.lstm.hidden_dim);
        read_optimizer(o["lstm"], p.overrides.lstm.optimizer);
      }
      if (o.contains("ffnn")) {
        read_if(o["ffnn"], "hidden1", p.overrides.ffnn.hidden1);
        read_if(o["ffnn"], "hidden2", p.overrides.ffnn.hidden2);
        read_optimizer(o["ffnn"], p.overrides.ffnn.optimizer);
      }
      if (o.contains("random_forest")) {
        const Json& f = o["random_forest"];
        read_if(f, "n_trees", p.overrides.forest.n_trees);
        read_if(f, "bootstrap", p.overrides.forest.bootstrap);
        read_if(f, "max_features", p.overrides.forest.max_features);
      }
      if (o.contains("svr")) {
        const Json& s = o["svr"];
        read_if(s, "c", p.overrides.svr.c);
        read_if(s, "epsilon", p.overrides.svr.epsilon);
        read_if(s, "gamma", p.overrides.svr.gamma);
        read_if(s, "tolerance", p.overrides.svr.tolerance);
        read_if(s, "max_iterations", p.overrides.svr.max_iterations);
      }
    }
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kSchema, std::string("bad plan file: ") + e.what());
  }
}

std::string plan_to_json(const ExperimentPlan& p) {
  Json j;
  j["kind"] = to_string(p.kind);
  j["t_lags"] = p.t_lags;
  j["interval_days"] = p.interval_days;
  j["features"] = features_json(p.features);
  if (p.kind == ExperimentKind::kLagSweep) j["t_values"] = p.sweep_values;
  if (p.kind == ExperimentKind::kIntervalSweep) j["l_values"] = p.sweep_values;
  if (p.kind == ExperimentKind::kFeatureAblation) {
    Json sets = Json::array();
    for (const auto& s : p.feature_sets) sets.push_back(features_json(s));
    j["feature_sets"] = std::move(sets);
  }
  Json models = Json::array();
  for (ModelKind m : p.models) models.push_back(to_string(m));
  j["models"] = std::move(models);
  j["seeds"] = p.seeds;
  Json lstm = optimizer_json(p.overrides.lstm.optimizer);
  lstm["hidden_dim"] = p.overrides.lstm.hidden_dim;
  Json ffnn = optimizer_json(p.overrides.ffnn.optimizer);
  ffnn["hidden1"] = p.overrides.ffnn.hidden1;
  ffnn["hidden2"] = p.overrides.ffnn.hidden2;
  const ForestConfig& f = p.overrides.forest;
  const SvrConfig& s = p.overrides.svr;
  j["model_overrides"] = Json{
      {"lstm", lstm},
      {"ffnn", ffnn},
      {"random_forest", {{"n_trees", f.n_trees}, {"bootstrap", f.bootstrap}, {"max_features", f.max_features}}},
      {"svr", {{"c", s.c}, {"epsilon", s.epsilon}, {"gamma", s.gamma}, {"tolerance", s.tolerance},
               {"max_iterations", s.max_iterations}}}};
  return j.dump(2) + "\n";
}

Corpus build_corpus(std::span<const SensorRecord> records, SegmentationConfig config,
                    std::size_t max_segments) {
  if (records.empty()) throw Error(ErrorKind::kInvalidInput, "trace has no records");
  const RoutePoints route = collect_route_points(records);
  if (max_segments > 0) config.k_initial = std::max(config.k_initial, max_segments);
  const SegmentAssignment assignment = select_k(route.points, route.statuses, config);
  const std::vector<SegmentModel> segments =
      aggregate_daily(records, route, assignment, config.earth_radius_m);
  const std::size_t keep = max_segments == 0 ? segments.size() : std::min(max_segments, segments.size());
  Corpus corpus;
  for (std::size_t s = 0; s < keep; ++s) {
    corpus.segment_ids.push_back(segments[s].id);
    corpus.series.push_back(series_from_segment(segments[s]));
  }
  return corpus;
}

CellResult run_cell(const ExperimentPlan& plan, const Corpus& corpus, const CellKey& key,
                    SavedModel* model_out) {
  CellResult cell;
  cell.key = key;
  try {
    const std::uint64_t rep_seed = plan.seeds.at(key.seed_index);
    const std::size_t segment_id = corpus.segment_ids.at(key.segment);
    const ModelKind model = plan.models.at(key.model_index);
    const WindowConfig window = plan.window(key.variant);

    const WindowedDataset ds =
        split(build_windows(corpus.series.at(key.segment), window), derive_seed(rep_seed, segment_id));
    const SplitIndices& parts = ds.require_split();
    const SampleSet train_raw = ds.subset(parts.train);
    const SampleSet validate_raw = ds.subset(parts.validate);
    const SampleSet test_raw = ds.subset(parts.test);
    cell.n_train = train_raw.size();
    cell.n_validate = validate_raw.size();
    cell.n_test = test_raw.size();

    const Scaler scaler = Scaler::fit(train_raw);
    const SampleSet train_norm = scaler.transform(train_raw);
    const SampleSet validate_norm = scaler.transform(validate_raw);
    cell.input_fingerprint = chain_fingerprint({&train_norm, &validate_norm, &test_raw});

    const std::uint64_t model_seed =
        derive_seed(rep_seed, segment_id, static_cast<std::uint64_t>(model));
    SavedModel saved;
    saved.window = window;
    saved.scaler = scaler;
    saved.seed = model_seed;
    std::vector<double> predicted;
    switch (model) {
      case ModelKind::kLstm: {
        OptimizerConfig opt = plan.overrides.lstm.optimizer;
        opt.seed = model_seed;
        LstmTrainResult r = train(init_params(window.width(), plan.overrides.lstm.hidden_dim, model_seed),
                                  train_norm, validate_norm, opt);
        predicted = predict(r.params, scaler, test_raw);
        saved.body = std::move(r.params);
        break;
      }
      case ModelKind::kFfnn: {
        OptimizerConfig opt = plan.overrides.ffnn.optimizer;
        opt.seed = model_seed;
        FfnnTrainResult r = ffnn_train(ffnn_init(train_norm.sample_stride(), plan.overrides.ffnn.hidden1,
                                                 plan.overrides.ffnn.hidden2, model_seed),
                                       train_norm, validate_norm, opt);
        predicted = ffnn_predict(r.params, scaler, test_raw);
        saved.body = std::move(r.params);
        break;
      }
      case ModelKind::kForest: {
        ForestConfig config = plan.overrides.forest;
        config.seed = model_seed;
        ForestModel forest = rf_train(train_norm, config);
        predicted = rf_predict(forest, scaler, test_raw);
        saved.body = std::move(forest);
        break;
      }
      case ModelKind::kSvr:
      {
        SvrModel svr = svr_train(train_norm, plan.overrides.svr);
        predicted = svr_predict(svr, scaler, test_raw);
        saved.body = std::move(svr);
        break;
      }
      case ModelKind::kPersistence:
        predicted = persistence_predict(test_raw, window);
        saved.body = PersistenceModel{};
        break;
    }
    cell.metrics = compute_metrics(test_raw.targets, predicted);
    if (model_out != nullptr) *model_out = std::move(saved);
  } catch (const std::exception& e) {
    cell.error = e.what();
    if (cell.error.empty()) cell.error = "unknown failure";
  }
  return cell;
}

ExperimentResult run_experiment(const ExperimentPlan& plan, const Corpus& corpus, std::size_t workers) {
  plan.validate();
  if (corpus.size() == 0) throw Error(ErrorKind::kInvalidInput, "corpus has no segments");
  ExperimentResult result;
  result.plan = plan;
  result.segment_ids = corpus.segment_ids;

  std::vector<CellKey> keys;
  for (std::size_t s = 0; s < plan.seeds.size(); ++s) {
    for (std::size_t v = 0; v < plan.variant_count(); ++v) {
      for (std::size_t m = 0; m < plan.models.size(); ++m) {
        for (std::size_t g = 0; g < corpus.size(); ++g) keys.push_back({s, v, m, g});
      }
    }
  }
  result.cells.resize(keys.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < keys.size(); i = next++) {
      result.cells[i] = run_cell(plan, corpus, keys[i]);
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(workers, 1, keys.size());
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  summarize(result);
  return result;
}

namespace {

ExperimentResult run_kind(ExperimentPlan plan, ExperimentKind kind, const Corpus& corpus,
                          std::size_t workers) {
  if (plan.kind != kind) {
    throw Error(ErrorKind::kInvalidInput, "plan kind is " + std::string(to_string(plan.kind)) +
                                              ", expected " + std::string(to_string(kind)));
  }
  return run_experiment(plan, corpus, workers);
}

}  // namespace

ExperimentResult run_model_comparison(ExperimentPlan plan, const Corpus& corpus, std::size_t workers) {
  if (plan.features != std::vector<Feature>{Feature::kFriction}) {
    throw Error(ErrorKind::kInvalidInput, "model comparison uses friction only");
  }
  return run_kind(std::move(plan), ExperimentKind::kModelComparison, corpus, workers);
}

ExperimentResult run_lag_sweep(ExperimentPlan plan, const Corpus& corpus, std::size_t workers) {
  if (plan.interval_days != 1) throw Error(ErrorKind::kInvalidInput, "lag sweep uses a 1-day interval");
  return run_kind(std::move(plan), ExperimentKind::kLagSweep, corpus, workers);
}

ExperimentResult run_interval_sweep(ExperimentPlan plan, const Corpus& corpus, std::size_t workers) {
  return run_kind(std::move(plan), ExperimentKind::kIntervalSweep, corpus, workers);
}

ExperimentResult run_feature_ablation(ExperimentPlan plan, const Corpus& corpus, std::size_t workers) {
  return run_kind(std::move(plan), ExperimentKind::kFeatureAblation, corpus, workers);
}

std::size_t ExperimentResult::failed_cells() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const CellResult& c) { return !c.ok(); }));
}

const CellResult& ExperimentResult::cell(const CellKey& key) const {
  const std::size_t n_seg = segment_ids.size();
  const std::size_t n_mod = plan.models.size();
  const std::size_t n_var = plan.variant_count();
  const std::size_t i = ((key.seed_index * n_var + key.variant) * n_mod + key.model_index) * n_seg + key.segment;
  return cells.at(i);
}

const AggregateRow& ExperimentResult::aggregate(std::size_t variant, ModelKind model) const {
  for (const AggregateRow& row : aggregates) {
    if (row.variant == variant && row.model == model) return row;
  }
  throw Error(ErrorKind::kInvalidInput, "no aggregate for that variant and model");
}

void summarize(ExperimentResult& result) {
  const ExperimentPlan& plan = result.plan;
  const std::size_t n_seg = result.segment_ids.size();
  result.aggregates.clear();
  result.percentiles.clear();
  for (std::size_t v = 0; v < plan.variant_count(); ++v) {
    for (std::size_t m = 0; m < plan.models.size(); ++m) {
      AggregateRow row;
      row.variant = v;
      row.model = plan.models[m];
      std::vector<MetricsReport> per_seed;
      // Seed-averaged metrics per segment, for the percentile rows.
      std::vector<std::vector<MetricsReport>> per_segment(n_seg);
      for (std::size_t s = 0; s < plan.seeds.size(); ++s) {
        std::vector<MetricsReport> reports;
        for (std::size_t g = 0; g < n_seg; ++g) {
          const CellResult& c = result.cell({s, v, m, g});
          if (!c.ok()) {
            ++row.failed_cells;
            continue;
          }
          reports.push_back(*c.metrics);
          per_segment[g].push_back(*c.metrics);
        }
        if (!reports.empty()) per_seed.push_back(average_over_segments(reports));
      }
      if (!per_seed.empty()) row.metrics = average_over_segments(per_seed);
      result.aggregates.push_back(row);

      if (plan.kind != ExperimentKind::kIntervalSweep) continue;
      std::vector<double> mae, mse, mape;
      for (const auto& reports : per_segment) {
        if (reports.empty()) continue;
        const MetricsReport mean = average_over_segments(reports);
        mae.push_back(mean.mae);
        mse.push_back(mean.mse);
        if (mean.mape) mape.push_back(*mean.mape);
      }
      if (mae.empty()) continue;
      PercentileRow pr;
      pr.variant = v;
      pr.model = plan.models[m];
      pr.mae = percentile_summary(mae);
      pr.mse = percentile_summary(mse);
      if (!mape.empty()) pr.mape = percentile_summary(mape);
      result.percentiles.push_back(std::move(pr));
    }
  }
}

}  // namespace roadfriction
