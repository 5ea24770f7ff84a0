// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/cli.hpp"

#include <charconv>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "roadfriction/error.hpp"
#include "roadfriction/experiments.hpp"
#include "roadfriction/ingest.hpp"
#include "roadfriction/io.hpp"
#include "roadfriction/synth.hpp"

namespace roadfriction {

namespace {

namespace fs = std::filesystem;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/// "1..10", "3", or "1,2,5".
std::vector<std::size_t> parse_range(const std::string& text) {
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) {
      throw CLI::ValidationError("range", "bad value '" + text + "'");
    }
    return v;
  };
  std::vector<std::size_t> out;
  if (auto dots = text.find(".."); dots != std::string::npos) {
    const std::size_t lo = number(std::string_view(text).substr(0, dots));
    const std::size_t hi = number(std::string_view(text).substr(dots + 2));
    if (lo > hi) throw CLI::ValidationError("range", "empty range '" + text + "'");
    for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::string_view rest = text;
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(number(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

void require_parent_dir(const fs::path& out) {
  const fs::path parent = out.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw Error(ErrorKind::kIo, "output directory " + parent.string() + " does not exist");
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    atomic_write(path, text);
  }
}

struct SegmentOptions {
  std::size_t k_initial = 2;
  std::size_t k_step = 1;
  std::size_t k_max = 0;
  double threshold = 0.15;
  int max_iterations = 100;
};

void add_segment_options(CLI::App* cmd, SegmentOptions& o) {
  cmd->add_option("--k-initial", o.k_initial, "First K of the ladder")->check(CLI::PositiveNumber);
  cmd->add_option("--k-step", o.k_step, "K increment")->check(CLI::PositiveNumber);
  cmd->add_option("--k-max", o.k_max, "Last K tried (0: number of distinct points)");
  cmd->add_option("--threshold", o.threshold, "Mixture-rate threshold")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--max-iterations", o.max_iterations, "K-means iteration cap")
      ->check(CLI::PositiveNumber);
}

SegmentationConfig segmentation_config(const SegmentOptions& o, std::uint64_t seed) {
  SegmentationConfig c;
  c.k_initial = o.k_initial;
  c.k_step = o.k_step;
  c.k_max = o.k_max;
  c.mixture_threshold = o.threshold;
  c.max_iterations = o.max_iterations;
  c.seed = seed;
  c.validate();
  return c;
}

// Options shared by the experiment subcommands. Flags given on the command
// line override the plan file.
struct StudyOptions {
  std::string trace;
  std::string plan_file;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t repetitions = 1;
  std::size_t segments = 20;
  std::size_t workers = 1;
  std::string t_values;
  std::string l_values;
  std::vector<std::string> feature_sets;
  std::string features;
  std::vector<std::string> models;
  std::size_t hidden = 32;
  int epochs = 500;
  double learning_rate = 1e-3;
  std::size_t batch = 32;
  int patience = 20;
  SegmentOptions segmentation;
  std::map<std::string, CLI::Option*> given;
};

void add_study_options(CLI::App* cmd, StudyOptions& o, ExperimentKind kind) {
  cmd->add_option("trace", o.trace, "Sensor trace CSV")->required();
  cmd->add_option("--out-dir,-o", o.out_dir, "Directory for table.csv, cells.csv, result.json")
      ->required();
  cmd->add_option("--plan", o.plan_file, "Plan JSON; flags override it");
  o.given["seed"] = cmd->add_option("--seed", o.seed, "Base seed for segmentation and repetitions");
  o.given["repetitions"] = cmd->add_option("--repetitions", o.repetitions,
                                           "Repetition seeds seed, seed+1, ...")
                               ->check(CLI::PositiveNumber);
  cmd->add_option("--segments", o.segments, "Segments studied, first in route order (0: all)");
  cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  o.given["t"] = cmd->add_option("--t", o.t_values,
                                 kind == ExperimentKind::kLagSweep ? "Lag counts, e.g. 1..10"
                                                                   : "Lag count");
  o.given["l"] = cmd->add_option("--l", o.l_values,
                                 kind == ExperimentKind::kIntervalSweep ? "Lag intervals, e.g. 1..10"
                                                                        : "Lag interval in days");
  if (kind == ExperimentKind::kFeatureAblation) {
    o.given["feature_sets"] = cmd->add_option("--feature-sets", o.feature_sets,
                                              "Feature sets such as friction+water_thickness");
  } else {
    o.given["features"] = cmd->add_option("--features", o.features, "Input features joined by '+'");
  }
  o.given["models"] = cmd->add_option("--models", o.models, "Models to train");
  o.given["hidden"] = cmd->add_option("--hidden", o.hidden, "LSTM hidden units")->check(CLI::PositiveNumber);
  o.given["epochs"] = cmd->add_option("--epochs", o.epochs, "Maximum epochs for LSTM and FFNN")
                          ->check(CLI::PositiveNumber);
  o.given["lr"] = cmd->add_option("--lr", o.learning_rate, "Learning rate for LSTM and FFNN");
  o.given["batch"] = cmd->add_option("--batch", o.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  o.given["patience"] = cmd->add_option("--patience", o.patience, "Early-stopping patience")
                            ->check(CLI::PositiveNumber);
  add_segment_options(cmd, o.segmentation);
}

bool was_given(const StudyOptions& o, const std::string& key) {
  auto it = o.given.find(key);
  return it != o.given.end() && it->second->count() > 0;
}

ExperimentPlan study_plan(const StudyOptions& o, ExperimentKind kind) {
  ExperimentPlan plan = o.plan_file.empty() ? default_plan(kind) : plan_from_json(read_file(o.plan_file));
  if (plan.kind != kind) {
    throw Error(ErrorKind::kInvalidInput,
                "plan kind " + std::string(to_string(plan.kind)) + " does not match the subcommand");
  }
  if (was_given(o, "seed") || was_given(o, "repetitions") || o.plan_file.empty()) {
    plan.seeds.clear();
    for (std::size_t i = 0; i < o.repetitions; ++i) plan.seeds.push_back(o.seed + i);
  }
  if (was_given(o, "t")) {
    const auto t = parse_range(o.t_values);
    if (kind == ExperimentKind::kLagSweep) {
      plan.sweep_values = t;
    } else {
      if (t.size() != 1) throw Error(ErrorKind::kInvalidInput, "--t takes a single value here");
      plan.t_lags = t[0];
    }
  }
  if (was_given(o, "l")) {
    const auto l = parse_range(o.l_values);
    if (kind == ExperimentKind::kIntervalSweep) {
      plan.sweep_values = l;
    } else {
      if (l.size() != 1) throw Error(ErrorKind::kInvalidInput, "--l takes a single value here");
      plan.interval_days = l[0];
    }
  }
  if (was_given(o, "features")) plan.features = parse_feature_list(o.features);
  if (was_given(o, "feature_sets")) {
    plan.feature_sets.clear();
    for (const std::string& s : o.feature_sets) plan.feature_sets.push_back(parse_feature_list(s));
  }
  if (was_given(o, "models")) {
    plan.models.clear();
    for (const std::string& m : o.models) plan.models.push_back(parse_model_kind(m));
  }
  for (OptimizerConfig* opt : {&plan.overrides.lstm.optimizer, &plan.overrides.ffnn.optimizer}) {
    if (was_given(o, "epochs")) opt->max_epochs = o.epochs;
    if (was_given(o, "lr")) opt->learning_rate = o.learning_rate;
    if (was_given(o, "batch")) opt->batch_size = o.batch;
    if (was_given(o, "patience")) opt->patience = o.patience;
  }
  if (was_given(o, "hidden")) plan.overrides.lstm.hidden_dim = o.hidden;
  plan.validate();
  return plan;
}

int run_study(const StudyOptions& o, ExperimentKind kind, int verbosity) {
  const ExperimentPlan plan = study_plan(o, kind);
  const auto records = parse_trace(o.trace);
  const Corpus corpus = build_corpus(records, segmentation_config(o.segmentation, o.seed), o.segments);
  if (verbosity > 0) {
    std::cerr << "running " << to_string(kind) << " over " << corpus.size() << " segments with "
              << o.workers << " workers\n";
  }
  const ExperimentResult result = run_experiment(plan, corpus, o.workers);
  emit_report(result, o.out_dir);
  std::cout << format_table_csv(result);
  if (const std::size_t failed = result.failed_cells(); failed > 0) {
    std::cerr << "error: " << failed << " of " << result.cells.size()
              << " cells failed; see cells.csv\n";
    return kExitFailure;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Road surface friction forecasting toolkit"};
  app.require_subcommand(1);
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "Progress messages on stderr (repeatable)");

  // synth
  SynthConfig synth;
  std::string synth_out, manifest_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic sensor trace");
  synth_cmd->add_option("--days", synth.n_days, "Days in the trace")->capture_default_str();
  synth_cmd->add_option("--points", synth.n_points, "Route points")->capture_default_str();
  synth_cmd->add_option("--blocks", synth.n_status_blocks, "Contiguous status blocks")
      ->capture_default_str();
  synth_cmd->add_option("--missing", synth.missing_day_prob, "Probability that a day is absent")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  synth_cmd->add_option("-o,--output", synth_out, "Trace CSV path")->required();
  synth_cmd->add_option("--manifest", manifest_out, "Ground-truth manifest JSON path");

  // segment
  std::string segment_trace, segment_out, assignment_out;
  std::uint64_t segment_seed = 0;
  SegmentOptions segment_opts;
  auto* segment_cmd = app.add_subcommand("segment", "Segment a trace and summarise the clusters");
  segment_cmd->add_option("trace", segment_trace, "Sensor trace CSV")->required();
  segment_cmd->add_option("-o,--output", segment_out, "Summary JSON path (default stdout)");
  segment_cmd->add_option("--assignments", assignment_out, "Per-point assignment CSV path");
  segment_cmd->add_option("--seed", segment_seed, "K-means seed");
  add_segment_options(segment_cmd, segment_opts);

  // train
  std::string train_trace, train_out, train_model = "lstm", train_features = "friction";
  std::size_t train_segment = 0, train_segments = 20, train_t = 7, train_l = 1;
  std::uint64_t train_seed = 0;
  ModelOverrides train_overrides;
  SegmentOptions train_seg_opts;
  auto* train_cmd = app.add_subcommand("train", "Train one model on one segment");
  train_cmd->add_option("trace", train_trace, "Sensor trace CSV")->required();
  train_cmd->add_option("--model", train_model, "lstm, ffnn, random_forest, svr or persistence")
      ->capture_default_str();
  train_cmd->add_option("--segment", train_segment, "Segment index in route order")->capture_default_str();
  train_cmd->add_option("--segments", train_segments, "Initial K for segmentation")->capture_default_str();
  train_cmd->add_option("--t", train_t, "Lag count")->capture_default_str();
  train_cmd->add_option("--l", train_l, "Lag interval in days")->capture_default_str();
  train_cmd->add_option("--features", train_features, "Input features joined by '+'")->capture_default_str();
  train_cmd->add_option("--seed", train_seed, "Seed for segmentation, split and model")->capture_default_str();
  train_cmd->add_option("--hidden", train_overrides.lstm.hidden_dim, "LSTM hidden units")->capture_default_str();
  train_cmd->add_option("--epochs", train_overrides.lstm.optimizer.max_epochs, "Maximum epochs")
      ->capture_default_str();
  train_cmd->add_option("--lr", train_overrides.lstm.optimizer.learning_rate, "Learning rate")
      ->capture_default_str();
  train_cmd->add_option("-o,--output", train_out, "Model file path")->required();
  add_segment_options(train_cmd, train_seg_opts);

  // studies
  StudyOptions compare_opts, lags_opts, interval_opts, ablate_opts;
  auto* compare_cmd = app.add_subcommand("compare", "Compare LSTM with the baselines");
  add_study_options(compare_cmd, compare_opts, ExperimentKind::kModelComparison);
  auto* lags_cmd = app.add_subcommand("sweep-lags", "Sweep the number of lags");
  add_study_options(lags_cmd, lags_opts, ExperimentKind::kLagSweep);
  auto* interval_cmd = app.add_subcommand("sweep-interval", "Sweep the interval between lags");
  add_study_options(interval_cmd, interval_opts, ExperimentKind::kIntervalSweep);
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare input feature sets");
  add_study_options(ablate_cmd, ablate_opts, ExperimentKind::kFeatureAblation);

  // report
  std::string report_in, report_out_dir;
  auto* report_cmd = app.add_subcommand("report", "Re-emit tables from a result.json");
  report_cmd->add_option("result", report_in, "result.json from a study")->required();
  report_cmd->add_option("--out-dir,-o", report_out_dir, "Write every report file here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth_cmd) {
      require_parent_dir(synth_out);
      if (!manifest_out.empty()) require_parent_dir(manifest_out);
      const auto records = generate_trace(synth);
      write_trace(records, synth_out);
      if (!manifest_out.empty()) atomic_write(manifest_out, manifest_to_json(ground_truth_manifest(synth)));
      if (verbosity > 0) std::cerr << "wrote " << records.size() << " records\n";
      return 0;
    }
    if (*segment_cmd) {
      if (!segment_out.empty() && segment_out != "-") require_parent_dir(segment_out);
      if (!assignment_out.empty()) require_parent_dir(assignment_out);
      const SegmentationConfig config = segmentation_config(segment_opts, segment_seed);
      const auto records = parse_trace(segment_trace);
      const RoutePoints route = collect_route_points(records);
      const SegmentAssignment assignment = select_k(route.points, route.statuses, config);
      if (!assignment_out.empty()) atomic_write(assignment_out, format_assignment_csv(route, assignment));
      write_output(segment_out, format_segmentation_summary(route, assignment, config.earth_radius_m));
      return 0;
    }
    if (*train_cmd) {
      require_parent_dir(train_out);
      ExperimentPlan plan = default_plan(ExperimentKind::kModelComparison);
      plan.models = {parse_model_kind(train_model)};
      plan.t_lags = train_t;
      plan.interval_days = train_l;
      plan.features = parse_feature_list(train_features);
      plan.seeds = {train_seed};
      plan.overrides = train_overrides;
      plan.validate();
      const auto records = parse_trace(train_trace);
      const Corpus corpus = build_corpus(records, segmentation_config(train_seg_opts, train_seed), train_segments);
      if (train_segment >= corpus.size()) {
        throw Error(ErrorKind::kInvalidInput, "segment index " + std::to_string(train_segment) +
                                                  " is out of range; the corpus has " +
                                                  std::to_string(corpus.size()));
      }
      SavedModel model;
      const CellResult cell = run_cell(plan, corpus, {0, 0, 0, train_segment}, &model);
      if (!cell.ok()) throw Error(ErrorKind::kInvalidInput, "training failed: " + cell.error);
      save_model(model, train_out);
      const MetricsReport& r = *cell.metrics;
      nlohmann::ordered_json j{{"model", train_model},
                               {"segment_id", corpus.segment_ids[train_segment]},
                               {"t_lags", plan.t_lags},
                               {"interval_days", plan.interval_days},
                               {"features", join_features(plan.features)},
                               {"mae", r.mae},
                               {"mse", r.mse},
                               {"mape_pct", nullptr},
                               {"n", r.n},
                               {"n_excluded", r.n_excluded}};
      if (r.mape) j["mape_pct"] = *r.mape;
      std::cout << j.dump(2) << '\n';
      return 0;
    }
    for (auto [cmd, opts, kind] :
         {std::tuple{compare_cmd, &compare_opts, ExperimentKind::kModelComparison},
          std::tuple{lags_cmd, &lags_opts, ExperimentKind::kLagSweep},
          std::tuple{interval_cmd, &interval_opts, ExperimentKind::kIntervalSweep},
          std::tuple{ablate_cmd, &ablate_opts, ExperimentKind::kFeatureAblation}}) {
      if (*cmd) return run_study(*opts, kind, verbosity);
    }
    if (*report_cmd) {
      const ExperimentResult result = result_from_json(read_file(report_in));
      if (!report_out_dir.empty()) emit_report(result, report_out_dir);
      std::cout << format_table_csv(result);
      return result.failed_cells() > 0 ? kExitFailure : 0;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace roadfriction
