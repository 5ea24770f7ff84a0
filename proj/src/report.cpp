// SPDX-License-Identifier: Apache-2.0
// Report tables and the result JSON for experiments.
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "roadfriction/error.hpp"
#include "roadfriction/experiments.hpp"
#include "roadfriction/io.hpp"

namespace roadfriction {

namespace {

using Json = nlohmann::ordered_json;

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string metric_cell(const MetricsReport& r, std::string_view metric) {
  if (metric == "mae") return fixed(r.mae, 6);
  if (metric == "mse") return fixed(r.mse, 6);
  return r.mape ? fixed(*r.mape, 4) : "NA";
}

constexpr std::string_view kMetrics[] = {"mae", "mse", "mape_pct"};

Json report_json(const ExperimentPlan& plan, std::size_t variant, ModelKind model,
                 const Json& segment, const MetricsReport& r) {
  const WindowConfig w = plan.window(variant);
  Json j{{"model", to_string(model)},
         {"segment_id", segment},
         {"t_lags", w.t_lags},
         {"interval_days", w.interval_days},
         {"features", join_features(w.features)},
         {"mae", r.mae},
         {"mse", r.mse},
         {"mape_pct", nullptr},
         {"n", r.n},
         {"n_excluded", r.n_excluded}};
  if (r.mape) j["mape_pct"] = *r.mape;
  return j;
}

Json summary_json(const PercentileSummary& s) {
  Json values = Json::object();
  for (std::size_t i = 0; i < s.percentiles.size(); ++i) {
    values["p" + fixed(s.percentiles[i], 0)] = s.values[i];
  }
  return Json{{"min", s.min},       {"whisker_low", s.whisker_low}, {"q1", s.q1},
              {"median", s.median}, {"q3", s.q3},                   {"whisker_high", s.whisker_high},
              {"max", s.max},       {"percentiles", values}};
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string format_table_csv(const ExperimentResult& result) {
  const ExperimentPlan& plan = result.plan;
  const bool many_models = plan.models.size() > 1;
  std::ostringstream out;
  switch (plan.kind) {
    case ExperimentKind::kModelComparison:
      out << "model,mae,mse,mape_pct\n";
      for (ModelKind m : plan.models) {
        const MetricsReport& r = result.aggregate(0, m).metrics;
        out << to_string(m) << ',' << metric_cell(r, "mae") << ',' << metric_cell(r, "mse") << ','
            << metric_cell(r, "mape_pct") << '\n';
      }
      break;
    case ExperimentKind::kLagSweep:
    case ExperimentKind::kIntervalSweep:
      out << "metric";
      for (std::size_t v = 0; v < plan.variant_count(); ++v) out << ',' << plan.variant_label(v);
      out << '\n';
      for (ModelKind m : plan.models) {
        for (std::string_view metric : kMetrics) {
          if (many_models) out << to_string(m) << '.';
          out << metric;
          for (std::size_t v = 0; v < plan.variant_count(); ++v) {
            out << ',' << metric_cell(result.aggregate(v, m).metrics, metric);
          }
          out << '\n';
        }
      }
      break;
    case ExperimentKind::kFeatureAblation:
      out << (many_models ? "model,features,mae,mse,mape_pct\n" : "features,mae,mse,mape_pct\n");
      for (ModelKind m : plan.models) {
        for (std::size_t v = 0; v < plan.variant_count(); ++v) {
          const MetricsReport& r = result.aggregate(v, m).metrics;
          if (many_models) out << to_string(m) << ',';
          out << plan.variant_label(v) << ',' << metric_cell(r, "mae") << ',' << metric_cell(r, "mse")
              << ',' << metric_cell(r, "mape_pct") << '\n';
        }
      }
      break;
  }
  return out.str();
}

std::string format_cells_csv(const ExperimentResult& result) {
  const ExperimentPlan& plan = result.plan;
  std::ostringstream out;
  out << "seed,variant,model,segment_id,n_train,n_validate,n_test,n,n_excluded,mae,mse,mape_pct,status,"
         "error\n";
  for (const CellResult& c : result.cells) {
    out << plan.seeds[c.key.seed_index] << ',' << plan.variant_label(c.key.variant) << ','
        << to_string(plan.models[c.key.model_index]) << ',' << result.segment_ids[c.key.segment] << ','
        << c.n_train << ',' << c.n_validate << ',' << c.n_test << ',';
    if (c.ok()) {
      const MetricsReport& r = *c.metrics;
      out << r.n << ',' << r.n_excluded << ',' << metric_cell(r, "mae") << ',' << metric_cell(r, "mse")
          << ',' << metric_cell(r, "mape_pct") << ",ok,\n";
    } else {
      std::string msg = c.error;
      for (char& ch : msg) {
        if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
      }
      out << ",,,,,failed," << msg << '\n';
    }
  }
  return out.str();
}

std::string format_percentiles_csv(const ExperimentResult& result) {
  const ExperimentPlan& plan = result.plan;
  std::ostringstream out;
  out << "model,variant,metric,min,whisker_low,q1,median,q3,whisker_high,max\n";
  for (const PercentileRow& row : result.percentiles) {
    auto line = [&](std::string_view metric, const PercentileSummary& s) {
      out << to_string(row.model) << ',' << plan.variant_label(row.variant) << ',' << metric;
      for (double v : {s.min, s.whisker_low, s.q1, s.median, s.q3, s.whisker_high, s.max}) {
        out << ',' << fixed(v, 6);
      }
      out << '\n';
    };
    line("mae", row.mae);
    line("mse", row.mse);
    if (row.mape) line("mape_pct", *row.mape);
  }
  return out.str();
}

std::string result_to_json(const ExperimentResult& result) {
  const ExperimentPlan& plan = result.plan;
  Json j;
  j["plan"] = Json::parse(plan_to_json(plan));
  j["segment_ids"] = result.segment_ids;
  j["failed_cells"] = result.failed_cells();

  Json aggregates = Json::array();
  for (const AggregateRow& row : result.aggregates) {
    Json r = report_json(plan, row.variant, row.model, "ALL", row.metrics);
    r["failed_cells"] = row.failed_cells;
    aggregates.push_back(std::move(r));
  }
  j["aggregates"] = std::move(aggregates);

  // Per-segment detail, averaged over repetition seeds.
  Json segments = Json::array();
  for (std::size_t v = 0; v < plan.variant_count(); ++v) {
    for (std::size_t m = 0; m < plan.models.size(); ++m) {
      for (std::size_t g = 0; g < result.segment_ids.size(); ++g) {
        std::vector<MetricsReport> reports;
        for (std::size_t s = 0; s < plan.seeds.size(); ++s) {
          const CellResult& c = result.cell({s, v, m, g});
          if (c.ok()) reports.push_back(*c.metrics);
        }
        if (reports.empty()) continue;
        segments.push_back(report_json(plan, v, plan.models[m], result.segment_ids[g],
                                       average_over_segments(reports)));
      }
    }
  }
  j["segments"] = std::move(segments);

  if (!result.percentiles.empty()) {
    Json rows = Json::array();
    for (const PercentileRow& row : result.percentiles) {
      const WindowConfig w = plan.window(row.variant);
      Json r{{"model", to_string(row.model)},
             {"t_lags", w.t_lags},
             {"interval_days", w.interval_days},
             {"mae", summary_json(row.mae)},
             {"mse", summary_json(row.mse)},
             {"mape_pct", nullptr}};
      if (row.mape) r["mape_pct"] = summary_json(*row.mape);
      rows.push_back(std::move(r));
    }
    j["percentiles"] = std::move(rows);
  }

  Json cells = Json::array();
  for (const CellResult& c : result.cells) {
    Json r{{"seed", plan.seeds[c.key.seed_index]},
           {"variant", c.key.variant},
           {"model", to_string(plan.models[c.key.model_index])},
           {"segment_id", result.segment_ids[c.key.segment]},
           {"n_train", c.n_train},
           {"n_validate", c.n_validate},
           {"n_test", c.n_test},
           {"input_fingerprint", hex64(c.input_fingerprint)}};
    if (c.ok()) {
      r["mae"] = c.metrics->mae;
      r["mse"] = c.metrics->mse;
      r["mape_pct"] = c.metrics->mape ? Json(*c.metrics->mape) : Json(nullptr);
      r["n"] = c.metrics->n;
      r["n_excluded"] = c.metrics->n_excluded;
    } else {
      r["error"] = c.error;
    }
    cells.push_back(std::move(r));
  }
  j["cells"] = std::move(cells);
  return j.dump(1) + "\n";
}

ExperimentResult result_from_json(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    ExperimentResult result;
    result.plan = plan_from_json(j.at("plan").dump());
    result.segment_ids = j.at("segment_ids").get<std::vector<std::size_t>>();
    const ExperimentPlan& plan = result.plan;
    const std::size_t expected =
        plan.seeds.size() * plan.variant_count() * plan.models.size() * result.segment_ids.size();
    const Json& cells = j.at("cells");
    if (cells.size() != expected) throw Error(ErrorKind::kSchema, "result has an incomplete cell grid");
    result.cells.resize(expected);
    std::size_t i = 0;
    for (std::size_t s = 0; s < plan.seeds.size(); ++s) {
      for (std::size_t v = 0; v < plan.variant_count(); ++v) {
        for (std::size_t m = 0; m < plan.models.size(); ++m) {
          for (std::size_t g = 0; g < result.segment_ids.size(); ++g, ++i) {
            const Json& r = cells[i];
            if (r.at("seed").get<std::uint64_t>() != plan.seeds[s] ||
                r.at("variant").get<std::size_t>() != v ||
                parse_model_kind(r.at("model").get<std::string>()) != plan.models[m] ||
                r.at("segment_id").get<std::size_t>() != result.segment_ids[g]) {
              throw Error(ErrorKind::kSchema, "result cells are out of order");
            }
            CellResult& c = result.cells[i];
            c.key = {s, v, m, g};
            c.n_train = r.at("n_train").get<std::size_t>();
            c.n_validate = r.at("n_validate").get<std::size_t>();
            c.n_test = r.at("n_test").get<std::size_t>();
            c.input_fingerprint = std::stoull(r.at("input_fingerprint").get<std::string>(), nullptr, 16);
            if (r.contains("error")) {
              c.error = r.at("error").get<std::string>();
              continue;
            }
            MetricsReport rep;
            rep.mae = r.at("mae").get<double>();
            rep.mse = r.at("mse").get<double>();
            if (!r.at("mape_pct").is_null()) rep.mape = r.at("mape_pct").get<double>();
            rep.n = r.at("n").get<std::size_t>();
            rep.n_excluded = r.at("n_excluded").get<std::size_t>();
            c.metrics = rep;
          }
        }
      }
    }
    summarize(result);
    return result;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kSchema, std::string("bad result file: ") + e.what());
  }
}

void emit_report(const ExperimentResult& result, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + out_dir.string() + ": " + ec.message());
  atomic_write(out_dir / "table.csv", format_table_csv(result));
  atomic_write(out_dir / "cells.csv", format_cells_csv(result));
  atomic_write(out_dir / "result.json", result_to_json(result));
  if (result.plan.kind == ExperimentKind::kIntervalSweep) {
    atomic_write(out_dir / "percentiles.csv", format_percentiles_csv(result));
  }
}

}  // namespace roadfriction
