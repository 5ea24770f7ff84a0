// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks. `acceptance` runs every criterion; `acceptance N` runs
// one. Each prints a single PASS/FAIL line with its measurements and time.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "oracles.hpp"
#include "roadfriction/dataset.hpp"
#include "roadfriction/error.hpp"
#include "roadfriction/experiments.hpp"
#include "roadfriction/ffnn.hpp"
#include "roadfriction/io.hpp"
#include "roadfriction/lstm.hpp"
#include "roadfriction/metrics.hpp"
#include "roadfriction/svr.hpp"
#include "roadfriction/synth.hpp"

using namespace roadfriction;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SampleSet random_set(std::size_t n, std::size_t t, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SampleSet s{t, p, {}, {}};
  for (std::size_t i = 0; i < n * t * p; ++i) s.inputs.push_back(u(gen));
  for (std::size_t i = 0; i < n; ++i) s.targets.push_back(u(gen));
  return s;
}

// Relative errors are taken against max(|a|, |b|, floor): gradients of order
// 1e-6 and below are at the finite-difference noise level of ~eps^2 f''' and
// are compared absolutely.
constexpr double kGradFloor = 1e-6;

Outcome gradients() {
  double worst_lstm = 0, worst_ffnn = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (std::size_t hidden : {2u, 5u}) {
      for (std::size_t t : {1u, 3u, 7u}) {
        std::mt19937_64 gen(seed * 100 + hidden * 10 + t);
        std::uniform_real_distribution<double> u(-0.8, 0.8);
        const SampleSet batch = random_set(4, t, 2, 7000 + seed);

        LstmParams lp(2, hidden);
        for (double& v : lp.data()) v = u(gen);
        const auto lg = bptt_gradients(lp, batch);
        const auto ln = oracle::numeric_gradient(
            [&](const std::vector<double>& x) {
              LstmParams q = lp;
              q.data() = x;
              return mse_loss(q, batch);
            },
            lp.data(), 1e-5);
        for (std::size_t i = 0; i < ln.size(); ++i)
          worst_lstm = std::max(worst_lstm, oracle::relative_error(lg.grad.data()[i], ln[i], kGradFloor));

        FfnnParams fp(2 * t, hidden, hidden);
        for (double& v : fp.data()) v = u(gen);
        const auto fg = ffnn_gradients(fp, batch);
        const auto fnum = oracle::numeric_gradient(
            [&](const std::vector<double>& x) {
              FfnnParams q = fp;
              q.data() = x;
              return ffnn_mse(q, batch);
            },
            fp.data(), 1e-5);
        for (std::size_t i = 0; i < fnum.size(); ++i)
          worst_ffnn = std::max(worst_ffnn, oracle::relative_error(fg.grad.data()[i], fnum[i], kGradFloor));
      }
    }
  }
  return {worst_lstm < 1e-5 && worst_ffnn < 1e-5,
          fmt("max rel err lstm %.2e ffnn %.2e", worst_lstm, worst_ffnn)};
}

Outcome cell_oracle() {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t p = 1 + trial % 4, h = 1 + trial % 6;
    LstmParams w(p, h);
    for (double& v : w.data()) v = u(gen);
    std::vector<double> x(p), hp(h), cp(h);
    for (double& v : x) v = u(gen);
    for (double& v : hp) v = u(gen) / 2;
    for (double& v : cp) v = u(gen);
    const auto got = cell_forward(w, x, Eigen::Map<Eigen::VectorXd>(hp.data(), static_cast<long>(h)),
                                  Eigen::Map<Eigen::VectorXd>(cp.data(), static_cast<long>(h)));
    for (std::size_t r = 0; r < h; ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      auto pre = [&](Gate g) {
        double a = w.b(g)(row);
        for (std::size_t k = 0; k < p; ++k) a += w.w(g)(row, static_cast<Eigen::Index>(k)) * x[k];
        for (std::size_t k = 0; k < h; ++k) a += w.u(g)(row, static_cast<Eigen::Index>(k)) * hp[k];
        return a;
      };
      const double f = oracle::sigmoid(pre(Gate::kForget));
      const double i = oracle::sigmoid(pre(Gate::kInput));
      const double o = oracle::sigmoid(pre(Gate::kOutput));
      const double ct = std::tanh(pre(Gate::kCandidate));
      const double c = f * cp[r] + i * ct;
      const double hv = o * std::tanh(c);
      for (double d : {got.f(row) - f, got.i(row) - i, got.o(row) - o, got.c_tilde(row) - ct,
                       got.c(row) - c, got.h(row) - hv})
        worst = std::max(worst, std::abs(d));
    }
  }
  return {worst < 1e-14, fmt("max abs diff %.2e over 1000 inputs", worst)};
}

Outcome windowing() {
  std::size_t checked = 0, wrong = 0;
  for (std::size_t d = 1; d <= 60; ++d) {
    const std::vector<DayRow> rows(d);
    for (std::size_t t = 1; t <= 10; ++t) {
      for (std::size_t l = 1; l <= 10; ++l) {
        ++checked;
        try {
          const auto ds = build_windows(rows, {t, l, {Feature::kFriction}});
          if (d <= t * l || ds.size() != d - t * l) ++wrong;
        } catch (const Error& e) {
          if (d > t * l || e.kind() != ErrorKind::kInsufficientData) ++wrong;
        }
      }
    }
  }
  const std::vector<DayRow> year(446);
  const auto ds = split(build_windows(year, {7, 1, {Feature::kFriction}}), 0);
  const auto& s = ds.require_split();
  const bool paper = ds.size() == 439 && s.train.size() == 307 && s.validate.size() == 87 &&
                     s.test.size() == 45;
  return {wrong == 0 && paper, fmt("%zu/%zu (D,t,L) cases ok; D=446 t=7 L=1 -> N=%zu split %zu/%zu/%zu",
                                   checked - wrong, checked, ds.size(), s.train.size(),
                                   s.validate.size(), s.test.size())};
}

Outcome metrics_oracle() {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::vector<double> y(10000), p(10000), ys(10000), ps(10000);
  const double c = 2.75;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = u(gen);
    p[i] = u(gen);
    ys[i] = c * y[i];
    ps[i] = c * p[i];
  }
  const auto r = compute_metrics(y, p), rs = compute_metrics(ys, ps);
  const double d = std::max({std::abs(r.mae - oracle::mae(y, p)), std::abs(r.mse - oracle::mse(y, p)),
                             std::abs(*r.mape - oracle::mape(y, p)) / 100});
  const double scale = std::max({std::abs(rs.mae - c * r.mae), std::abs(rs.mse - c * c * r.mse),
                                 std::abs(*rs.mape - *r.mape) / 100});
  return {d < 1e-12 && scale < 1e-12, fmt("oracle diff %.2e, scale diff %.2e", d, scale)};
}

Outcome segmentation() {
  SynthConfig cfg;
  cfg.seed = 7;
  const auto trace = generate_trace(cfg);
  const RoutePoints route = collect_route_points(trace);
  const SegmentAssignment a = select_k(route.points, route.statuses, SegmentationConfig{});
  const auto rates = mixture_rates(a.labels, route.statuses, a.k);
  const double max_rate = *std::max_element(rates.begin(), rates.end());
  std::size_t not_nearest = 0;
  for (std::size_t i = 0; i < route.size(); ++i) {
    const double own = haversine_distance(route.points[i], a.centroids[a.labels[i]]);
    for (const auto& c : a.centroids)
      if (haversine_distance(route.points[i], c) < own - 1e-9) {
        ++not_nearest;
        break;
      }
  }
  const GroundTruthManifest m = ground_truth_manifest(cfg);
  long worst = 0;
  for (std::size_t b = 1; b < m.blocks.size(); ++b) {
    long best = 1'000'000;
    for (std::size_t p = 1; p < route.size(); ++p)
      if (a.labels[p] != a.labels[p - 1])
        best = std::min(best, std::abs(static_cast<long>(p) - static_cast<long>(m.blocks[b].first_point)));
    worst = std::max(worst, best);
  }
  return {max_rate < 0.15 && not_nearest == 0 && worst <= 2,
          fmt("K=%zu max mixture %.3f, %zu points off-centroid, worst boundary offset %ld", a.k, max_rate,
              not_nearest, worst)};
}

// Shared by the learning criteria: 20 segments of a default-size trace,
// repetition seeds 0..4.
const Corpus& study_corpus() {
  static const Corpus c = [] {
    SynthConfig cfg;
    cfg.seed = 7;
    return build_corpus(generate_trace(cfg), SegmentationConfig{}, 20);
  }();
  return c;
}

ExperimentPlan study_plan(ExperimentKind kind) {
  ExperimentPlan p = default_plan(kind);
  p.seeds = {0, 1, 2, 3, 4};
  p.overrides.lstm.hidden_dim = 16;
  p.overrides.lstm.optimizer.max_epochs = 100;
  return p;
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

Outcome learning() {
  ExperimentPlan plan = study_plan(ExperimentKind::kModelComparison);
  plan.models = {ModelKind::kLstm, ModelKind::kPersistence};
  const auto r = run_model_comparison(plan, study_corpus(), workers());
  const double lstm = *r.aggregate(0, ModelKind::kLstm).metrics.mape;
  const double naive = *r.aggregate(0, ModelKind::kPersistence).metrics.mape;
  const double gain = (naive - lstm) / naive;
  return {r.failed_cells() == 0 && lstm < naive && gain >= 0.20,
          fmt("%zu segments x 5 seeds: LSTM MAPE %.2f%% vs persistence %.2f%% (%.1f%% better)",
              study_corpus().size(), lstm, naive, 100 * gain)};
}

Outcome horizon() {
  const auto r = run_interval_sweep(study_plan(ExperimentKind::kIntervalSweep), study_corpus(), workers());
  const double at1 = *r.aggregate(0, ModelKind::kLstm).metrics.mape;
  double far = 0;
  for (std::size_t v = 4; v < 10; ++v) far += *r.aggregate(v, ModelKind::kLstm).metrics.mape;
  far /= 6;
  return {r.failed_cells() == 0 && far > at1, fmt("MAPE at L=1 %.2f%%, mean over L=5..10 %.2f%%", at1, far)};
}

Outcome ablation() {
  ExperimentPlan plan = study_plan(ExperimentKind::kFeatureAblation);
  plan.feature_sets = {{Feature::kFriction}, {Feature::kFriction, Feature::kWaterThickness}};
  const auto r = run_feature_ablation(plan, study_corpus(), workers());
  const double alone = r.aggregate(0, ModelKind::kLstm).metrics.mse;
  const double water = r.aggregate(1, ModelKind::kLstm).metrics.mse;
  return {r.failed_cells() == 0 && water < alone,
          fmt("MSE friction %.5f vs friction+water %.5f", alone, water)};
}

Outcome svr_oracle() {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SampleSet s = random_set(30, 3, 1, 400 + seed);
    const Eigen::MatrixXd k = kernel_matrix(s, 1.0 / 3.0);
    const auto sol = svr_solve(k, s.targets, 1.0, 0.05, 1e-8, 0);
    const double want = oracle::svr_dual_barrier(k, s.targets, 1.0, 0.05);
    worst = std::max(worst, std::abs(sol.objective - want));
  }
  return {worst < 1e-3, fmt("max |objective - oracle| %.2e over 5 problems of 30 samples", worst)};
}

Outcome determinism() {
  oracle::TempDir dir("acceptance_cli");
  const std::string cli = ROADFRICTION_CLI;
  auto sh = [&](const std::string& args) {
    return std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
  };
  const std::string trace = (dir / "trace.csv").string();
  if (sh("synth --days 120 --points 60 --seed 11 -o " + trace) != 0) return {false, "synth failed"};
  const std::string common = " " + trace + " --segments 4 --repetitions 2 --seed 3 --hidden 6 --epochs 15";
  std::size_t files = 0, mismatched = 0;
  for (const std::string cmd : {"compare", "sweep-interval --l 1..3", "ablate"}) {
    const std::string tag = cmd.substr(0, cmd.find(' '));
    for (const char* w : {"1", "8"})
      for (const char* run : {"a", "b"}) {
        const std::string out = (dir / (tag + "_" + w + run)).string();
        if (sh(cmd + common + " --workers " + w + " -o " + out) != 0) return {false, cmd + " failed"};
      }
    for (const auto& entry : std::filesystem::directory_iterator(dir / (tag + "_1a"))) {
      const auto name = entry.path().filename().string();
      const std::string ref = read_file(entry.path());
      for (const char* other : {"_1b", "_8a", "_8b"}) {
        ++files;
        if (read_file(dir / (tag + other) / name) != ref) ++mismatched;
      }
    }
  }
  return {files > 0 && mismatched == 0,
          fmt("%zu report file comparisons across workers 1/8, %zu differ", files, mismatched)};
}

struct Criterion {
  const char* name;
  double limit_s;
  std::function<Outcome()> check;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"gradient correctness", 30, gradients},
      {"LSTM cell oracle", 5, cell_oracle},
      {"windowing formula", 5, windowing},
      {"metrics oracle", 5, metrics_oracle},
      {"segmentation", 60, segmentation},
      {"learning sanity", 600, learning},
      {"horizon decay", 1200, horizon},
      {"ablation direction", 600, ablation},
      {"SVR dual oracle", 30, svr_oracle},
      {"end-to-end determinism", 300, determinism},
  };
  return all;
}

bool run_one(std::size_t n) {
  const Criterion& c = criteria().at(n - 1);
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = c.check();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < c.limit_s;
  const bool pass = o.pass && in_time;
  std::printf("criterion %2zu %-24s %s  %s  [%.1f s, limit %.0f s%s]\n", n, c.name, pass ? "PASS" : "FAIL",
              o.detail.c_str(), secs, c.limit_s, in_time ? "" : ", too slow");
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  bool ok = true;
  if (argc > 1) {
    for (int i = 1; i < argc; ++i) {
      const auto n = static_cast<std::size_t>(std::strtoul(argv[i], nullptr, 10));
      if (n < 1 || n > criteria().size()) {
        std::fprintf(stderr, "unknown criterion %s\n", argv[i]);
        return 2;
      }
      ok = run_one(n) && ok;
    }
  } else {
    for (std::size_t n = 1; n <= criteria().size(); ++n) ok = run_one(n) && ok;
  }
  return ok ? 0 : 1;
}
