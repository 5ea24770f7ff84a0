// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "roadfriction/error.hpp"
#include "roadfriction/lstm.hpp"
#include "roadfriction/persistence.hpp"

using namespace roadfriction;

namespace {

LstmParams random_params(std::size_t p, std::size_t h, std::uint64_t seed, double scale = 0.8) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  LstmParams params(p, h);
  for (double& v : params.data()) v = u(gen);
  return params;
}

SampleSet random_batch(std::size_t n, std::size_t t, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SampleSet s{t, p, {}, {}};
  for (std::size_t i = 0; i < n * t * p; ++i) s.inputs.push_back(u(gen));
  for (std::size_t i = 0; i < n; ++i) s.targets.push_back(u(gen));
  return s;
}

// Gate equations evaluated unit by unit with explicit sums.
struct Step {
  std::vector<double> f, i, o, c_tilde, c, h;
};

Step literal_cell(const LstmParams& w, const std::vector<double>& x, const std::vector<double>& h_prev,
                  const std::vector<double>& c_prev) {
  const std::size_t hd = w.hidden_dim(), pd = w.input_dim();
  auto pre = [&](Gate g, std::size_t r) {
    double a = w.b(g)(static_cast<Eigen::Index>(r));
    for (std::size_t k = 0; k < pd; ++k) a += w.w(g)(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) * x[k];
    for (std::size_t k = 0; k < hd; ++k) a += w.u(g)(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) * h_prev[k];
    return a;
  };
  Step s;
  for (std::size_t r = 0; r < hd; ++r) {
    const double f = oracle::sigmoid(pre(Gate::kForget, r));
    const double i = oracle::sigmoid(pre(Gate::kInput, r));
    const double o = oracle::sigmoid(pre(Gate::kOutput, r));
    const double ct = std::tanh(pre(Gate::kCandidate, r));
    const double c = f * c_prev[r] + i * ct;
    s.f.push_back(f);
    s.i.push_back(i);
    s.o.push_back(o);
    s.c_tilde.push_back(ct);
    s.c.push_back(c);
    s.h.push_back(o * std::tanh(c));
  }
  return s;
}

double literal_sequence(const LstmParams& w, std::span<const double> sample, std::size_t t) {
  const std::size_t pd = w.input_dim(), hd = w.hidden_dim();
  std::vector<double> h(hd, 0.0), c(hd, 0.0);
  for (std::size_t step = 0; step < t; ++step) {
    std::vector<double> x(sample.begin() + static_cast<long>(step * pd),
                          sample.begin() + static_cast<long>((step + 1) * pd));
    const Step s = literal_cell(w, x, h, c);
    h = s.h;
    c = s.c;
  }
  double y = w.readout_bias();
  for (std::size_t r = 0; r < hd; ++r) y += w.readout()(static_cast<Eigen::Index>(r)) * h[r];
  return y;
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TEST(Cell, ZeroEverythingGivesHalfGates) {
  const LstmParams p(2, 3);
  const auto s = cell_forward(p, std::vector<double>{0, 0}, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3));
  for (int r = 0; r < 3; ++r) {
    EXPECT_EQ(s.f(r), 0.5);
    EXPECT_EQ(s.i(r), 0.5);
    EXPECT_EQ(s.o(r), 0.5);
    EXPECT_EQ(s.c_tilde(r), 0.0);
    EXPECT_EQ(s.c(r), 0.0);
    EXPECT_EQ(s.h(r), 0.0);
  }
}

TEST(Cell, SaturatedGatesKeepMemory) {
  LstmParams p = random_params(2, 4, 1, 0.1);
  p.b(Gate::kForget).setConstant(50.0);
  p.b(Gate::kInput).setConstant(-50.0);
  Eigen::VectorXd c(4);
  c << 0.3, -1.2, 2.0, 0.0;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(4);
  const Eigen::VectorXd c0 = c;
  for (int step = 0; step < 10; ++step) {
    const auto s = cell_forward(p, std::vector<double>{0.5, -0.5}, h, c);
    h = s.h;
    c = s.c;
  }
  EXPECT_LT((c - c0).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Cell, MatchesLiteralTranscription) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const LstmParams p = random_params(2, 3, 1000 + trial, 1.5);
    std::vector<double> x{u(gen), u(gen)}, h{u(gen), u(gen), u(gen)}, c{u(gen), u(gen), u(gen)};
    const auto got = cell_forward(p, x, to_vec(h), to_vec(c));
    const Step want = literal_cell(p, x, h, c);
    for (int r = 0; r < 3; ++r) {
      const auto k = static_cast<std::size_t>(r);
      ASSERT_NEAR(got.f(r), want.f[k], 1e-14);
      ASSERT_NEAR(got.i(r), want.i[k], 1e-14);
      ASSERT_NEAR(got.o(r), want.o[k], 1e-14);
      ASSERT_NEAR(got.c_tilde(r), want.c_tilde[k], 1e-14);
      ASSERT_NEAR(got.c(r), want.c[k], 1e-14);
      ASSERT_NEAR(got.h(r), want.h[k], 1e-14);
    }
  }
}

TEST(Cell, GateRangesHoldForLargeInputs) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int trial = 0; trial < 500; ++trial) {
    const LstmParams p = random_params(3, 4, 2000 + trial, 3.0);
    Eigen::VectorXd h(4), c(4);
    for (int r = 0; r < 4; ++r) {
      h(r) = u(gen) / 30.0;
      c(r) = u(gen);
    }
    const auto s = cell_forward(p, std::vector<double>{u(gen), u(gen), u(gen)}, h, c);
    for (int r = 0; r < 4; ++r) {
      for (double g : {s.f(r), s.i(r), s.o(r)}) {
        EXPECT_GE(g, 0.0);
        EXPECT_LE(g, 1.0);
      }
      EXPECT_LE(std::abs(s.c_tilde(r)), 1.0);
      EXPECT_LE(std::abs(s.h(r)), 1.0);
    }
  }
}

TEST(Cell, ShapeMismatchIsDimensionError) {
  const LstmParams p(2, 3);
  try {
    cell_forward(p, std::vector<double>{1.0}, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
  EXPECT_THROW(cell_forward(p, std::vector<double>{1.0, 2.0}, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)),
               Error);
}

TEST(Init, ForgetBiasOneAndBoundedWeights) {
  const LstmParams p = init_params(2, 4, 5);
  for (int r = 0; r < 4; ++r) {
    EXPECT_EQ(p.b(Gate::kForget)(r), 1.0);
    EXPECT_EQ(p.b(Gate::kInput)(r), 0.0);
  }
  EXPECT_EQ(p.readout_bias(), 0.0);
  EXPECT_EQ(init_params(2, 4, 5), p);
  EXPECT_NE(init_params(2, 4, 6), p);

  const LstmParams big = init_params(8, 16, 3);
  const double s = 1.0 / std::sqrt(16.0);
  std::size_t n = 0;
  for (double v : std::vector<double>(big.data().begin(), big.data().begin() + 1000)) {
    EXPECT_LE(std::abs(v), s);
    ++n;
  }
  EXPECT_EQ(n, 1000u);
}

TEST(Sequence, SingleStepEqualsCellPlusReadout) {
  const LstmParams p = random_params(2, 3, 9);
  const std::vector<double> x{0.3, -0.7};
  const auto out = sequence_forward(p, x, 1);
  const auto s = cell_forward(p, x, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3));
  EXPECT_NEAR(out.prediction, p.readout().dot(s.h) + p.readout_bias(), 1e-15);
  EXPECT_EQ(sequence_forward(LstmParams(2, 3), x, 1).prediction, 0.0);
}

TEST(Sequence, SevenStepsMatchComposition) {
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const LstmParams p = random_params(2, 5, 300 + trial);
    std::vector<double> sample(14);
    for (double& v : sample) v = u(gen);
    const auto out = sequence_forward(p, sample, 7);
    EXPECT_NEAR(out.prediction, literal_sequence(p, sample, 7), 1e-13);
    ASSERT_EQ(out.cache.h.size(), 8u);
    EXPECT_EQ(out.cache.h[0].norm(), 0.0);
  }
}

TEST(Gradients, MatchCentralDifferences) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (std::size_t h : {2u, 5u}) {
      for (std::size_t t : {1u, 3u, 7u}) {
        const LstmParams p = random_params(2, h, 500 + seed);
        const SampleSet batch = random_batch(4, t, 2, 900 + seed);
        const auto g = bptt_gradients(p, batch);
        const auto numeric = oracle::numeric_gradient(
            [&](const std::vector<double>& x) {
              LstmParams q = p;
              q.data() = x;
              return mse_loss(q, batch);
            },
            p.data(), 1e-5);
        for (std::size_t i = 0; i < numeric.size(); ++i) {
          worst = std::max(worst, oracle::relative_error(g.grad.data()[i], numeric[i], 1e-6));
        }
        EXPECT_NEAR(g.loss, mse_loss(p, batch), 1e-14);
      }
    }
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Gradients, ZeroParamsOnlyReadoutBiasMoves) {
  const LstmParams p(2, 3);
  SampleSet batch = random_batch(5, 4, 2, 1);
  const auto g = bptt_gradients(p, batch);
  double mean_target = 0;
  for (double y : batch.targets) mean_target += y;
  mean_target /= 5.0;
  EXPECT_NEAR(g.grad.readout_bias(), -2.0 * mean_target, 1e-15);
  for (std::size_t i = 0; i + 1 < g.grad.data().size(); ++i) EXPECT_EQ(g.grad.data()[i], 0.0);
}

TEST(Gradients, DeadUnitHasZeroReadoutGradient) {
  LstmParams p = random_params(2, 3, 11);
  // Unit 1: no incoming weights, zero biases, so its hidden state stays 0.
  for (Gate g : {Gate::kForget, Gate::kInput, Gate::kOutput, Gate::kCandidate}) {
    p.w(g).row(1).setZero();
    p.u(g).row(1).setZero();
    p.b(g)(1) = 0.0;
  }
  const auto g = bptt_gradients(p, random_batch(6, 5, 2, 12));
  EXPECT_EQ(g.grad.readout()(1), 0.0);
}

TEST(Train, ZeroLearningRateLeavesParams) {
  const LstmParams p = init_params(1, 4, 1);
  const SampleSet tr = random_batch(40, 3, 1, 2), va = random_batch(10, 3, 1, 3);
  OptimizerConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.max_epochs = 5;
  const auto r = train(p, tr, va, cfg);
  EXPECT_EQ(r.params, p);
  for (double v : r.history.validate_mse) EXPECT_EQ(v, r.history.validate_mse.front());
}

TEST(Train, SameSeedSameHistory) {
  const SampleSet tr = random_batch(60, 3, 1, 2), va = random_batch(15, 3, 1, 3);
  OptimizerConfig cfg;
  cfg.max_epochs = 15;
  cfg.seed = 4;
  const auto a = train(init_params(1, 4, 1), tr, va, cfg);
  const auto b = train(init_params(1, 4, 1), tr, va, cfg);
  EXPECT_EQ(a.history.train_mse, b.history.train_mse);
  EXPECT_EQ(a.history.validate_mse, b.history.validate_mse);
  EXPECT_EQ(a.params, b.params);
}

TEST(Train, NonFiniteLossIsDivergence) {
  SampleSet tr = random_batch(20, 2, 1, 2);
  tr.targets[3] = std::numeric_limits<double>::quiet_NaN();
  OptimizerConfig cfg;
  cfg.max_epochs = 3;
  cfg.learning_rate = 0.5;
  try {
    train(init_params(1, 3, 1), tr, random_batch(5, 2, 1, 3), cfg);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDivergence);
    EXPECT_EQ(e.learning_rate(), 0.5);
  }
}

TEST(Train, BeatsPersistenceOnSeasonalAutoregression) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<DayRow> rows(446);
  double ar = 0.0;
  for (std::size_t d = 0; d < rows.size(); ++d) {
    ar = 0.6 * ar + 0.04 * n(gen);
    rows[d].values[0] = 0.6 + 0.15 * std::sin(2 * std::numbers::pi * static_cast<double>(d) / 30.0) + ar;
  }
  const WindowConfig w{7, 1, {Feature::kFriction}};
  const WindowedDataset ds = split(build_windows(rows, w), 3);
  LstmTrainConfig cfg;
  cfg.hidden_dim = 8;
  cfg.optimizer.max_epochs = 200;
  cfg.optimizer.learning_rate = 5e-3;
  cfg.optimizer.seed = 2;
  const LstmModel m = fit_lstm(ds, cfg);
  const SampleSet va = ds.subset(ds.require_split().validate);
  const auto pred = predict(m.params, m.scaler, va);
  const auto naive = persistence_predict(va, w);
  EXPECT_LT(oracle::mse(va.targets, pred), oracle::mse(va.targets, naive));
}

TEST(Predict, IdentityScalerZeroParams) {
  const Scaler identity = Scaler::from_parts({0.0}, {1.0}, 0.0, 1.0);
  const auto out = predict(LstmParams(1, 3), identity, random_batch(7, 2, 1, 1));
  for (double y : out) EXPECT_EQ(y, 0.0);
  EXPECT_THROW(predict(LstmParams(1, 3), Scaler{}, random_batch(7, 2, 1, 1)), Error);
}

TEST(Predict, MemorisesTinyTrainingSet) {
  SampleSet tiny{3, 1, {0.1, 0.2, 0.3, 0.5, 0.4, 0.3, 0.9, 0.8, 0.9, 0.2, 0.2, 0.2, 0.6, 0.7, 0.5},
                 {0.4, 0.2, 0.7, 0.25, 0.55}};
  const Scaler sc = Scaler::fit(tiny);
  const SampleSet norm = sc.transform(tiny);
  OptimizerConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 3000;
  cfg.patience = 3000;
  cfg.batch_size = 5;
  const auto r = train(init_params(1, 8, 3), norm, norm, cfg);
  const auto pred = predict(r.params, sc, tiny);
  EXPECT_LT(oracle::mape(tiny.targets, pred), 5.0);
  for (double y : pred) EXPECT_TRUE(std::isfinite(y));
}
