// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/lstm.hpp"

#include <algorithm>
#include <cmath>

#include "roadfriction/error.hpp"
#include "roadfriction/random.hpp"

namespace roadfriction {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Builds the per-step input matrices (P x B) for the samples at `idx`.
std::vector<MatrixXd> gather_steps(const SampleSet& set, std::span<const std::size_t> idx) {
  const std::size_t t_lags = set.t_lags;
  const std::size_t p = set.width;
  std::vector<MatrixXd> xs(t_lags, MatrixXd(p, idx.size()));
  for (std::size_t col = 0; col < idx.size(); ++col) {
    const double* s = set.inputs.data() + idx[col] * set.sample_stride();
    for (std::size_t t = 0; t < t_lags; ++t) {
      for (std::size_t j = 0; j < p; ++j) xs[t](j, col) = s[t * p + j];
    }
  }
  return xs;
}

struct BatchTrace {
  std::vector<MatrixXd> gates;   // 4H x B, activated
  std::vector<MatrixXd> c;       // index 0 = initial
  std::vector<MatrixXd> tanh_c;  // index t-1 for step t
  std::vector<MatrixXd> h;       // index 0 = initial
  Eigen::RowVectorXd y_hat;
};

BatchTrace run_forward(const LstmParams& p, const std::vector<MatrixXd>& xs, std::size_t batch) {
  const auto hd = static_cast<Eigen::Index>(p.hidden_dim());
  const auto w = p.w_all();
  const auto u = p.u_all();
  const auto b = p.b_all();
  BatchTrace tr;
  tr.c.push_back(MatrixXd::Zero(hd, static_cast<Eigen::Index>(batch)));
  tr.h.push_back(MatrixXd::Zero(hd, static_cast<Eigen::Index>(batch)));
  for (const MatrixXd& x : xs) {
    MatrixXd z = w * x + u * tr.h.back();
    z.colwise() += b;
    z.topRows(3 * hd) = z.topRows(3 * hd).unaryExpr(&sigmoid);
    z.bottomRows(hd) = z.bottomRows(hd).array().tanh();
    MatrixXd c = z.middleRows(0, hd).cwiseProduct(tr.c.back()) +
                 z.middleRows(hd, hd).cwiseProduct(z.middleRows(3 * hd, hd));
    MatrixXd tc = c.array().tanh();
    tr.h.push_back(z.middleRows(2 * hd, hd).cwiseProduct(tc));
    tr.tanh_c.push_back(std::move(tc));
    tr.c.push_back(std::move(c));
    tr.gates.push_back(std::move(z));
  }
  tr.y_hat = (p.readout().transpose() * tr.h.back()).array() + p.readout_bias();
  return tr;
}

// Mean squared error over the samples at `idx`; accumulates gradients into
// `grad` (same layout as the parameters) when it is non-null.
double forward_backward(const LstmParams& p, const SampleSet& set, std::span<const std::size_t> idx,
                        LstmParams* grad) {
  const std::size_t batch = idx.size();
  const std::vector<MatrixXd> xs = gather_steps(set, idx);
  const BatchTrace tr = run_forward(p, xs, batch);

  Eigen::RowVectorXd residual(static_cast<Eigen::Index>(batch));
  for (std::size_t k = 0; k < batch; ++k) {
    residual(static_cast<Eigen::Index>(k)) = tr.y_hat(static_cast<Eigen::Index>(k)) - set.targets[idx[k]];
  }
  const double inv_b = 1.0 / static_cast<double>(batch);
  const double loss = residual.squaredNorm() * inv_b;
  if (grad == nullptr) return loss;

  const auto hd = static_cast<Eigen::Index>(p.hidden_dim());
  const Eigen::RowVectorXd dy = 2.0 * inv_b * residual;
  grad->readout() += tr.h.back() * dy.transpose();
  grad->readout_bias() += dy.sum();

  auto gw = grad->w_all();
  auto gu = grad->u_all();
  auto gb = grad->b_all();
  const auto u = p.u_all();
  MatrixXd dh = p.readout() * dy;
  MatrixXd dc = MatrixXd::Zero(hd, static_cast<Eigen::Index>(batch));
  MatrixXd dz(4 * hd, static_cast<Eigen::Index>(batch));
  for (std::size_t t = xs.size(); t-- > 0;) {
    const MatrixXd& g = tr.gates[t];
    const auto f = g.middleRows(0, hd).array();
    const auto i = g.middleRows(hd, hd).array();
    const auto o = g.middleRows(2 * hd, hd).array();
    const auto ct = g.middleRows(3 * hd, hd).array();
    const auto tc = tr.tanh_c[t].array();

    dc.array() += dh.array() * o * (1.0 - tc * tc);
    dz.middleRows(0, hd).array() = dc.array() * tr.c[t].array() * f * (1.0 - f);
    dz.middleRows(hd, hd).array() = dc.array() * ct * i * (1.0 - i);
    dz.middleRows(2 * hd, hd).array() = dh.array() * tc * o * (1.0 - o);
    dz.middleRows(3 * hd, hd).array() = dc.array() * i * (1.0 - ct * ct);

    gw.noalias() += dz * xs[t].transpose();
    gu.noalias() += dz * tr.h[t].transpose();
    gb += dz.rowwise().sum();
    dh.noalias() = u.transpose() * dz;
    dc.array() *= f;
  }
  return loss;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

void check_set(const LstmParams& p, const SampleSet& set) {
  if (set.width != p.input_dim()) {
    throw Error(ErrorKind::kDimension, "sample width " + std::to_string(set.width) +
                                           " does not match input_dim " +
                                           std::to_string(p.input_dim()));
  }
  if (set.t_lags < 1) throw Error(ErrorKind::kDimension, "samples have no time steps");
  if (set.inputs.size() != set.size() * set.sample_stride()) {
    throw Error(ErrorKind::kDimension, "sample buffer size mismatch");
  }
}

}  // namespace

LstmParams::LstmParams(std::size_t input_dim, std::size_t hidden_dim)
    : input_dim_(input_dim),
      hidden_dim_(hidden_dim),
      data_(parameter_count(input_dim, hidden_dim), 0.0) {
  if (input_dim < 1 || hidden_dim < 1) {
    throw Error(ErrorKind::kDimension, "LSTM dimensions must be >= 1");
  }
}

std::size_t LstmParams::parameter_count(std::size_t input_dim, std::size_t hidden_dim) noexcept {
  return 4 * hidden_dim * input_dim + 4 * hidden_dim * hidden_dim + 4 * hidden_dim + hidden_dim + 1;
}

MatrixView LstmParams::w_all() {
  return {data_.data(), static_cast<Eigen::Index>(4 * hidden_dim_),
          static_cast<Eigen::Index>(input_dim_)};
}
ConstMatrixView LstmParams::w_all() const {
  return {data_.data(), static_cast<Eigen::Index>(4 * hidden_dim_),
          static_cast<Eigen::Index>(input_dim_)};
}
MatrixView LstmParams::u_all() {
  return {data_.data() + u_offset(), static_cast<Eigen::Index>(4 * hidden_dim_),
          static_cast<Eigen::Index>(hidden_dim_)};
}
ConstMatrixView LstmParams::u_all() const {
  return {data_.data() + u_offset(), static_cast<Eigen::Index>(4 * hidden_dim_),
          static_cast<Eigen::Index>(hidden_dim_)};
}
VectorView LstmParams::b_all() {
  return {data_.data() + b_offset(), static_cast<Eigen::Index>(4 * hidden_dim_)};
}
ConstVectorView LstmParams::b_all() const {
  return {data_.data() + b_offset(), static_cast<Eigen::Index>(4 * hidden_dim_)};
}
VectorView LstmParams::readout() {
  return {data_.data() + readout_offset(), static_cast<Eigen::Index>(hidden_dim_)};
}
ConstVectorView LstmParams::readout() const {
  return {data_.data() + readout_offset(), static_cast<Eigen::Index>(hidden_dim_)};
}

bool LstmParams::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

LstmParams init_params(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed) {
  LstmParams p(input_dim, hidden_dim);
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  auto fill = [&](auto&& block) {
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      for (Eigen::Index c = 0; c < block.cols(); ++c) block(r, c) = rng.uniform(-s, s);
    }
  };
  fill(p.w_all());
  fill(p.u_all());
  auto ro = p.readout();
  for (Eigen::Index r = 0; r < ro.size(); ++r) ro(r) = rng.uniform(-s, s);
  p.b_all().setZero();
  p.b(Gate::kForget).setOnes();
  p.readout_bias() = 0.0;
  return p;
}

CellState cell_forward(const LstmParams& params, std::span<const double> x,
                       const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev) {
  const auto hd = static_cast<Eigen::Index>(params.hidden_dim());
  if (x.size() != params.input_dim() || h_prev.size() != hd || c_prev.size() != hd) {
    throw Error(ErrorKind::kDimension, "cell_forward shape mismatch");
  }
  const ConstVectorView xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const VectorXd z = params.w_all() * xv + params.u_all() * h_prev + params.b_all();
  CellState s;
  s.f = z.segment(0, hd).unaryExpr(&sigmoid);
  s.i = z.segment(hd, hd).unaryExpr(&sigmoid);
  s.o = z.segment(2 * hd, hd).unaryExpr(&sigmoid);
  s.c_tilde = z.segment(3 * hd, hd).array().tanh();
  s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.c_tilde);
  s.h = s.o.cwiseProduct(VectorXd(s.c.array().tanh()));
  return s;
}

SequenceOutput sequence_forward(const LstmParams& params, std::span<const double> sample,
                                std::size_t t_lags) {
  const std::size_t p = params.input_dim();
  if (t_lags < 1 || sample.size() != t_lags * p) {
    throw Error(ErrorKind::kDimension, "sample does not match [T][P] = [" +
                                           std::to_string(t_lags) + "][" + std::to_string(p) + "]");
  }
  const auto hd = static_cast<Eigen::Index>(params.hidden_dim());
  SequenceOutput out;
  LstmCache& cache = out.cache;
  cache.x.push_back(VectorXd::Zero(static_cast<Eigen::Index>(p)));
  cache.h.push_back(VectorXd::Zero(hd));
  cache.c.push_back(VectorXd::Zero(hd));
  cache.f.push_back(VectorXd::Zero(hd));
  cache.i.push_back(VectorXd::Zero(hd));
  cache.o.push_back(VectorXd::Zero(hd));
  cache.c_tilde.push_back(VectorXd::Zero(hd));
  for (std::size_t t = 0; t < t_lags; ++t) {
    std::span<const double> x = sample.subspan(t * p, p);
    CellState s = cell_forward(params, x, cache.h.back(), cache.c.back());
    cache.x.push_back(ConstVectorView(x.data(), static_cast<Eigen::Index>(p)));
    cache.h.push_back(std::move(s.h));
    cache.c.push_back(std::move(s.c));
    cache.f.push_back(std::move(s.f));
    cache.i.push_back(std::move(s.i));
    cache.o.push_back(std::move(s.o));
    cache.c_tilde.push_back(std::move(s.c_tilde));
  }
  out.prediction = params.readout().dot(cache.h.back()) + params.readout_bias();
  return out;
}

LstmGradients bptt_gradients(const LstmParams& params, const SampleSet& batch) {
  check_set(params, batch);
  if (batch.size() == 0) throw Error(ErrorKind::kInvalidInput, "empty batch");
  LstmGradients out{LstmParams(params.input_dim(), params.hidden_dim()), 0.0};
  const auto idx = all_indices(batch.size());
  out.loss = forward_backward(params, batch, idx, &out.grad);
  return out;
}

double mse_loss(const LstmParams& params, const SampleSet& samples) {
  check_set(params, samples);
  if (samples.size() == 0) throw Error(ErrorKind::kInvalidInput, "empty sample set");
  return forward_backward(params, samples, all_indices(samples.size()), nullptr);
}

std::vector<double> forward_batch(const LstmParams& params, const SampleSet& samples) {
  check_set(params, samples);
  std::vector<double> out(samples.size());
  constexpr std::size_t kChunk = 256;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    const std::size_t end = std::min(samples.size(), start + kChunk);
    idx.clear();
    for (std::size_t i = start; i < end; ++i) idx.push_back(i);
    const BatchTrace tr = run_forward(params, gather_steps(samples, idx), idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) out[start + k] = tr.y_hat(static_cast<Eigen::Index>(k));
  }
  return out;
}

LstmTrainResult train(LstmParams init, const SampleSet& train_set, const SampleSet& validate_set,
                      const OptimizerConfig& config) {
  check_set(init, train_set);
  check_set(init, validate_set);
  if (train_set.size() == 0 || validate_set.size() == 0) {
    throw Error(ErrorKind::kInsufficientData, "training and validation sets must be non-empty");
  }
  const std::size_t p = init.input_dim();
  const std::size_t h = init.hidden_dim();
  LstmTrainResult result;
  std::vector<double> flat = std::move(init.data());

  // The view aliases `flat` through the params object handed to the callbacks.
  LstmParams view(p, h);
  LstmParams grad(p, h);
  auto loss_grad = [&](std::span<const double> params, std::span<const std::size_t> batch,
                       std::span<double> g) {
    std::copy(params.begin(), params.end(), view.data().begin());
    std::fill(grad.data().begin(), grad.data().end(), 0.0);
    const double loss = forward_backward(view, train_set, batch, &grad);
    std::copy(grad.data().begin(), grad.data().end(), g.begin());
    return loss;
  };
  const auto val_idx = all_indices(validate_set.size());
  auto val_loss = [&](std::span<const double> params) {
    std::copy(params.begin(), params.end(), view.data().begin());
    return forward_backward(view, validate_set, val_idx, nullptr);
  };
  result.history = fit_minibatch(flat, train_set.size(), config, loss_grad, val_loss);
  result.params = LstmParams(p, h);
  result.params.data() = std::move(flat);
  return result;
}

std::vector<double> predict(const LstmParams& params, const Scaler& scaler,
                            const SampleSet& windows) {
  if (!scaler.fitted()) throw Error(ErrorKind::kState, "scaler has not been fitted");
  const SampleSet norm = scaler.transform_inputs(windows);
  std::vector<double> out = forward_batch(params, norm);
  for (double& y : out) y = scaler.invert_target(y);
  return out;
}

LstmModel fit_lstm(const WindowedDataset& dataset, const LstmTrainConfig& config) {
  const SplitIndices& split = dataset.require_split();
  const SampleSet train_raw = dataset.subset(split.train);
  const SampleSet validate_raw = dataset.subset(split.validate);
  LstmModel model;
  model.scaler = Scaler::fit(train_raw);
  model.seed = config.optimizer.seed;
  LstmParams init = init_params(dataset.config.width(), config.hidden_dim, config.optimizer.seed);
  LstmTrainResult r = train(std::move(init), model.scaler.transform(train_raw),
                            model.scaler.transform(validate_raw), config.optimizer);
  model.params = std::move(r.params);
  model.history = std::move(r.history);
  return model;
}

}  // namespace roadfriction
