// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/ffnn.hpp"

#include <algorithm>
#include <cmath>

#include "roadfriction/error.hpp"
#include "roadfriction/random.hpp"

namespace roadfriction {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

MatrixXd gather(const SampleSet& set, std::span<const std::size_t> idx) {
  const std::size_t d = set.sample_stride();
  MatrixXd x(static_cast<Index>(d), static_cast<Index>(idx.size()));
  for (std::size_t col = 0; col < idx.size(); ++col) {
    const double* s = set.inputs.data() + idx[col] * d;
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Index>(j), static_cast<Index>(col)) = s[j];
  }
  return x;
}

void check_set(const FfnnParams& p, const SampleSet& set) {
  if (set.sample_stride() != p.input_dim()) {
    throw Error(ErrorKind::kDimension, "flattened sample size " +
                                           std::to_string(set.sample_stride()) +
                                           " does not match input_dim " +
                                           std::to_string(p.input_dim()));
  }
}

double forward_backward(const FfnnParams& p, const SampleSet& set,
                        std::span<const std::size_t> idx, FfnnParams* grad,
                        std::vector<double>* outputs = nullptr) {
  const MatrixXd x = gather(set, idx);
  MatrixXd a1 = p.w1() * x;
  a1.colwise() += p.b1();
  const MatrixXd r1 = a1.cwiseMax(0.0);
  MatrixXd a2 = p.w2() * r1;
  a2.colwise() += p.b2();
  const MatrixXd r2 = a2.cwiseMax(0.0);
  const Eigen::RowVectorXd y = (p.w3().transpose() * r2).array() + p.b3();

  if (outputs) outputs->assign(y.data(), y.data() + y.size());
  Eigen::RowVectorXd residual(y.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    residual(static_cast<Index>(k)) = y(static_cast<Index>(k)) - set.targets[idx[k]];
  }
  const double inv_b = 1.0 / static_cast<double>(idx.size());
  const double loss = residual.squaredNorm() * inv_b;
  if (grad == nullptr) return loss;

  const Eigen::RowVectorXd dy = 2.0 * inv_b * residual;
  grad->w3() += r2 * dy.transpose();
  grad->b3() += dy.sum();
  MatrixXd d2 = p.w3() * dy;
  d2.array() *= (a2.array() > 0.0).cast<double>();
  grad->w2().noalias() += d2 * r1.transpose();
  grad->b2() += d2.rowwise().sum();
  MatrixXd d1 = p.w2().transpose() * d2;
  d1.array() *= (a1.array() > 0.0).cast<double>();
  grad->w1().noalias() += d1 * x.transpose();
  grad->b1() += d1.rowwise().sum();
  return loss;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace

FfnnParams::FfnnParams(std::size_t input_dim, std::size_t hidden1, std::size_t hidden2)
    : input_dim_(input_dim),
      hidden1_(hidden1),
      hidden2_(hidden2),
      data_(parameter_count(input_dim, hidden1, hidden2), 0.0) {
  if (input_dim < 1 || hidden1 < 1 || hidden2 < 1) {
    throw Error(ErrorKind::kDimension, "FFNN dimensions must be >= 1");
  }
}

std::size_t FfnnParams::parameter_count(std::size_t input_dim, std::size_t hidden1,
                                        std::size_t hidden2) noexcept {
  return hidden1 * input_dim + hidden1 + hidden2 * hidden1 + hidden2 + hidden2 + 1;
}

MatrixView FfnnParams::w1() {
  return {data_.data(), static_cast<Index>(hidden1_), static_cast<Index>(input_dim_)};
}
ConstMatrixView FfnnParams::w1() const {
  return {data_.data(), static_cast<Index>(hidden1_), static_cast<Index>(input_dim_)};
}
VectorView FfnnParams::b1() {
  return {data_.data() + hidden1_ * input_dim_, static_cast<Index>(hidden1_)};
}
ConstVectorView FfnnParams::b1() const {
  return {data_.data() + hidden1_ * input_dim_, static_cast<Index>(hidden1_)};
}
MatrixView FfnnParams::w2() {
  return {data_.data() + hidden1_ * (input_dim_ + 1), static_cast<Index>(hidden2_),
          static_cast<Index>(hidden1_)};
}
ConstMatrixView FfnnParams::w2() const {
  return {data_.data() + hidden1_ * (input_dim_ + 1), static_cast<Index>(hidden2_),
          static_cast<Index>(hidden1_)};
}
VectorView FfnnParams::b2() {
  return {data_.data() + hidden1_ * (input_dim_ + 1) + hidden2_ * hidden1_,
          static_cast<Index>(hidden2_)};
}
ConstVectorView FfnnParams::b2() const {
  return {data_.data() + hidden1_ * (input_dim_ + 1) + hidden2_ * hidden1_,
          static_cast<Index>(hidden2_)};
}
VectorView FfnnParams::w3() {
  return {data_.data() + hidden1_ * (input_dim_ + 1) + hidden2_ * (hidden1_ + 1),
          static_cast<Index>(hidden2_)};
}
ConstVectorView FfnnParams::w3() const {
  return {data_.data() + hidden1_ * (input_dim_ + 1) + hidden2_ * (hidden1_ + 1),
          static_cast<Index>(hidden2_)};
}

FfnnParams ffnn_init(std::size_t input_dim, std::size_t hidden1, std::size_t hidden2,
                     std::uint64_t seed) {
  FfnnParams p(input_dim, hidden1, hidden2);
  Rng rng(seed);
  auto fill = [&rng](auto&& m, double fan_in) {
    const double limit = std::sqrt(6.0 / fan_in);
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-limit, limit);
    }
  };
  fill(p.w1(), static_cast<double>(input_dim));
  fill(p.w2(), static_cast<double>(hidden1));
  auto w3 = p.w3();
  const double limit = std::sqrt(3.0 / static_cast<double>(hidden2));
  for (Index r = 0; r < w3.size(); ++r) w3(r) = rng.uniform(-limit, limit);
  return p;
}

FfnnGradients ffnn_gradients(const FfnnParams& params, const SampleSet& batch) {
  check_set(params, batch);
  if (batch.size() == 0) throw Error(ErrorKind::kInvalidInput, "empty batch");
  FfnnGradients out{FfnnParams(params.input_dim(), params.hidden1(), params.hidden2()), 0.0};
  out.loss = forward_backward(params, batch, all_indices(batch.size()), &out.grad);
  return out;
}

double ffnn_mse(const FfnnParams& params, const SampleSet& samples) {
  check_set(params, samples);
  return forward_backward(params, samples, all_indices(samples.size()), nullptr);
}

std::vector<double> ffnn_forward(const FfnnParams& params, const SampleSet& samples) {
  check_set(params, samples);
  std::vector<double> out;
  if (samples.size() == 0) return out;
  forward_backward(params, samples, all_indices(samples.size()), nullptr, &out);
  return out;
}

FfnnTrainResult ffnn_train(FfnnParams init, const SampleSet& train_set,
                           const SampleSet& validate_set, const OptimizerConfig& config) {
  check_set(init, train_set);
  check_set(init, validate_set);
  if (train_set.size() == 0 || validate_set.size() == 0) {
    throw Error(ErrorKind::kInsufficientData, "training and validation sets must be non-empty");
  }
  FfnnParams view(init.input_dim(), init.hidden1(), init.hidden2());
  FfnnParams grad = view;
  std::vector<double> flat = std::move(init.data());
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
  FfnnTrainResult result;
  result.history = fit_minibatch(flat, train_set.size(), config, loss_grad, val_loss);
  result.params = view;
  result.params.data() = std::move(flat);
  return result;
}

std::vector<double> ffnn_predict(const FfnnParams& params, const Scaler& scaler,
                                 const SampleSet& windows) {
  if (!scaler.fitted()) throw Error(ErrorKind::kState, "scaler has not been fitted");
  std::vector<double> out = ffnn_forward(params, scaler.transform_inputs(windows));
  for (double& y : out) y = scaler.invert_target(y);
  return out;
}

FfnnModel fit_ffnn(const WindowedDataset& dataset, const FfnnConfig& config) {
  const SplitIndices& split = dataset.require_split();
  const SampleSet train_raw = dataset.subset(split.train);
  const SampleSet validate_raw = dataset.subset(split.validate);
  FfnnModel model;
  model.scaler = Scaler::fit(train_raw);
  FfnnParams init = ffnn_init(dataset.samples.sample_stride(), config.hidden1, config.hidden2,
                              config.optimizer.seed);
  FfnnTrainResult r = ffnn_train(std::move(init), model.scaler.transform(train_raw),
                                 model.scaler.transform(validate_raw), config.optimizer);
  model.params = std::move(r.params);
  model.history = std::move(r.history);
  return model;
}

}  // namespace roadfriction
