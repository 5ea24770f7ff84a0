// SPDX-License-Identifier: Apache-2.0
//
// Single-layer LSTM regressor with an affine readout on the final hidden
// state.
//
//   f_t  = sigmoid(W_f x_t + U_f h_{t-1} + b_f)
//   i_t  = sigmoid(W_i x_t + U_i h_{t-1} + b_i)
//   o_t  = sigmoid(W_o x_t + U_o h_{t-1} + b_o)
//   C~_t = tanh(W_C x_t + U_C h_{t-1} + b_C)
//   C_t  = f_t * C_{t-1} + i_t * C~_t
//   h_t  = o_t * tanh(C_t)
//   y    = readout . h_T + readout_bias
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "roadfriction/dataset.hpp"
#include "roadfriction/optim.hpp"

namespace roadfriction {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;
using VectorView = Eigen::Map<Eigen::VectorXd>;
using ConstVectorView = Eigen::Map<const Eigen::VectorXd>;

enum class Gate : std::size_t { kForget = 0, kInput = 1, kOutput = 2, kCandidate = 3 };

/// All weights in one contiguous buffer, laid out as
/// [W_f; W_i; W_o; W_C] (4H x P, row-major), [U_f; U_i; U_o; U_C] (4H x H),
/// [b_f; b_i; b_o; b_C] (4H), readout (H), readout bias (1).
/// The same layout stores gradients.
class LstmParams {
 public:
  LstmParams() = default;
  /// Zero-initialised parameters.
  LstmParams(std::size_t input_dim, std::size_t hidden_dim);

  static std::size_t parameter_count(std::size_t input_dim, std::size_t hidden_dim) noexcept;

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t hidden_dim() const noexcept { return hidden_dim_; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  MatrixView w_all();
  ConstMatrixView w_all() const;
  MatrixView u_all();
  ConstMatrixView u_all() const;
  VectorView b_all();
  ConstVectorView b_all() const;

  auto w(Gate g) { return w_all().middleRows(gate_row(g), hidden_dim_); }
  auto w(Gate g) const { return w_all().middleRows(gate_row(g), hidden_dim_); }
  auto u(Gate g) { return u_all().middleRows(gate_row(g), hidden_dim_); }
  auto u(Gate g) const { return u_all().middleRows(gate_row(g), hidden_dim_); }
  auto b(Gate g) { return b_all().segment(gate_row(g), hidden_dim_); }
  auto b(Gate g) const { return b_all().segment(gate_row(g), hidden_dim_); }

  VectorView readout();
  ConstVectorView readout() const;
  double& readout_bias() { return data_.back(); }
  double readout_bias() const { return data_.back(); }

  bool all_finite() const;

  friend bool operator==(const LstmParams&, const LstmParams&) = default;

 private:
  std::size_t gate_row(Gate g) const noexcept { return static_cast<std::size_t>(g) * hidden_dim_; }
  std::size_t u_offset() const noexcept { return 4 * hidden_dim_ * input_dim_; }
  std::size_t b_offset() const noexcept { return u_offset() + 4 * hidden_dim_ * hidden_dim_; }
  std::size_t readout_offset() const noexcept { return b_offset() + 4 * hidden_dim_; }

  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  std::vector<double> data_;
};

/// Weights uniform in [-1/sqrt(H), 1/sqrt(H)], forget-gate bias 1, every
/// other bias 0.
LstmParams init_params(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed);

struct CellState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
  Eigen::VectorXd f;
  Eigen::VectorXd i;
  Eigen::VectorXd o;
  Eigen::VectorXd c_tilde;
};

/// One step of the recurrence. Throws Error(kDimension) on shape mismatch.
CellState cell_forward(const LstmParams& params, std::span<const double> x,
                       const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev);

/// Per-step values of an unrolled sequence. Index 0 holds the zero initial
/// state; step t (1..T) holds x_t, h_t, C_t and the gate activations.
struct LstmCache {
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> h;
  std::vector<Eigen::VectorXd> c;
  std::vector<Eigen::VectorXd> c_tilde;
  std::vector<Eigen::VectorXd> f;
  std::vector<Eigen::VectorXd> i;
  std::vector<Eigen::VectorXd> o;
};

struct SequenceOutput {
  double prediction = 0.0;
  LstmCache cache;
};

/// Unrolls `t_lags` steps from h_0 = C_0 = 0 over a [T][P] sample.
SequenceOutput sequence_forward(const LstmParams& params, std::span<const double> sample,
                                std::size_t t_lags);

struct LstmGradients {
  LstmParams grad;
  double loss = 0.0;
};

/// Exact gradient of the batch mean squared error with respect to every
/// parameter, by backpropagation through time.
LstmGradients bptt_gradients(const LstmParams& params, const SampleSet& batch);

/// Batch mean squared error (no gradients).
double mse_loss(const LstmParams& params, const SampleSet& samples);

/// Raw model outputs on already-normalised samples.
std::vector<double> forward_batch(const LstmParams& params, const SampleSet& samples);

struct LstmTrainConfig {
  std::size_t hidden_dim = 32;
  OptimizerConfig optimizer;
};

struct LstmTrainResult {
  LstmParams params;
  TrainHistory history;
};

/// Trains on normalised samples and returns the best-validation parameters.
LstmTrainResult train(LstmParams init, const SampleSet& train_set, const SampleSet& validate_set,
                      const OptimizerConfig& config);

/// Normalises `windows` with `scaler`, runs the network and maps the outputs
/// back to the friction scale. Throws Error(kState) for an unfitted scaler.
std::vector<double> predict(const LstmParams& params, const Scaler& scaler,
                            const SampleSet& windows);

struct LstmModel {
  LstmParams params;
  Scaler scaler;
  std::uint64_t seed = 0;
  TrainHistory history;
};

/// Fits the scaler on the training split, initialises from `config.optimizer.seed`
/// and trains. The dataset must be split.
LstmModel fit_lstm(const WindowedDataset& dataset, const LstmTrainConfig& config);

}  // namespace roadfriction
