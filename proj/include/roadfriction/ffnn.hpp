// SPDX-License-Identifier: Apache-2.0
//
// Feed-forward baseline: flattened [T*P] input, two ReLU hidden layers and a
// linear scalar output, trained with the same optimiser and early stopping as
// the LSTM.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "roadfriction/dataset.hpp"
#include "roadfriction/lstm.hpp"
#include "roadfriction/optim.hpp"

namespace roadfriction {

/// Layout: W1 (H1 x D), b1, W2 (H2 x H1), b2, w3 (H2), b3; matrices row-major.
class FfnnParams {
 public:
  FfnnParams() = default;
  FfnnParams(std::size_t input_dim, std::size_t hidden1, std::size_t hidden2);

  static std::size_t parameter_count(std::size_t input_dim, std::size_t hidden1,
                                     std::size_t hidden2) noexcept;

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t hidden1() const noexcept { return hidden1_; }
  std::size_t hidden2() const noexcept { return hidden2_; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  MatrixView w1();
  ConstMatrixView w1() const;
  VectorView b1();
  ConstVectorView b1() const;
  MatrixView w2();
  ConstMatrixView w2() const;
  VectorView b2();
  ConstVectorView b2() const;
  VectorView w3();
  ConstVectorView w3() const;
  double& b3() { return data_.back(); }
  double b3() const { return data_.back(); }

  friend bool operator==(const FfnnParams&, const FfnnParams&) = default;

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden1_ = 0;
  std::size_t hidden2_ = 0;
  std::vector<double> data_;
};

struct FfnnConfig {
  std::size_t hidden1 = 100;
  std::size_t hidden2 = 100;
  OptimizerConfig optimizer;
};

/// He-uniform weights for the ReLU layers, zero biases.
FfnnParams ffnn_init(std::size_t input_dim, std::size_t hidden1, std::size_t hidden2,
                     std::uint64_t seed);

struct FfnnGradients {
  FfnnParams grad;
  double loss = 0.0;
};

FfnnGradients ffnn_gradients(const FfnnParams& params, const SampleSet& batch);
double ffnn_mse(const FfnnParams& params, const SampleSet& samples);
std::vector<double> ffnn_forward(const FfnnParams& params, const SampleSet& samples);

struct FfnnTrainResult {
  FfnnParams params;
  TrainHistory history;
};

FfnnTrainResult ffnn_train(FfnnParams init, const SampleSet& train_set,
                           const SampleSet& validate_set, const OptimizerConfig& config);

/// Friction-scale predictions for raw windows.
std::vector<double> ffnn_predict(const FfnnParams& params, const Scaler& scaler,
                                 const SampleSet& windows);

struct FfnnModel {
  FfnnParams params;
  Scaler scaler;
  TrainHistory history;
};

FfnnModel fit_ffnn(const WindowedDataset& dataset, const FfnnConfig& config);

}  // namespace roadfriction
