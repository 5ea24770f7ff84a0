// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace roadfriction {

/// Mini-batch Adam with global-norm clipping and validation early stopping.
struct OptimizerConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_epochs = 500;
  std::size_t batch_size = 32;
  int patience = 20;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;

  void validate() const;
};

class Adam {
 public:
  Adam(std::size_t n_params, const OptimizerConfig& config);

  void step(std::span<double> params, std::span<const double> grads);

 private:
  OptimizerConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

/// Rescales `grads` in place so its L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
double clip_global_norm(std::span<double> grads, double max_norm);

struct TrainHistory {
  std::vector<double> train_mse;
  std::vector<double> validate_mse;
  // 0 when no epoch improved on the initial parameters.
  int best_epoch = 0;
  double best_validate_mse = 0.0;
  bool stopped_early = false;
};

/// Loss over the training samples at `batch` (indices into the training set),
/// writing d loss / d params into `grad`.
using BatchLossGrad = std::function<double(std::span<const double> params,
                                           std::span<const std::size_t> batch,
                                           std::span<double> grad)>;
/// Mean squared error on the validation set.
using ValidationLoss = std::function<double(std::span<const double> params)>;

/// Runs the optimisation loop over flat parameters. On return `params` holds
/// the parameters of the epoch with the lowest validation MSE. Throws
/// DivergenceError when a loss turns non-finite.
TrainHistory fit_minibatch(std::vector<double>& params, std::size_t n_train,
                           const OptimizerConfig& config, const BatchLossGrad& loss_grad,
                           const ValidationLoss& validation_loss);

}  // namespace roadfriction
