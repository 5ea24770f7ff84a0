// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/optim.hpp"

#include <algorithm>
#include <cmath>

#include "roadfriction/error.hpp"
#include "roadfriction/random.hpp"

namespace roadfriction {

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw Error(ErrorKind::kInvalidInput, "learning_rate must be >= 0");
  if (max_epochs < 1) throw Error(ErrorKind::kInvalidInput, "max_epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::kInvalidInput, "batch_size must be >= 1");
  if (patience < 1) throw Error(ErrorKind::kInvalidInput, "patience must be >= 1");
  if (!(clip_norm > 0.0)) throw Error(ErrorKind::kInvalidInput, "clip_norm must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    throw Error(ErrorKind::kInvalidInput, "invalid Adam moments");
  }
}

Adam::Adam(std::size_t n_params, const OptimizerConfig& config)
    : config_(config), m_(n_params, 0.0), v_(n_params, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = config_.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grads[i] * grads[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

double clip_global_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (double& g : grads) g *= s;
  }
  return norm;
}

TrainHistory fit_minibatch(std::vector<double>& params, std::size_t n_train,
                           const OptimizerConfig& config, const BatchLossGrad& loss_grad,
                           const ValidationLoss& validation_loss) {
  config.validate();
  if (n_train == 0) throw Error(ErrorKind::kInsufficientData, "empty training split");

  Rng rng(derive_seed(config.seed, 0x6d62));  // batch order stream
  Adam adam(params.size(), config);
  std::vector<double> grad(params.size());
  std::vector<double> best = params;
  std::vector<std::size_t> order(n_train);

  TrainHistory history;
  history.best_epoch = 0;
  history.best_validate_mse = validation_loss(params);
  if (!std::isfinite(history.best_validate_mse)) throw DivergenceError(0, config.learning_rate);
  int since_best = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
    rng.shuffle(std::span<std::size_t>(order));

    double weighted = 0.0;
    for (std::size_t start = 0; start < n_train; start += config.batch_size) {
      const std::size_t end = std::min(n_train, start + config.batch_size);
      std::span<const std::size_t> batch(order.data() + start, end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double loss = loss_grad(params, batch, grad);
      if (!std::isfinite(loss)) throw DivergenceError(epoch, config.learning_rate);
      weighted += loss * static_cast<double>(batch.size());
      clip_global_norm(grad, config.clip_norm);
      adam.step(params, grad);
    }
    const double val = validation_loss(params);
    if (!std::isfinite(val)) throw DivergenceError(epoch, config.learning_rate);
    history.train_mse.push_back(weighted / static_cast<double>(n_train));
    history.validate_mse.push_back(val);

    if (val < history.best_validate_mse) {
      history.best_validate_mse = val;
      history.best_epoch = epoch;
      best = params;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      history.stopped_early = true;
      break;
    }
  }
  params = std::move(best);
  return history;
}

}  // namespace roadfriction
