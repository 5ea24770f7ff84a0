// SPDX-License-Identifier: Apache-2.0
//
// Epsilon-insensitive support vector regression with an RBF kernel, solved in
// the dual by sequential minimal optimisation (second-order working set
// selection).
//
// The dual is posed over 2n variables a = (alpha, alpha*), each in [0, C]:
//   minimise  1/2 a^T Q a + p^T a   subject to  sum(alpha) = sum(alpha*)
// with Q = [K -K; -K K] and p = (eps - y, eps + y). The regression function
// is f(x) = sum_j (alpha_j - alpha*_j) K(x_j, x) + b.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "roadfriction/dataset.hpp"
#include "roadfriction/lstm.hpp"

namespace roadfriction {

struct SvrConfig {
  double c = 1.0;
  double epsilon = 0.01;
  /// 0 selects 1 / (T * P).
  double gamma = 0.0;
  double tolerance = 1e-3;
  /// 0 selects max(10^7, 100 n).
  long max_iterations = 0;
};

/// exp(-gamma * |u - v|^2)
double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma);

struct SvrSolution {
  /// alpha_j - alpha*_j per training sample.
  std::vector<double> coefficients;
  /// The 2n dual variables (alpha, alpha*).
  std::vector<double> dual;
  double bias = 0.0;
  double objective = 0.0;
  long iterations = 0;
  /// Maximal KKT violation at termination.
  double kkt_residual = 0.0;
};

/// Solves the dual for a precomputed n x n kernel matrix. Throws
/// ConvergenceError if the KKT gap is still above `tolerance` after the
/// iteration cap.
SvrSolution svr_solve(const Eigen::MatrixXd& kernel, std::span<const double> targets, double c,
                      double epsilon, double tolerance, long max_iterations);

/// Dual objective 1/2 a^T Q a + p^T a for the 2n-variable form.
double svr_dual_objective(const Eigen::MatrixXd& kernel, std::span<const double> targets,
                          double epsilon, std::span<const double> dual);

struct SvrModel {
  RowMatrix support_vectors;
  std::vector<double> coefficients;
  double bias = 0.0;
  double gamma = 0.0;
  double c = 0.0;
  double epsilon = 0.0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  long iterations = 0;

  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(support_vectors.cols()); }
  double predict(std::span<const double> x) const;
};

Eigen::MatrixXd kernel_matrix(const SampleSet& samples, double gamma);

SvrModel svr_train(const SampleSet& train_set, const SvrConfig& config);
std::vector<double> svr_forward(const SvrModel& model, const SampleSet& samples);
std::vector<double> svr_predict(const SvrModel& model, const Scaler& scaler,
                                const SampleSet& windows);

}  // namespace roadfriction
