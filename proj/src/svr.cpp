// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "roadfriction/error.hpp"

namespace roadfriction {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Index bookkeeping for the doubled variable set: s < n is alpha_s (sign +1),
// s >= n is alpha*_{s-n} (sign -1).
struct DualView {
  const Eigen::MatrixXd& k;
  std::size_t n;

  std::size_t sample(std::size_t s) const { return s < n ? s : s - n; }
  double sign(std::size_t s) const { return s < n ? 1.0 : -1.0; }
  double q(std::size_t s, std::size_t t) const {
    return sign(s) * sign(t) * k(static_cast<Eigen::Index>(sample(s)), static_cast<Eigen::Index>(sample(t)));
  }
  double k_raw(std::size_t s, std::size_t t) const {
    return k(static_cast<Eigen::Index>(sample(s)), static_cast<Eigen::Index>(sample(t)));
  }
  double qd(std::size_t s) const {
    const auto i = static_cast<Eigen::Index>(sample(s));
    return k(i, i);
  }
};

}  // namespace

double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma) {
  if (u.size() != v.size()) throw Error(ErrorKind::kDimension, "kernel arguments differ in size");
  double sq = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    sq += d * d;
  }
  return std::exp(-gamma * sq);
}

Eigen::MatrixXd kernel_matrix(const SampleSet& samples, double gamma) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = rbf_kernel(samples.sample(static_cast<std::size_t>(i)),
                                  samples.sample(static_cast<std::size_t>(j)), gamma);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

double svr_dual_objective(const Eigen::MatrixXd& kernel, std::span<const double> targets,
                          double epsilon, std::span<const double> dual) {
  const std::size_t n = targets.size();
  Eigen::VectorXd beta(static_cast<Eigen::Index>(n));
  double linear = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    beta(static_cast<Eigen::Index>(i)) = dual[i] - dual[i + n];
    linear += (epsilon - targets[i]) * dual[i] + (epsilon + targets[i]) * dual[i + n];
  }
  return 0.5 * beta.dot(kernel * beta) + linear;
}

SvrSolution svr_solve(const Eigen::MatrixXd& kernel, std::span<const double> targets, double c,
                      double epsilon, double tolerance, long max_iterations) {
  const std::size_t n = targets.size();
  if (n == 0) throw Error(ErrorKind::kInvalidInput, "empty training split");
  if (kernel.rows() != static_cast<Eigen::Index>(n) || kernel.cols() != kernel.rows()) {
    throw Error(ErrorKind::kDimension, "kernel matrix does not match the targets");
  }
  if (!(c > 0.0) || !(epsilon > 0.0) || !(tolerance > 0.0)) {
    throw Error(ErrorKind::kInvalidInput, "C, epsilon and tolerance must be positive");
  }
  if (max_iterations <= 0) max_iterations = std::max(10'000'000L, 100L * static_cast<long>(n));

  const DualView q{kernel, n};
  const std::size_t m = 2 * n;
  std::vector<double> a(m, 0.0);
  std::vector<double> g(m);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = epsilon - targets[i];
    g[i + n] = epsilon + targets[i];
  }
  auto at_upper = [&](std::size_t s) { return a[s] >= c; };
  auto at_lower = [&](std::size_t s) { return a[s] <= 0.0; };

  SvrSolution sol;
  double gap = kInf;
  long iter = 0;
  for (;; ++iter) {
    // Maximal violating index i by first-order information.
    double gmax = -kInf;
    std::size_t i = m;
    for (std::size_t s = 0; s < m; ++s) {
      const double ys = q.sign(s);
      if ((ys > 0 && !at_upper(s)) || (ys < 0 && !at_lower(s))) {
        if (-ys * g[s] >= gmax) {
          gmax = -ys * g[s];
          i = s;
        }
      }
    }
    // Partner j by second-order gain.
    double gmax2 = -kInf;
    double best_obj = kInf;
    std::size_t j = m;
    for (std::size_t t = 0; t < m; ++t) {
      const double yt = q.sign(t);
      double grad_diff;
      if (yt > 0) {
        if (at_lower(t)) continue;
        grad_diff = gmax + g[t];
        gmax2 = std::max(gmax2, g[t]);
      } else {
        if (at_upper(t)) continue;
        grad_diff = gmax - g[t];
        gmax2 = std::max(gmax2, -g[t]);
      }
      if (i < m && grad_diff > 0.0) {
        double quad = q.qd(i) + q.qd(t) - 2.0 * q.k_raw(i, t);
        if (quad <= 0.0) quad = kTau;
        const double obj = -(grad_diff * grad_diff) / quad;
        if (obj <= best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    gap = gmax + gmax2;
    if (gap < tolerance || i == m || j == m) break;
    if (iter >= max_iterations) throw ConvergenceError(iter, gap);

    const double old_i = a[i];
    const double old_j = a[j];
    if (q.sign(i) != q.sign(j)) {
      double quad = q.qd(i) + q.qd(j) + 2.0 * q.q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-g[i] - g[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) {
          a[j] = 0.0;
          a[i] = diff;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = -diff;
      }
      if (diff > 0.0) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = c - diff;
        }
      } else if (a[j] > c) {
        a[j] = c;
        a[i] = c + diff;
      }
    } else {
      double quad = q.qd(i) + q.qd(j) - 2.0 * q.q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (g[i] - g[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > c) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = sum - c;
        }
      } else if (a[j] < 0.0) {
        a[j] = 0.0;
        a[i] = sum;
      }
      if (sum > c) {
        if (a[j] > c) {
          a[j] = c;
          a[i] = sum - c;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = sum;
      }
    }
    const double di = a[i] - old_i;
    const double dj = a[j] - old_j;
    for (std::size_t s = 0; s < m; ++s) g[s] += q.q(i, s) * di + q.q(j, s) * dj;
  }

  // Bias from free variables, or the midpoint of the feasible interval.
  double ub = kInf, lb = -kInf, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t s = 0; s < m; ++s) {
    const double yg = q.sign(s) * g[s];
    if (at_upper(s)) {
      if (q.sign(s) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (at_lower(s)) {
      if (q.sign(s) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);

  sol.dual = a;
  sol.coefficients.resize(n);
  for (std::size_t i = 0; i < n; ++i) sol.coefficients[i] = a[i] - a[i + n];
  sol.bias = -rho;
  sol.iterations = iter;
  sol.kkt_residual = std::max(0.0, gap);
  sol.objective = svr_dual_objective(kernel, targets, epsilon, a);
  return sol;
}

double SvrModel::predict(std::span<const double> x) const {
  if (x.size() != input_dim()) throw Error(ErrorKind::kDimension, "SVR input size mismatch");
  double f = bias;
  for (Eigen::Index j = 0; j < support_vectors.rows(); ++j) {
    const auto row = support_vectors.row(j);
    f += coefficients[static_cast<std::size_t>(j)] *
         rbf_kernel({row.data(), static_cast<std::size_t>(row.size())}, x, gamma);
  }
  return f;
}

SvrModel svr_train(const SampleSet& train_set, const SvrConfig& config) {
  if (train_set.size() == 0) throw Error(ErrorKind::kInvalidInput, "empty training split");
  const double gamma = config.gamma > 0.0
                           ? config.gamma
                           : 1.0 / static_cast<double>(train_set.sample_stride());
  const Eigen::MatrixXd k = kernel_matrix(train_set, gamma);
  const SvrSolution sol =
      svr_solve(k, train_set.targets, config.c, config.epsilon, config.tolerance, config.max_iterations);

  SvrModel model;
  model.gamma = gamma;
  model.c = config.c;
  model.epsilon = config.epsilon;
  model.bias = sol.bias;
  model.objective = sol.objective;
  model.kkt_residual = sol.kkt_residual;
  model.iterations = sol.iterations;
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < sol.coefficients.size(); ++i) {
    if (sol.coefficients[i] != 0.0) support.push_back(i);
  }
  const std::size_t d = train_set.sample_stride();
  model.support_vectors.resize(static_cast<Eigen::Index>(support.size()), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < support.size(); ++r) {
    auto s = train_set.sample(support[r]);
    for (std::size_t c = 0; c < d; ++c) {
      model.support_vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = s[c];
    }
    model.coefficients.push_back(sol.coefficients[support[r]]);
  }
  return model;
}

std::vector<double> svr_forward(const SvrModel& model, const SampleSet& samples) {
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = model.predict(samples.sample(i));
  return out;
}

std::vector<double> svr_predict(const SvrModel& model, const Scaler& scaler,
                                const SampleSet& windows) {
  if (!scaler.fitted()) throw Error(ErrorKind::kState, "scaler has not been fitted");
  std::vector<double> out = svr_forward(model, scaler.transform_inputs(windows));
  for (double& y : out) y = scaler.invert_target(y);
  return out;
}

}  // namespace roadfriction
