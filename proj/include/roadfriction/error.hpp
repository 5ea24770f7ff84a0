// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace roadfriction {

enum class ErrorKind {
  kInvalidInput,
  kInfeasibleK,
  kEmptyCluster,
  kThresholdUnreachable,
  kEmptySegment,
  kParse,
  kRange,
  kEnum,
  kIo,
  kInsufficientData,
  kDimension,
  kDivergence,
  kConvergence,
  kState,
  kSchema,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base of every error raised by the toolkit. The kind lets callers (and the
/// CLI) map failures to diagnostics without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorKind::kParse, "line " + std::to_string(line) + ": " + message),
        line_(line) {}
  ParseError(ErrorKind kind, std::size_t line, const std::string& message)
      : Error(kind, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ThresholdUnreachableError : public Error {
 public:
  ThresholdUnreachableError(std::size_t best_k, double best_max_rate)
      : Error(ErrorKind::kThresholdUnreachable,
              "no K satisfies the mixture threshold; best K = " + std::to_string(best_k) +
                  " with max mixture rate " + std::to_string(best_max_rate)),
        best_k_(best_k),
        best_max_rate_(best_max_rate) {}

  std::size_t best_k() const noexcept { return best_k_; }
  double best_max_rate() const noexcept { return best_max_rate_; }

 private:
  std::size_t best_k_;
  double best_max_rate_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, double learning_rate)
      : Error(ErrorKind::kDivergence, "non-finite loss at epoch " + std::to_string(epoch) +
                                          " (learning rate " + std::to_string(learning_rate) +
                                          ")"),
        epoch_(epoch),
        learning_rate_(learning_rate) {}

  int epoch() const noexcept { return epoch_; }
  double learning_rate() const noexcept { return learning_rate_; }

 private:
  int epoch_;
  double learning_rate_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(long iterations, double residual)
      : Error(ErrorKind::kConvergence, "solver did not converge after " +
                                           std::to_string(iterations) +
                                           " iterations; KKT residual " + std::to_string(residual)),
        iterations_(iterations),
        residual_(residual) {}

  long iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  long iterations_;
  double residual_;
};

}  // namespace roadfriction
