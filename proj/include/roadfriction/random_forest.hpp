// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "roadfriction/dataset.hpp"

namespace roadfriction {

struct ForestConfig {
  std::size_t n_trees = 10;
  bool bootstrap = true;
  /// Features examined per split; 0 means all of them.
  std::size_t max_features = 0;
  std::uint64_t seed = 0;
};

struct TreeNode {
  /// -1 marks a leaf.
  int feature = -1;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  double value = 0.0;
  std::size_t n_samples = 0;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// CART regression tree. Node 0 is the root; children follow in pre-order.
/// Samples with x[feature] <= threshold go left.
class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

 private:
  std::vector<TreeNode> nodes_;
};

/// Grows a tree on the rows of `data` listed in `rows` (duplicates allowed),
/// splitting on squared-error reduction until a node is pure or has fewer than
/// two samples. Candidate thresholds are midpoints between consecutive
/// distinct values; ties go to the lowest feature, then the lowest threshold.
RegressionTree fit_tree(const SampleSet& data, std::span<const std::size_t> rows,
                        std::size_t max_features, std::uint64_t seed);

struct ForestModel {
  std::vector<RegressionTree> trees;
  std::size_t input_dim = 0;
  std::uint64_t seed = 0;

  /// Mean of the tree predictions, summed in tree order.
  double predict(std::span<const double> x) const;
};

ForestModel rf_train(const SampleSet& train_set, const ForestConfig& config);
std::vector<double> rf_forward(const ForestModel& model, const SampleSet& samples);
/// Friction-scale predictions for raw windows, through the shared scaler.
std::vector<double> rf_predict(const ForestModel& model, const Scaler& scaler,
                               const SampleSet& windows);

}  // namespace roadfriction
