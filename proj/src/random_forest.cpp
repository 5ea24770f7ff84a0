// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/random_forest.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "roadfriction/error.hpp"
#include "roadfriction/random.hpp"

namespace roadfriction {

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double sse = std::numeric_limits<double>::infinity();
};

constexpr double kTieTolerance = 1e-12;

class TreeBuilder {
 public:
  TreeBuilder(const SampleSet& data, std::size_t max_features, std::uint64_t seed)
      : data_(data),
        dim_(data.sample_stride()),
        max_features_(max_features == 0 ? dim_ : std::min(max_features, dim_)),
        rng_(seed) {}

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    grow(std::move(rows));
    return std::move(nodes_);
  }

 private:
  double x(std::size_t row, std::size_t feature) const {
    return data_.inputs[row * dim_ + feature];
  }

  std::size_t grow(std::vector<std::size_t> rows) {
    const std::size_t id = nodes_.size();
    nodes_.emplace_back();
    double sum = 0.0;
    for (std::size_t r : rows) sum += data_.targets[r];
    nodes_[id].n_samples = rows.size();
    nodes_[id].value = sum / static_cast<double>(rows.size());

    const double first = data_.targets[rows.front()];
    const bool pure = std::all_of(rows.begin(), rows.end(),
                                  [&](std::size_t r) { return data_.targets[r] == first; });
    if (rows.size() < 2 || pure) return id;

    const SplitChoice best = best_split(rows);
    if (best.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(r);
    }
    if (left.empty() || right.empty()) return id;
    nodes_[id].feature = best.feature;
    nodes_[id].threshold = best.threshold;
    rows.clear();
    rows.shrink_to_fit();
    const std::size_t l = grow(std::move(left));
    const std::size_t r = grow(std::move(right));
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> features(dim_);
    std::iota(features.begin(), features.end(), std::size_t{0});
    if (max_features_ < dim_) {
      rng_.shuffle(std::span<std::size_t>(features));
      features.resize(max_features_);
      std::sort(features.begin(), features.end());
    }
    return features;
  }

  SplitChoice best_split(const std::vector<std::size_t>& rows) {
    SplitChoice best;
    const std::size_t n = rows.size();
    std::vector<std::pair<double, double>> column(n);  // (x, y)
    for (std::size_t f : candidate_features()) {
      for (std::size_t k = 0; k < n; ++k) column[k] = {x(rows[k], f), data_.targets[rows[k]]};
      std::sort(column.begin(), column.end());
      double total = 0.0, total_sq = 0.0;
      for (const auto& [xv, yv] : column) {
        total += yv;
        total_sq += yv * yv;
      }
      double left_sum = 0.0, left_sq = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left_sum += column[k].second;
        left_sq += column[k].second * column[k].second;
        if (column[k].first == column[k + 1].first) continue;
        const auto nl = static_cast<double>(k + 1);
        const auto nr = static_cast<double>(n - k - 1);
        const double right_sum = total - left_sum;
        const double sse = (left_sq - left_sum * left_sum / nl) +
                           ((total_sq - left_sq) - right_sum * right_sum / nr);
        // Different features often induce the same partition; rounding must not
        // pick the winner, so near-ties keep the earlier feature and threshold.
        if (sse < best.sse - kTieTolerance) {
          best.sse = sse;
          best.feature = static_cast<int>(f);
          // Adjacent doubles can have a midpoint equal to the upper value.
          const double mid = 0.5 * (column[k].first + column[k + 1].first);
          best.threshold = mid < column[k + 1].first ? mid : column[k].first;
        }
      }
    }
    return best;
  }

  const SampleSet& data_;
  std::size_t dim_;
  std::size_t max_features_;
  Rng rng_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

double RegressionTree::predict(std::span<const double> x) const {
  if (nodes_.empty()) throw Error(ErrorKind::kState, "tree has not been fitted");
  std::size_t id = 0;
  while (!nodes_[id].is_leaf()) {
    const TreeNode& n = nodes_[id];
    id = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[id].value;
}

std::size_t RegressionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes_[id].is_leaf()) {
      stack.emplace_back(nodes_[id].left, d + 1);
      stack.emplace_back(nodes_[id].right, d + 1);
    }
  }
  return deepest;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

RegressionTree fit_tree(const SampleSet& data, std::span<const std::size_t> rows,
                        std::size_t max_features, std::uint64_t seed) {
  if (rows.empty()) throw Error(ErrorKind::kInvalidInput, "cannot fit a tree on no samples");
  TreeBuilder builder(data, max_features, seed);
  return RegressionTree(builder.build({rows.begin(), rows.end()}));
}

double ForestModel::predict(std::span<const double> x) const {
  if (trees.empty()) throw Error(ErrorKind::kState, "forest has not been fitted");
  if (x.size() != input_dim) throw Error(ErrorKind::kDimension, "forest input size mismatch");
  double sum = 0.0;
  for (const RegressionTree& t : trees) sum += t.predict(x);
  return sum / static_cast<double>(trees.size());
}

ForestModel rf_train(const SampleSet& train_set, const ForestConfig& config) {
  if (train_set.size() == 0) throw Error(ErrorKind::kInvalidInput, "empty training split");
  if (config.n_trees == 0) throw Error(ErrorKind::kInvalidInput, "n_trees must be >= 1");
  ForestModel model;
  model.input_dim = train_set.sample_stride();
  model.seed = config.seed;
  const std::size_t n = train_set.size();
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(config.seed, t);
    std::vector<std::size_t> rows(n);
    if (config.bootstrap) {
      Rng rng(derive_seed(tree_seed, 0xb007));
      for (std::size_t& r : rows) r = rng.uniform_index(n);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    model.trees.push_back(fit_tree(train_set, rows, config.max_features, tree_seed));
  }
  return model;
}

std::vector<double> rf_forward(const ForestModel& model, const SampleSet& samples) {
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = model.predict(samples.sample(i));
  return out;
}

std::vector<double> rf_predict(const ForestModel& model, const Scaler& scaler,
                               const SampleSet& windows) {
  if (!scaler.fitted()) throw Error(ErrorKind::kState, "scaler has not been fitted");
  std::vector<double> out = rf_forward(model, scaler.transform_inputs(windows));
  for (double& y : out) y = scaler.invert_target(y);
  return out;
}

}  // namespace roadfriction
