#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bsecnn/error.hpp"

namespace bsecnn {

/// Row-major real feature table.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * cols, cols);
  }
};

/// 1 - sum_k (count_k / total)^2. Throws InputError on an empty node.
double gini_impurity(std::span<const std::size_t> label_counts);

/// Split nodes send rows with x[feature] <= threshold to `left`.
struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t label = 0;  // majority label of the node's training rows

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features);

  int predict(std::span<const double> row) const;
  std::size_t depth() const;
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t n_features() const noexcept { return n_features_; }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;  // nodes_[0] is the root
  std::size_t n_features_ = 0;
};

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 12;
  /// Candidate features per split; 0 means ceil(sqrt(n_features)).
  std::size_t max_features = 0;
  /// Resample rows with replacement per tree; false trains every tree on all rows.
  bool bootstrap = true;
  std::uint64_t seed = 0;

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

/// Greedy Gini tree over the given rows. Splits are taken at midpoints of
/// consecutive distinct values and only when they strictly lower the
/// weighted impurity; ties go to the earlier candidate feature, then the
/// lower threshold. `candidate_features` features are drawn per node.
DecisionTree fit_tree(const FeatureMatrix& features, std::span<const int> labels,
                      std::size_t n_classes, std::span<const std::size_t> rows,
                      std::size_t max_depth, std::size_t candidate_features, std::uint64_t seed);

class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(std::vector<DecisionTree> trees, std::size_t n_features, std::size_t n_classes,
               ForestParams params);

  /// Majority vote of the trees; ties go to the lowest class.
  int predict(std::span<const double> row) const;
  std::vector<int> predict(const FeatureMatrix& features) const;

  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  std::size_t n_features() const noexcept { return n_features_; }
  std::size_t n_classes() const noexcept { return n_classes_; }
  const ForestParams& params() const noexcept { return params_; }

  friend bool operator==(const RandomForest&, const RandomForest&) = default;

 private:
  std::vector<DecisionTree> trees_;
  std::size_t n_features_ = 0;
  std::size_t n_classes_ = 0;
  ForestParams params_;
};

/// Tree t sees Rng(derive_seed(params.seed, t)) for its resample and its
/// per-node feature draws. n_classes = 0 infers max(label) + 1.
RandomForest fit_forest(const FeatureMatrix& features, std::span<const int> labels,
                        const ForestParams& params, std::size_t n_classes = 0);

}  // namespace bsecnn
