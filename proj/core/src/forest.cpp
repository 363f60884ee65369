#include "bsecnn/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bsecnn/random.hpp"

namespace bsecnn {
namespace {

struct SplitChoice {
  std::int32_t feature = -1;
  double threshold = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const int> y, std::size_t n_classes,
              std::size_t max_depth, std::size_t candidates, std::uint64_t seed)
      : x_(x), y_(y), n_classes_(n_classes), max_depth_(max_depth),
        candidates_(std::clamp<std::size_t>(candidates, 1, x.cols)), rng_(seed) {}

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return std::move(nodes_);
  }

 private:
  std::int32_t grow(std::vector<std::size_t>& rows, std::size_t depth) {
    std::vector<std::size_t> counts(n_classes_, 0);
    for (auto r : rows) ++counts[static_cast<std::size_t>(y_[r])];
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({});
    nodes_[id].label = static_cast<std::int32_t>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());

    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
    if (depth >= max_depth_ || pure || rows.size() < 2) return id;

    const SplitChoice split = best_split(rows, counts);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (x_.at(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes_[id].feature = split.feature;
    nodes_[id].threshold = split.threshold;
    const auto l = grow(left, depth + 1);
    const auto r = grow(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  std::vector<std::size_t> draw_features() {
    std::vector<std::size_t> f(x_.cols);
    std::iota(f.begin(), f.end(), 0);
    if (candidates_ >= x_.cols) return f;
    for (std::size_t i = 0; i < candidates_; ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.below(x_.cols - i));
      std::swap(f[i], f[j]);
    }
    f.resize(candidates_);
    std::sort(f.begin(), f.end());
    return f;
  }

  // Minimizing weighted Gini is maximizing sum_k cL_k^2 / nL + sum_k cR_k^2 / nR.
  SplitChoice best_split(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& counts) {
    const std::size_t n = rows.size();
    std::uint64_t parent_sq = 0;
    for (auto c : counts) parent_sq += static_cast<std::uint64_t>(c) * c;
    double best = static_cast<double>(parent_sq) / static_cast<double>(n);
    best *= 1.0 + 1e-12;
    SplitChoice choice;

    std::vector<std::size_t> order(rows);
    for (const auto f : draw_features()) {
      std::stable_sort(order.begin(), order.end(),
                       [&](auto a, auto b) { return x_.at(a, f) < x_.at(b, f); });
      std::vector<std::size_t> left(n_classes_, 0), right(counts);
      std::uint64_t sq_left = 0, sq_right = parent_sq;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto c = static_cast<std::size_t>(y_[order[i]]);
        sq_left += 2 * left[c] + 1;
        sq_right -= 2 * right[c] - 1;
        ++left[c];
        --right[c];
        const double a = x_.at(order[i], f), b = x_.at(order[i + 1], f);
        if (!(a < b)) continue;
        const auto nl = static_cast<double>(i + 1), nr = static_cast<double>(n - i - 1);
        const double score = static_cast<double>(sq_left) / nl + static_cast<double>(sq_right) / nr;
        if (score > best) {
          best = score;
          double mid = a + (b - a) / 2.0;
          if (!(mid < b)) mid = a;
          choice = {static_cast<std::int32_t>(f), mid};
        }
      }
    }
    return choice;
  }

  const FeatureMatrix& x_;
  std::span<const int> y_;
  std::size_t n_classes_;
  std::size_t max_depth_;
  std::size_t candidates_;
  Rng rng_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

double gini_impurity(std::span<const std::size_t> label_counts) {
  std::size_t total = 0;
  for (auto c : label_counts) total += c;
  if (total == 0) throw InputError("gini_impurity: empty node");
  double sum_sq = 0;
  for (auto c : label_counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features)
    : nodes_(std::move(nodes)), n_features_(n_features) {
  if (nodes_.empty()) throw InputError("decision tree needs at least a root node");
  const auto n = static_cast<std::int32_t>(nodes_.size());
  for (const auto& node : nodes_) {
    if (node.is_leaf()) continue;
    if (static_cast<std::size_t>(node.feature) >= n_features_ || node.left <= 0 || node.right <= 0 ||
        node.left >= n || node.right >= n) {
      throw InputError("decision tree node references an invalid feature or child");
    }
  }
}

int DecisionTree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  // Children always follow their parent, so this walk terminates.
  while (!nodes_[i].is_leaf()) {
    const auto& node = nodes_[i];
    const auto next = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    if (static_cast<std::size_t>(next) <= i) throw InputError("decision tree contains a cycle");
    i = static_cast<std::size_t>(next);
  }
  return nodes_[i].label;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes_[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

DecisionTree fit_tree(const FeatureMatrix& features, std::span<const int> labels,
                      std::size_t n_classes, std::span<const std::size_t> rows,
                      std::size_t max_depth, std::size_t candidate_features, std::uint64_t seed) {
  if (features.cols == 0) throw InputError("fit_tree: feature matrix has no columns");
  if (rows.empty()) throw InputError("fit_tree: no training rows");
  TreeBuilder builder(features, labels, n_classes, max_depth, candidate_features, seed);
  return DecisionTree(builder.build(std::vector<std::size_t>(rows.begin(), rows.end())), features.cols);
}

RandomForest::RandomForest(std::vector<DecisionTree> trees, std::size_t n_features,
                           std::size_t n_classes, ForestParams params)
    : trees_(std::move(trees)), n_features_(n_features), n_classes_(n_classes), params_(params) {
  if (trees_.empty()) throw InputError("random forest needs at least one tree");
  if (n_classes_ == 0) throw InputError("random forest needs at least one class");
  for (const auto& t : trees_) {
    if (t.n_features() != n_features_) throw InputError("tree feature count differs from forest");
    for (const auto& node : t.nodes()) {
      if (node.label < 0 || static_cast<std::size_t>(node.label) >= n_classes_) {
        throw InputError("tree leaf label outside the forest's classes");
      }
    }
  }
}

int RandomForest::predict(std::span<const double> row) const {
  if (row.size() != n_features_) {
    throw DimensionError("forest expects " + std::to_string(n_features_) + " features, got " +
                         std::to_string(row.size()));
  }
  std::vector<std::size_t> votes(n_classes_, 0);
  for (const auto& t : trees_) ++votes[static_cast<std::size_t>(t.predict(row))];
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

std::vector<int> RandomForest::predict(const FeatureMatrix& features) const {
  std::vector<int> out;
  out.reserve(features.rows);
  for (std::size_t r = 0; r < features.rows; ++r) out.push_back(predict(features.row(r)));
  return out;
}

RandomForest fit_forest(const FeatureMatrix& features, std::span<const int> labels,
                        const ForestParams& params, std::size_t n_classes) {
  if (features.cols == 0) throw InputError("fit_forest: feature matrix has no columns (d = 0)");
  if (features.rows == 0) throw InputError("fit_forest: no training rows");
  if (labels.size() != features.rows) {
    throw DimensionError("fit_forest: " + std::to_string(features.rows) + " rows vs " +
                         std::to_string(labels.size()) + " labels");
  }
  if (params.n_trees == 0) throw InputError("fit_forest: n_trees must be at least 1");
  int top = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw LabelError("negative forest label", i);
    top = std::max(top, labels[i]);
  }
  if (n_classes == 0) n_classes = static_cast<std::size_t>(top) + 1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (static_cast<std::size_t>(labels[i]) >= n_classes) {
      throw LabelError("forest label outside [0, " + std::to_string(n_classes) + ")", i);
    }
  }

  const std::size_t candidates =
      params.max_features > 0
          ? params.max_features
          : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(features.cols))));

  std::vector<DecisionTree> trees;
  trees.reserve(params.n_trees);
  std::vector<std::size_t> rows(features.rows);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(params.seed, t));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rows[i] = params.bootstrap ? static_cast<std::size_t>(rng.below(features.rows)) : i;
    }
    trees.push_back(fit_tree(features, labels, n_classes, rows, params.max_depth, candidates, rng.next_u64()));
  }
  return RandomForest(std::move(trees), features.cols, n_classes, params);
}

}  // namespace bsecnn
