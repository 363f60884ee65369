#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace bsecnn {

/// C x C counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n_classes = 0) : n_(n_classes), counts_(n_classes * n_classes, 0) {}
  ConfusionMatrix(std::size_t n_classes, std::vector<std::uint64_t> counts);

  std::size_t n_classes() const noexcept { return n_; }
  std::uint64_t& at(std::size_t truth, std::size_t predicted) { return counts_[truth * n_ + predicted]; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * n_ + predicted]; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

  std::uint64_t total() const;
  std::uint64_t true_positives(std::size_t k) const { return at(k, k); }
  std::uint64_t false_positives(std::size_t k) const;  // column k off-diagonal
  std::uint64_t false_negatives(std::size_t k) const;  // row k off-diagonal

  /// truth\pred header row then one row per class.
  std::string to_csv() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

/// Throws LabelError naming the first out-of-range position.
ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> truths, std::size_t n_classes);

struct MetricTriple {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  /// Set when any ratio hit 0/0 and was reported as 0.
  bool zero_division = false;
};

/// TP/FP/FN pooled over the non-excluded classes, then
/// P = TP / (TP + FP), R = TP / (TP + FN), F1 = 2PR / (P + R).
/// Throws UndefinedMetricError when the pooled TP, FP and FN are all zero.
MetricTriple micro_metrics(const ConfusionMatrix& cm, const std::set<std::size_t>& excluded = {});

/// Unweighted mean of per-class one-vs-rest precision, recall and F1.
MetricTriple macro_metrics(const ConfusionMatrix& cm);

double accuracy(const ConfusionMatrix& cm);

/// 0 (negative) stays 0; classes 1..4 (any finding) map to 1.
int binarize_label(int label);
std::vector<int> binarize_labels(std::span<const int> labels);

}  // namespace bsecnn
