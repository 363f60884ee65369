#include "bsecnn/metrics.hpp"

#include <fmt/format.h>

#include "bsecnn/error.hpp"

namespace bsecnn {
namespace {

double ratio(std::uint64_t num, std::uint64_t den, bool& zero_division) {
  if (den == 0) {
    zero_division = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes, std::vector<std::uint64_t> counts)
    : n_(n_classes), counts_(std::move(counts)) {
  if (counts_.size() != n_ * n_) {
    throw DimensionError("confusion matrix needs " + std::to_string(n_ * n_) + " cells, got " +
                         std::to_string(counts_.size()));
  }
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

std::uint64_t ConfusionMatrix::false_positives(std::size_t k) const {
  std::uint64_t s = 0;
  for (std::size_t t = 0; t < n_; ++t) {
    if (t != k) s += at(t, k);
  }
  return s;
}

std::uint64_t ConfusionMatrix::false_negatives(std::size_t k) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < n_; ++p) {
    if (p != k) s += at(k, p);
  }
  return s;
}

std::string ConfusionMatrix::to_csv() const {
  std::string out = "truth\\pred";
  for (std::size_t p = 0; p < n_; ++p) out += fmt::format(",{}", p);
  out += "\n";
  for (std::size_t t = 0; t < n_; ++t) {
    out += std::to_string(t);
    for (std::size_t p = 0; p < n_; ++p) out += fmt::format(",{}", at(t, p));
    out += "\n";
  }
  return out;
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> truths, std::size_t n_classes) {
  if (predictions.size() != truths.size()) {
    throw DimensionError("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(truths.size()) + " truths");
  }
  ConfusionMatrix cm(n_classes);
  const auto c = static_cast<int>(n_classes);
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] < 0 || truths[i] >= c) throw LabelError("true label " + std::to_string(truths[i]) + " out of range", i);
    if (predictions[i] < 0 || predictions[i] >= c) {
      throw LabelError("predicted label " + std::to_string(predictions[i]) + " out of range", i);
    }
    ++cm.at(static_cast<std::size_t>(truths[i]), static_cast<std::size_t>(predictions[i]));
  }
  return cm;
}

MetricTriple micro_metrics(const ConfusionMatrix& cm, const std::set<std::size_t>& excluded) {
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t k = 0; k < cm.n_classes(); ++k) {
    if (excluded.contains(k)) continue;
    tp += cm.true_positives(k);
    fp += cm.false_positives(k);
    fn += cm.false_negatives(k);
  }
  if (tp + fp + fn == 0) {
    throw UndefinedMetricError("micro metrics undefined: no true positives, false positives or false negatives "
                               "among the included classes");
  }
  MetricTriple m;
  m.precision = ratio(tp, tp + fp, m.zero_division);
  m.recall = ratio(tp, tp + fn, m.zero_division);
  m.f1 = harmonic(m.precision, m.recall);
  return m;
}

MetricTriple macro_metrics(const ConfusionMatrix& cm) {
  if (cm.n_classes() == 0) throw InputError("macro metrics need at least one class");
  MetricTriple m;
  for (std::size_t k = 0; k < cm.n_classes(); ++k) {
    const auto tp = cm.true_positives(k);
    const double p = ratio(tp, tp + cm.false_positives(k), m.zero_division);
    const double r = ratio(tp, tp + cm.false_negatives(k), m.zero_division);
    m.precision += p;
    m.recall += r;
    m.f1 += harmonic(p, r);
  }
  const auto n = static_cast<double>(cm.n_classes());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw InputError("accuracy of an empty confusion matrix");
  std::uint64_t trace = 0;
  for (std::size_t k = 0; k < cm.n_classes(); ++k) trace += cm.at(k, k);
  return static_cast<double>(trace) / static_cast<double>(total);
}

int binarize_label(int label) {
  if (label < 0 || label >= 5) throw LabelError("multi-class label " + std::to_string(label) + " outside [0, 5)", 0);
  return label == 0 ? 0 : 1;
}

std::vector<int> binarize_labels(std::span<const int> labels) {
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= 5) {
      throw LabelError("multi-class label " + std::to_string(labels[i]) + " outside [0, 5)", i);
    }
    out[i] = labels[i] == 0 ? 0 : 1;
  }
  return out;
}

}  // namespace bsecnn
