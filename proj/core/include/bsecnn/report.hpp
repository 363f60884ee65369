#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bsecnn/bagging.hpp"
#include "bsecnn/metrics.hpp"

namespace bsecnn {

/// Columns padded to their widest cell, separated by two spaces, with a
/// dashed rule under the header. The first column is left-aligned, the rest
/// right-aligned.
std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

struct SweepRow {
  double bagging_ratio = 0;
  std::size_t n_models = 0;
  std::optional<double> accuracy;  // empty when the cell failed
  std::string error;
};

/// bagging_ratio,n_models,accuracy; failed cells read "failed".
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string sweep_table(const std::vector<SweepRow>& rows);

struct CombinerRow {
  CombinerKind method = CombinerKind::average;
  MetricTriple micro;
};

/// method,precision_micro,recall_micro,f1_micro
std::string combiners_csv(const std::vector<CombinerRow>& rows);
std::string combiners_table(const std::vector<CombinerRow>& rows);

/// Evaluation of one ensemble on one split.
struct EvalReport {
  std::string split;
  CombinerKind combiner = CombinerKind::stacking;
  ConfusionMatrix confusion;
  double accuracy = 0;
  /// Accuracy after mapping predictions and truths to negative/positive.
  double binary_accuracy = 0;
  MetricTriple micro;
  MetricTriple macro;
  std::set<std::size_t> excluded;
  std::vector<double> member_accuracy;
};

/// metric,value rows.
std::string metrics_csv(const EvalReport& report);
/// Human-readable summary with the confusion matrix.
std::string report_text(const EvalReport& report);

}  // namespace bsecnn
