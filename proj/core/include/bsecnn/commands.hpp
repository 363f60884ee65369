#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "bsecnn/bagging.hpp"
#include "bsecnn/config.hpp"
#include "bsecnn/dataset.hpp"
#include "bsecnn/report.hpp"
#include "bsecnn/samples.hpp"

namespace bsecnn {

/// Split names accepted by evaluation: all, train, val, stacking, test.
std::vector<std::size_t> split_part(const DatasetSplit& split, const std::string& name, std::size_t population);

/// Trains the ensemble on the train part and, when the stacking part is
/// non-empty, fits the stacking forest on it. Validation curves use the val part.
template <typename T>
EnsembleModel<T> fit_ensemble(const RunConfig& config, const LabeledSet<T>& data, const DatasetSplit& split);

/// Predictions under `combiner` plus per-member accuracy on the given indices.
template <typename T>
EvalReport evaluate_ensemble(const EnsembleModel<T>& ensemble, CombinerKind combiner, const LabeledSet<T>& data,
                             const std::vector<std::size_t>& indices, const std::string& split_name,
                             const std::set<std::size_t>& excluded, std::size_t jobs);

/// Labels of the configured class view, used to stratify the split.
std::vector<int> class_labels(const DatasetContainer& data, std::size_t n_classes);

/// Writes checkpoint.bsec, history_model_<k>.csv, bags.csv,
/// confusion_matrix.csv, metrics.csv and report.txt into config.out_dir.
EvalReport cmd_train(const RunConfig& config);

/// Re-evaluates a checkpoint on a split of a dataset (recomputed from the
/// checkpoint's seeds) and writes eval_metrics.csv, eval_confusion_matrix.csv
/// and eval_report.txt. Never modifies the checkpoint.
EvalReport cmd_eval(const std::string& checkpoint_path, const std::string& dataset_path, const std::string& split,
                    const std::string& out_dir, std::size_t jobs);

/// One train/evaluate run per grid cell on the test split; failures are
/// recorded per cell. Writes sweep.csv and sweep.txt.
std::vector<SweepRow> cmd_sweep(const RunConfig& config);

/// Average, vote and stacking on the same sub-models and test split. With a
/// non-empty checkpoint path the ensemble is loaded, otherwise trained.
/// Writes combiners.csv and combiners.txt.
std::vector<CombinerRow> cmd_compare_combiners(const RunConfig& config, const std::string& checkpoint_path);

void cmd_dataset_synth(const SynthOptions& options, const std::string& path);
std::string cmd_dataset_inspect(const std::string& path);

}  // namespace bsecnn
