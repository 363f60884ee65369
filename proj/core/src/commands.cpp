#include "bsecnn/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <numeric>

#include <fmt/format.h>

#include "bsecnn/binary_io.hpp"
#include "bsecnn/checkpoint.hpp"
#include "bsecnn/combiners.hpp"

namespace bsecnn {
namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("run.out: cannot create '" + dir + "': " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

template <typename T>
SampleView<T> view_of(const LabeledSet<T>& data, const std::vector<std::size_t>& indices) {
  return SampleView<T>{&data, indices};
}

DatasetSplit split_for(const RunConfig& config, const DatasetContainer& data, std::uint64_t split_seed) {
  const auto labels = class_labels(data, config.n_classes);
  return split_dataset(labels, config.split, split_seed);
}

// Bag draws expressed as dataset indices rather than train-part positions.
BagAssignment bags_in_dataset(const BagAssignment& bags, const std::vector<std::size_t>& train_indices,
                              std::size_t population) {
  BagAssignment out{population, {}};
  for (const auto& bag : bags.bags) {
    BagEntry entry;
    for (auto p : bag.indices) entry.indices.push_back(train_indices[p]);
    for (auto p : bag.out_of_bag) entry.out_of_bag.push_back(train_indices[p]);
    out.bags.push_back(std::move(entry));
  }
  return out;
}

void write_report_files(const EvalReport& report, const std::string& dir, const std::string& prefix) {
  write_text_file(join_path(dir, prefix + "confusion_matrix.csv"), report.confusion.to_csv());
  write_text_file(join_path(dir, prefix + "metrics.csv"), metrics_csv(report));
  write_text_file(join_path(dir, prefix + "report.txt"), report_text(report));
}

template <typename T>
EvalReport train_impl(const RunConfig& config) {
  const auto container = load_container(config.dataset_path);
  const auto seeds = derive_run_seeds(config.seed);
  const auto split = split_for(config, container, seeds.split);
  const auto data = to_labeled_set<T>(container, config.n_classes);

  auto ensemble = fit_ensemble(config, data, split);
  ensure_dir(config.out_dir);
  save_checkpoint(Checkpoint<T>{ensemble, config, seeds}, join_path(config.out_dir, "checkpoint.bsec"));
  for (std::size_t k = 0; k < ensemble.histories.size(); ++k) {
    write_text_file(join_path(config.out_dir, fmt::format("history_model_{}.csv", k)), ensemble.histories[k].to_csv());
  }
  write_text_file(join_path(config.out_dir, "bags.csv"),
                  bags_in_dataset(ensemble.bags, split.train, container.size()).to_csv());

  auto report = evaluate_ensemble(ensemble, ensemble.combiner, data, split.test, "test", config.metric_exclusions,
                                  config.jobs);
  write_report_files(report, config.out_dir, "");
  return report;
}

template <typename T>
EvalReport eval_impl(const std::string& checkpoint_path, const std::string& dataset_path, const std::string& split_name,
                     const std::string& out_dir, std::size_t jobs) {
  const auto ck = load_checkpoint<T>(checkpoint_path);
  const auto container = load_container(dataset_path);
  if (container.image_shape() != ck.ensemble.spec.input_shape) {
    throw DimensionError("dataset images are " + shape_to_string(container.image_shape()) +
                         " but the checkpoint model expects " + shape_to_string(ck.ensemble.spec.input_shape));
  }
  const auto split = split_for(ck.config, container, ck.seeds.split);
  const auto data = to_labeled_set<T>(container, ck.config.n_classes);
  const auto indices = split_part(split, split_name, container.size());
  auto report =
      evaluate_ensemble(ck.ensemble, ck.ensemble.combiner, data, indices, split_name, ck.config.metric_exclusions, jobs);
  ensure_dir(out_dir);
  write_report_files(report, out_dir, "eval_");
  return report;
}

template <typename T>
std::vector<SweepRow> sweep_impl(const RunConfig& config) {
  const auto container = load_container(config.dataset_path);
  const auto seeds = derive_run_seeds(config.seed);
  const auto split = split_for(config, container, seeds.split);
  const auto data = to_labeled_set<T>(container, config.n_classes);

  std::vector<SweepRow> rows;
  for (const auto& cell : config.sweep_grid) {
    SweepRow row{cell.bagging_ratio, cell.n_models, std::nullopt, {}};
    try {
      RunConfig cell_config = config;
      cell_config.bagging_ratio = cell.bagging_ratio;
      cell_config.n_models = cell.n_models;
      validate_config(cell_config, false);
      const auto ensemble = fit_ensemble(cell_config, data, split);
      row.accuracy = evaluate_ensemble(ensemble, ensemble.combiner, data, split.test, "test", {}, config.jobs).accuracy;
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  ensure_dir(config.out_dir);
  write_text_file(join_path(config.out_dir, "sweep.csv"), sweep_csv(rows));
  write_text_file(join_path(config.out_dir, "sweep.txt"), sweep_table(rows));
  return rows;
}

template <typename T>
std::vector<CombinerRow> compare_impl(const RunConfig& config, const std::string& checkpoint_path) {
  EnsembleModel<T> ensemble;
  RunConfig used = config;
  RunSeeds seeds = derive_run_seeds(config.seed);
  if (!checkpoint_path.empty()) {
    auto ck = load_checkpoint<T>(checkpoint_path);
    ensemble = std::move(ck.ensemble);
    used = ck.config;
    used.dataset_path = config.dataset_path.empty() ? used.dataset_path : config.dataset_path;
    seeds = ck.seeds;
  }
  const auto container = load_container(used.dataset_path);
  if (!checkpoint_path.empty() && container.image_shape() != ensemble.spec.input_shape) {
    throw DimensionError("dataset images are " + shape_to_string(container.image_shape()) +
                         " but the checkpoint model expects " + shape_to_string(ensemble.spec.input_shape));
  }
  const auto split = split_for(used, container, seeds.split);
  const auto data = to_labeled_set<T>(container, used.n_classes);
  if (checkpoint_path.empty()) ensemble = fit_ensemble(used, data, split);
  if (!ensemble.forest) {
    throw ConfigError("split.stacking: the ensemble has no stacking forest; a non-empty stacking split is required");
  }

  std::vector<CombinerRow> rows;
  for (auto kind : {CombinerKind::average, CombinerKind::vote, CombinerKind::stacking}) {
    const auto report =
        evaluate_ensemble(ensemble, kind, data, split.test, "test", used.metric_exclusions, config.jobs);
    rows.push_back({kind, report.micro});
  }
  ensure_dir(config.out_dir);
  write_text_file(join_path(config.out_dir, "combiners.csv"), combiners_csv(rows));
  write_text_file(join_path(config.out_dir, "combiners.txt"), combiners_table(rows));
  return rows;
}

}  // namespace

std::vector<std::size_t> split_part(const DatasetSplit& split, const std::string& name, std::size_t population) {
  if (name == "train") return split.train;
  if (name == "val") return split.val;
  if (name == "stacking") return split.stacking;
  if (name == "test") return split.test;
  if (name == "all") {
    std::vector<std::size_t> all(population);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  throw ConfigError("split: expected one of all, train, val, stacking, test; got '" + name + "'");
}

std::vector<int> class_labels(const DatasetContainer& data, std::size_t n_classes) {
  const auto& src = n_classes == 2 ? data.labels_binary : data.labels_multi;
  return std::vector<int>(src.begin(), src.end());
}

template <typename T>
EnsembleModel<T> fit_ensemble(const RunConfig& config, const LabeledSet<T>& data, const DatasetSplit& split) {
  const auto spec = model_for(config, data.sample_shape());
  std::optional<SampleView<T>> validation;
  if (!split.val.empty()) validation = view_of(data, split.val);
  auto ensemble = train_ensemble(view_of(data, split.train), spec, bagging_config(config), train_config(config),
                                 config.jobs, validation);
  ensemble.combiner = config.combiner;
  if (!split.stacking.empty()) {
    ensemble.forest = fit_stacking(ensemble, view_of(data, split.stacking), forest_params(config), config.jobs);
  } else if (config.combiner == CombinerKind::stacking) {
    throw ConfigError("split.stacking: stacking needs a non-empty stacking split");
  }
  return ensemble;
}

template <typename T>
EvalReport evaluate_ensemble(const EnsembleModel<T>& ensemble, CombinerKind combiner, const LabeledSet<T>& data,
                             const std::vector<std::size_t>& indices, const std::string& split_name,
                             const std::set<std::size_t>& excluded, std::size_t jobs) {
  if (indices.empty()) throw InputError("split '" + split_name + "' is empty");
  const auto view = view_of(data, indices);
  const auto truths = view.labels();
  const auto probs = ensemble_predict_probs(ensemble, view.batch(), jobs);
  const auto predictions = combine(combiner, probs, ensemble.forest ? &*ensemble.forest : nullptr);

  EvalReport r;
  r.split = split_name;
  r.combiner = combiner;
  r.excluded = excluded;
  r.confusion = confusion(predictions, truths, ensemble.n_classes());
  r.accuracy = accuracy(r.confusion);
  r.binary_accuracy = ensemble.n_classes() == 2
                          ? r.accuracy
                          : accuracy(confusion(binarize_labels(predictions), binarize_labels(truths), 2));
  r.micro = micro_metrics(r.confusion, excluded);
  r.macro = macro_metrics(r.confusion);

  const std::size_t b = probs.dim(1), c = probs.dim(2);
  for (std::size_t m = 0; m < probs.dim(0); ++m) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < b; ++i) {
      const auto row = probs.data().subspan((m * b + i) * c, c);
      if (static_cast<int>(argmax<T>(row)) == truths[i]) ++correct;
    }
    r.member_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(b));
  }
  return r;
}

EvalReport cmd_train(const RunConfig& config) {
  validate_config(config, true);
  return config.precision == 64 ? train_impl<double>(config) : train_impl<float>(config);
}

EvalReport cmd_eval(const std::string& checkpoint_path, const std::string& dataset_path, const std::string& split,
                    const std::string& out_dir, std::size_t jobs) {
  if (jobs == 0) throw ConfigError("run.jobs: must be at least 1");
  const auto precision = checkpoint_precision(read_file_bytes(checkpoint_path));
  return precision == 64 ? eval_impl<double>(checkpoint_path, dataset_path, split, out_dir, jobs)
                         : eval_impl<float>(checkpoint_path, dataset_path, split, out_dir, jobs);
}

std::vector<SweepRow> cmd_sweep(const RunConfig& config) {
  validate_config(config, true);
  if (config.sweep_grid.empty()) throw ConfigError("sweep.grid: at least one cell required");
  return config.precision == 64 ? sweep_impl<double>(config) : sweep_impl<float>(config);
}

std::vector<CombinerRow> cmd_compare_combiners(const RunConfig& config, const std::string& checkpoint_path) {
  if (checkpoint_path.empty()) {
    validate_config(config, true);
    return config.precision == 64 ? compare_impl<double>(config, "") : compare_impl<float>(config, "");
  }
  if (config.jobs == 0) throw ConfigError("run.jobs: must be at least 1");
  const auto precision = checkpoint_precision(read_file_bytes(checkpoint_path));
  return precision == 64 ? compare_impl<double>(config, checkpoint_path) : compare_impl<float>(config, checkpoint_path);
}

void cmd_dataset_synth(const SynthOptions& options, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
  save_container(synth_dataset(options), path);
}

std::string cmd_dataset_inspect(const std::string& path) {
  const auto d = load_container(path);
  std::vector<std::size_t> multi(5, 0), binary(2, 0);
  for (auto l : d.labels_multi) ++multi[l];
  for (auto l : d.labels_binary) ++binary[l];
  const auto values = d.images.data();
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());

  std::string out = fmt::format("samples: {}\nimage shape: {}\npixel range: [{:.4f}, {:.4f}]  mean {:.4f}\n", d.size(),
                                shape_to_string(d.image_shape()), *lo, *hi, mean);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < 5; ++k) rows.push_back({std::to_string(k), std::to_string(multi[k])});
  out += "\n" + format_table({"class", "count"}, rows);
  out += fmt::format("\nbinary: {} negative, {} positive\n", binary[0], binary[1]);
  out += "metadata: " + (d.metadata.empty() ? std::string("(none)") : d.metadata) + "\n";
  return out;
}

template EnsembleModel<float> fit_ensemble(const RunConfig&, const LabeledSet<float>&, const DatasetSplit&);
template EnsembleModel<double> fit_ensemble(const RunConfig&, const LabeledSet<double>&, const DatasetSplit&);
template EvalReport evaluate_ensemble(const EnsembleModel<float>&, CombinerKind, const LabeledSet<float>&,
                                      const std::vector<std::size_t>&, const std::string&,
                                      const std::set<std::size_t>&, std::size_t);
template EvalReport evaluate_ensemble(const EnsembleModel<double>&, CombinerKind, const LabeledSet<double>&,
                                      const std::vector<std::size_t>&, const std::string&,
                                      const std::set<std::size_t>&, std::size_t);

}  // namespace bsecnn
