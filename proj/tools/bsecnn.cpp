// bsecnn command-line front end.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bsecnn/commands.hpp"
#include "bsecnn/config.hpp"
#include "bsecnn/error.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
  std::optional<int> precision;
};

bsecnn::RunConfig resolve_config(const GlobalFlags& g, const std::string& data_path) {
  auto config = g.config_path.empty() ? bsecnn::RunConfig{} : bsecnn::load_config(g.config_path);
  if (g.seed) config.seed = *g.seed;
  if (g.jobs) config.jobs = *g.jobs;
  if (g.out) config.out_dir = *g.out;
  if (g.precision) config.precision = *g.precision;
  if (!data_path.empty()) config.dataset_path = data_path;
  return config;
}

int exit_code(bsecnn::ErrorCategory category) {
  switch (category) {
    case bsecnn::ErrorCategory::config: return kExitConfig;
    case bsecnn::ErrorCategory::numeric: return kExitNumeric;
    case bsecnn::ErrorCategory::data: break;
  }
  return kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bagging and stacking ensembles of small CNNs"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config_path, "Run configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--jobs", g.jobs, "Worker threads for sub-model training")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--precision", g.precision, "Scalar width")->check(CLI::IsMember({32, 64}));

  std::string data_path;
  std::string checkpoint_path;
  std::string split = "test";
  std::string grid;

  auto* train = app.add_subcommand("train", "Train an ensemble and report test metrics");
  train->add_option("--data", data_path, "Dataset container (overrides data.path)");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  eval->add_option("--data", data_path, "Dataset container");
  eval->add_option("--split", split, "all, train, val, stacking or test")
      ->check(CLI::IsMember({"all", "train", "val", "stacking", "test"}));

  auto* sweep = app.add_subcommand("sweep", "Train and evaluate every (bagging_ratio, n_models) cell");
  sweep->add_option("--data", data_path, "Dataset container (overrides data.path)");
  sweep->add_option("--grid", grid, "Cells as ratio:n_models, comma separated (overrides sweep.grid)");

  auto* compare = app.add_subcommand("compare-combiners", "Micro metrics of average, vote and stacking");
  compare->add_option("--checkpoint", checkpoint_path, "Use a trained checkpoint instead of training");
  compare->add_option("--data", data_path, "Dataset container (overrides data.path)");

  auto* dataset = app.add_subcommand("dataset", "Dataset container utilities");
  dataset->require_subcommand(1);
  bsecnn::SynthOptions synth_options;
  std::string synth_output;
  auto* synth = dataset->add_subcommand("synth", "Write a synthetic pattern dataset");
  synth->add_option("--output", synth_output, "Container path")->required();
  synth->add_option("--per-class", synth_options.n_per_class, "Samples per class")->capture_default_str();
  synth->add_option("--classes", synth_options.n_classes, "Number of classes (1 to 5)")->capture_default_str();
  synth->add_option("--size", synth_options.image_size, "Image height and width")->capture_default_str();
  synth->add_option("--channels", synth_options.channels, "Channels per pixel")->capture_default_str();
  synth->add_option("--noise", synth_options.noise, "Uniform noise amplitude")->capture_default_str();
  std::string inspect_path;
  auto* inspect = dataset->add_subcommand("inspect", "Summarize a dataset container");
  inspect->add_option("path", inspect_path, "Container path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) {
      const auto report = bsecnn::cmd_train(resolve_config(g, data_path));
      std::cout << bsecnn::report_text(report);
    } else if (*eval) {
      auto config = resolve_config(g, data_path);
      if (config.dataset_path.empty()) throw bsecnn::ConfigError("data.path: eval needs --data or a config file");
      const auto report =
          bsecnn::cmd_eval(checkpoint_path, config.dataset_path, split, config.out_dir, config.jobs);
      std::cout << bsecnn::report_text(report);
    } else if (*sweep) {
      auto config = resolve_config(g, data_path);
      if (!grid.empty()) config.sweep_grid = bsecnn::parse_sweep_grid(grid);
      const auto rows = bsecnn::cmd_sweep(config);
      std::cout << bsecnn::sweep_table(rows);
      for (const auto& row : rows) {
        if (!row.accuracy) {
          std::cerr << fmt::format("cell ({}, {}) failed: {}\n", row.bagging_ratio, row.n_models, row.error);
        }
      }
    } else if (*compare) {
      const auto rows = bsecnn::cmd_compare_combiners(resolve_config(g, data_path), checkpoint_path);
      std::cout << bsecnn::combiners_table(rows);
    } else if (*synth) {
      synth_options.seed = g.seed.value_or(0);
      bsecnn::cmd_dataset_synth(synth_options, synth_output);
      std::cout << fmt::format("wrote {} samples to {}\n", synth_options.n_per_class * synth_options.n_classes,
                               synth_output);
    } else if (*inspect) {
      std::cout << bsecnn::cmd_dataset_inspect(inspect_path);
    }
  } catch (const bsecnn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
