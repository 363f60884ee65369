#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bsecnn/bagging.hpp"
#include "bsecnn/dataset.hpp"
#include "bsecnn/forest.hpp"
#include "bsecnn/model.hpp"
#include "bsecnn/train.hpp"

namespace bsecnn {

enum class ModelSize : std::uint8_t { paper = 0, scaled = 1 };

struct SweepCell {
  double bagging_ratio = 1.0;
  std::size_t n_models = 1;
  friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

/// Everything a run depends on besides the input files. Sub-seeds for the
/// split, bags, training and the stacking forest all derive from `seed`.
struct RunConfig {
  std::string dataset_path;
  std::size_t n_classes = 5;

  ModelSize model_size = ModelSize::scaled;
  std::vector<std::size_t> widths{8, 16};
  std::size_t dense_units = 64;

  std::size_t n_models = 10;
  double bagging_ratio = 1.0;

  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  AdamHyper adam;

  CombinerKind combiner = CombinerKind::stacking;
  std::size_t forest_trees = 100;
  std::size_t forest_max_depth = 12;
  std::size_t forest_max_features = 0;

  SplitFractions split;
  std::set<std::size_t> metric_exclusions;

  std::vector<SweepCell> sweep_grid{{0.6, 20}, {0.7, 15}, {0.8, 10}};

  std::string out_dir = "out";
  std::size_t jobs = 1;
  int precision = 32;
  std::uint64_t seed = 0;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Sub-seeds in derivation order.
struct RunSeeds {
  std::uint64_t split = 0;
  std::uint64_t bagging = 0;
  std::uint64_t train = 0;
  std::uint64_t forest = 0;

  friend bool operator==(const RunSeeds&, const RunSeeds&) = default;
};

RunSeeds derive_run_seeds(std::uint64_t seed);

BaggingConfig bagging_config(const RunConfig& config);
TrainConfig train_config(const RunConfig& config);
ForestParams forest_params(const RunConfig& config);

/// Architecture for images of the given [H, W, C] shape. The full-size
/// network requires 224x224x3 input.
ModelSpec model_for(const RunConfig& config, const Shape& image_shape);

/// Parses section/key = value text. Blank lines and lines starting with
/// '#' or ';' are ignored. Errors name the offending field and line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Canonical text form; parse_config(to_config_text(c)) == c.
std::string to_config_text(const RunConfig& config);

/// Range checks on every numeric field; with `need_dataset`, also checks that
/// dataset_path names a readable file. Throws ConfigError naming the field.
void validate_config(const RunConfig& config, bool need_dataset);

/// "0.6:20, 0.7:15" style grid.
std::vector<SweepCell> parse_sweep_grid(std::string_view text);

}  // namespace bsecnn
