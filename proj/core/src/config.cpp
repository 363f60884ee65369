#include "bsecnn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "bsecnn/combiners.hpp"
#include "bsecnn/random.hpp"

namespace bsecnn {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::size_t to_size(std::string_view v, const std::string& field) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", field, v));
  }
  return static_cast<std::size_t>(out);
}

std::uint64_t to_u64(std::string_view v, const std::string& field) { return to_size(v, field); }

double to_double(std::string_view v, const std::string& field) {
  double out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc() || ptr != end || !std::isfinite(out)) {
    throw ConfigError(fmt::format("{}: expected a finite number, got '{}'", field, v));
  }
  return out;
}

template <typename Range>
std::string join(const Range& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ", ";
    out += fmt::format("{}", item);
  }
  return out;
}

struct Field {
  std::string_view section;
  std::string_view key;
  std::function<void(RunConfig&, std::string_view, const std::string&)> parse;
  std::function<std::string(const RunConfig&)> print;
};

template <typename Member>
Field size_field(std::string_view section, std::string_view key, Member member) {
  return {section, key, [member](RunConfig& c, std::string_view v, const std::string& f) { c.*member = to_size(v, f); },
          [member](const RunConfig& c) { return fmt::format("{}", c.*member); }};
}

template <typename Member>
Field double_field(std::string_view section, std::string_view key, Member member) {
  return {section, key, [member](RunConfig& c, std::string_view v, const std::string& f) { c.*member = to_double(v, f); },
          [member](const RunConfig& c) { return fmt::format("{}", c.*member); }};
}

Field adam_field(std::string_view key, double AdamHyper::*member) {
  return {"train", key, [member](RunConfig& c, std::string_view v, const std::string& f) { c.adam.*member = to_double(v, f); },
          [member](const RunConfig& c) { return fmt::format("{}", c.adam.*member); }};
}

Field split_field(std::string_view key, double SplitFractions::*member) {
  return {"split", key, [member](RunConfig& c, std::string_view v, const std::string& f) { c.split.*member = to_double(v, f); },
          [member](const RunConfig& c) { return fmt::format("{}", c.split.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"data", "path", [](RunConfig& c, std::string_view v, const std::string&) { c.dataset_path = std::string(v); },
       [](const RunConfig& c) { return c.dataset_path; }},
      size_field("data", "n_classes", &RunConfig::n_classes),
      {"model", "size",
       [](RunConfig& c, std::string_view v, const std::string& f) {
         if (v == "paper") {
           c.model_size = ModelSize::paper;
         } else if (v == "scaled") {
           c.model_size = ModelSize::scaled;
         } else {
           throw ConfigError(fmt::format("{}: expected 'paper' or 'scaled', got '{}'", f, v));
         }
       },
       [](const RunConfig& c) { return std::string(c.model_size == ModelSize::paper ? "paper" : "scaled"); }},
      {"model", "widths",
       [](RunConfig& c, std::string_view v, const std::string& f) {
         c.widths.clear();
         for (auto item : split_list(v, ',')) c.widths.push_back(to_size(item, f));
       },
       [](const RunConfig& c) { return join(c.widths); }},
      size_field("model", "dense_units", &RunConfig::dense_units),
      size_field("bagging", "n_models", &RunConfig::n_models),
      double_field("bagging", "bagging_ratio", &RunConfig::bagging_ratio),
      size_field("train", "epochs", &RunConfig::epochs),
      size_field("train", "batch_size", &RunConfig::batch_size),
      adam_field("learning_rate", &AdamHyper::eta),
      adam_field("beta1", &AdamHyper::beta1),
      adam_field("beta2", &AdamHyper::beta2),
      adam_field("epsilon", &AdamHyper::epsilon),
      {"ensemble", "combiner",
       [](RunConfig& c, std::string_view v, const std::string& f) {
         try {
           c.combiner = parse_combiner(std::string(v));
         } catch (const ConfigError& e) {
           throw ConfigError(fmt::format("{}: {}", f, e.what()));
         }
       },
       [](const RunConfig& c) { return combiner_name(c.combiner); }},
      size_field("ensemble", "forest_trees", &RunConfig::forest_trees),
      size_field("ensemble", "forest_max_depth", &RunConfig::forest_max_depth),
      size_field("ensemble", "forest_max_features", &RunConfig::forest_max_features),
      split_field("train", &SplitFractions::train),
      split_field("val", &SplitFractions::val),
      split_field("stacking", &SplitFractions::stacking),
      split_field("test", &SplitFractions::test),
      {"metrics", "exclude",
       [](RunConfig& c, std::string_view v, const std::string& f) {
         c.metric_exclusions.clear();
         for (auto item : split_list(v, ',')) c.metric_exclusions.insert(to_size(item, f));
       },
       [](const RunConfig& c) { return join(c.metric_exclusions); }},
      {"sweep", "grid",
       [](RunConfig& c, std::string_view v, const std::string& f) {
         try {
           c.sweep_grid = parse_sweep_grid(v);
         } catch (const ConfigError& e) {
           throw ConfigError(fmt::format("{}: {}", f, e.what()));
         }
       },
       [](const RunConfig& c) {
         std::vector<std::string> cells;
         for (const auto& cell : c.sweep_grid) cells.push_back(fmt::format("{}:{}", cell.bagging_ratio, cell.n_models));
         return join(cells);
       }},
      {"run", "out", [](RunConfig& c, std::string_view v, const std::string&) { c.out_dir = std::string(v); },
       [](const RunConfig& c) { return c.out_dir; }},
      size_field("run", "jobs", &RunConfig::jobs),
      {"run", "precision",
       [](RunConfig& c, std::string_view v, const std::string& f) { c.precision = static_cast<int>(to_size(v, f)); },
       [](const RunConfig& c) { return fmt::format("{}", c.precision); }},
      {"run", "seed", [](RunConfig& c, std::string_view v, const std::string& f) { c.seed = to_u64(v, f); },
       [](const RunConfig& c) { return fmt::format("{}", c.seed); }},
  };
  return table;
}

}  // namespace

RunSeeds derive_run_seeds(std::uint64_t seed) {
  return {derive_seed(seed, 0), derive_seed(seed, 1), derive_seed(seed, 2), derive_seed(seed, 3)};
}

BaggingConfig bagging_config(const RunConfig& c) {
  return {c.n_models, c.bagging_ratio, derive_run_seeds(c.seed).bagging};
}

TrainConfig train_config(const RunConfig& c) {
  return {c.epochs, c.batch_size, c.adam, derive_run_seeds(c.seed).train};
}

ForestParams forest_params(const RunConfig& c) {
  ForestParams p = default_stacking_params(derive_run_seeds(c.seed).forest);
  p.n_trees = c.forest_trees;
  p.max_depth = c.forest_max_depth;
  p.max_features = c.forest_max_features;
  return p;
}

ModelSpec model_for(const RunConfig& c, const Shape& image_shape) {
  if (c.model_size == ModelSize::paper) {
    if (image_shape != Shape{224, 224, 3}) {
      throw ConfigError("model.size: the full-size network needs 224x224x3 images, dataset has " +
                        shape_to_string(image_shape));
    }
    return build_paper_cnn(c.n_classes);
  }
  try {
    auto spec = build_scaled_cnn(image_shape, c.widths, c.n_classes, c.dense_units);
    infer_shapes(spec);
    return spec;
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("model.widths: ") + e.what());
  }
}

std::vector<SweepCell> parse_sweep_grid(std::string_view text) {
  std::vector<SweepCell> grid;
  for (auto item : split_list(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw ConfigError(fmt::format("sweep cell '{}' must be bagging_ratio:n_models", item));
    }
    grid.push_back({to_double(trim(item.substr(0, colon)), "bagging_ratio"),
                    to_size(trim(item.substr(colon + 1)), "n_models")});
  }
  return grid;
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::string section;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const auto raw = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;

    const auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(fmt::format("line {}: unterminated section header", line_no));
      section = std::string(trim(line.substr(1, line.size() - 2)));
      const bool known = std::any_of(fields().begin(), fields().end(),
                                     [&](const Field& f) { return f.section == section; });
      if (!known) throw ConfigError(fmt::format("line {}: unknown section [{}]", line_no, section));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("line {}: expected key = value", line_no));
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(fmt::format("line {}: key '{}' outside any section", line_no, key));
    const auto it = std::find_if(fields().begin(), fields().end(),
                                 [&](const Field& f) { return f.section == section && f.key == key; });
    const std::string name = fmt::format("{}.{}", section, key);
    if (it == fields().end()) throw ConfigError(fmt::format("line {}: unknown key '{}'", line_no, name));
    it->parse(config, value, name);
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string to_config_text(const RunConfig& config) {
  std::string out;
  std::string_view section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += '\n';
      section = f.section;
      out += fmt::format("[{}]\n", section);
    }
    out += fmt::format("{} = {}\n", f.key, f.print(config));
  }
  return out;
}

void validate_config(const RunConfig& c, bool need_dataset) {
  auto fail = [](std::string_view field, const std::string& why) {
    throw ConfigError(fmt::format("{}: {}", field, why));
  };
  if (need_dataset) {
    if (c.dataset_path.empty()) fail("data.path", "required");
    std::ifstream probe(c.dataset_path, std::ios::binary);
    if (!probe) fail("data.path", "cannot open '" + c.dataset_path + "'");
  }
  if (c.n_classes != 2 && c.n_classes != 5) fail("data.n_classes", "must be 2 or 5");
  if (c.model_size == ModelSize::scaled && c.widths.empty()) fail("model.widths", "at least one conv width required");
  for (auto w : c.widths) {
    if (w == 0) fail("model.widths", "widths must be positive");
  }
  if (c.dense_units == 0) fail("model.dense_units", "must be positive");
  if (c.n_models == 0) fail("bagging.n_models", "must be at least 1");
  if (!(c.bagging_ratio > 0.0 && c.bagging_ratio <= 1.0)) fail("bagging.bagging_ratio", "must lie in (0, 1]");
  if (c.epochs == 0) fail("train.epochs", "must be at least 1");
  if (c.batch_size == 0) fail("train.batch_size", "must be at least 1");
  if (!(c.adam.eta > 0)) fail("train.learning_rate", "must be positive");
  if (!(c.adam.beta1 >= 0 && c.adam.beta1 < 1)) fail("train.beta1", "must lie in [0, 1)");
  if (!(c.adam.beta2 >= 0 && c.adam.beta2 < 1)) fail("train.beta2", "must lie in [0, 1)");
  if (!(c.adam.epsilon > 0)) fail("train.epsilon", "must be positive");
  if (c.forest_trees == 0) fail("ensemble.forest_trees", "must be at least 1");
  if (c.forest_max_depth == 0) fail("ensemble.forest_max_depth", "must be at least 1");
  const double fr[4] = {c.split.train, c.split.val, c.split.stacking, c.split.test};
  const char* fr_names[4] = {"split.train", "split.val", "split.stacking", "split.test"};
  for (int i = 0; i < 4; ++i) {
    if (!(fr[i] >= 0 && fr[i] <= 1)) fail(fr_names[i], "must lie in [0, 1]");
  }
  if (std::abs(fr[0] + fr[1] + fr[2] + fr[3] - 1.0) > 1e-9) fail("split", "fractions must sum to 1");
  if (!(c.split.train > 0)) fail("split.train", "must be positive");
  if (!(c.split.test > 0)) fail("split.test", "must be positive");
  if (c.combiner == CombinerKind::stacking && !(c.split.stacking > 0)) {
    fail("split.stacking", "must be positive when ensemble.combiner = stacking");
  }
  for (auto k : c.metric_exclusions) {
    if (k >= c.n_classes) fail("metrics.exclude", fmt::format("class {} outside [0, {})", k, c.n_classes));
  }
  if (c.metric_exclusions.size() >= c.n_classes) fail("metrics.exclude", "cannot exclude every class");
  if (c.out_dir.empty()) fail("run.out", "required");
  if (c.jobs == 0) fail("run.jobs", "must be at least 1");
  if (c.precision != 32 && c.precision != 64) fail("run.precision", "must be 32 or 64");
}

}  // namespace bsecnn
