#include <fstream>

#include <gtest/gtest.h>

#include "bsecnn/config.hpp"
#include "testing.hpp"

using namespace bsecnn;

namespace {

std::string config_error(const std::string& text) {
  try {
    const auto c = parse_config(text);
    validate_config(c, false);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(validate_config(RunConfig{}, false)); }

TEST(Config, ParsesEverySection) {
  const auto c = parse_config(R"(# comment
[data]
path = data/set.bsec
n_classes = 2

[model]
size = scaled
widths = 4, 8,16
dense_units = 32

[bagging]
n_models = 7
bagging_ratio = 0.65

[train]
epochs = 3
batch_size = 16
learning_rate = 0.002
beta1 = 0.85
beta2 = 0.995
epsilon = 1e-7

[ensemble]
combiner = vote
forest_trees = 40
forest_max_depth = 6
forest_max_features = 3

[split]
train = 0.5
val = 0.2
stacking = 0.2
test = 0.1

[metrics]
exclude = 0

[sweep]
grid = 0.6:20, 0.7:15

[run]
out = results
jobs = 2
precision = 64
seed = 99
)");
  EXPECT_EQ(c.dataset_path, "data/set.bsec");
  EXPECT_EQ(c.n_classes, 2u);
  EXPECT_EQ(c.widths, (std::vector<std::size_t>{4, 8, 16}));
  EXPECT_EQ(c.dense_units, 32u);
  EXPECT_EQ(c.n_models, 7u);
  EXPECT_DOUBLE_EQ(c.bagging_ratio, 0.65);
  EXPECT_DOUBLE_EQ(c.adam.eta, 0.002);
  EXPECT_DOUBLE_EQ(c.adam.epsilon, 1e-7);
  EXPECT_EQ(c.combiner, CombinerKind::vote);
  EXPECT_EQ(c.forest_max_features, 3u);
  EXPECT_DOUBLE_EQ(c.split.val, 0.2);
  EXPECT_EQ(c.metric_exclusions, (std::set<std::size_t>{0}));
  EXPECT_EQ(c.sweep_grid, (std::vector<SweepCell>{{0.6, 20}, {0.7, 15}}));
  EXPECT_EQ(c.out_dir, "results");
  EXPECT_EQ(c.precision, 64);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_NO_THROW(validate_config(c, false));
}

TEST(Config, CanonicalTextRoundTrips) {
  RunConfig c;
  c.bagging_ratio = 0.1 + 0.2;
  c.adam.eta = 3e-4;
  c.metric_exclusions = {0, 2};
  c.widths = {3};
  c.seed = 18446744073709551615ull;
  EXPECT_EQ(parse_config(to_config_text(c)), c);
  EXPECT_EQ(to_config_text(parse_config(to_config_text(c))), to_config_text(c));
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_NE(config_error("[bagging]\nbagging_ratio = 1.5\n").find("bagging.bagging_ratio"), std::string::npos);
  EXPECT_NE(config_error("[bagging]\nn_models = 0\n").find("bagging.n_models"), std::string::npos);
  EXPECT_NE(config_error("[train]\nepochs = many\n").find("train.epochs"), std::string::npos);
  EXPECT_NE(config_error("[data]\nn_classes = 3\n").find("data.n_classes"), std::string::npos);
  EXPECT_NE(config_error("[split]\ntrain = 0.9\n").find("split"), std::string::npos);
  EXPECT_NE(config_error("[ensemble]\ncombiner = median\n").find("ensemble.combiner"), std::string::npos);
  EXPECT_NE(config_error("[metrics]\nexclude = 7\n").find("metrics.exclude"), std::string::npos);
  EXPECT_NE(config_error("[run]\nprecision = 16\n").find("run.precision"), std::string::npos);
  EXPECT_NE(config_error("[bagging]\ncolour = red\n").find("bagging.colour"), std::string::npos);
  EXPECT_NE(config_error("[extra]\n").find("[extra]"), std::string::npos);
  EXPECT_NE(config_error("n_models = 3\n").find("line 1"), std::string::npos);
  EXPECT_NE(config_error("[run]\nseed\n").find("line 2"), std::string::npos);
}

TEST(Config, DatasetPathMustExistWhenRequired) {
  RunConfig c;
  EXPECT_THROW(validate_config(c, true), ConfigError);
  c.dataset_path = "/nonexistent/file.bsec";
  try {
    validate_config(c, true);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("data.path"), std::string::npos);
  }
}

TEST(Config, LoadFromFile) {
  testkit::TempDir dir("config");
  {
    std::ofstream out(dir.file("run.ini"));
    out << "[bagging]\nn_models = 4\n";
  }
  EXPECT_EQ(load_config(dir.file("run.ini")).n_models, 4u);
  EXPECT_THROW(load_config(dir.file("missing.ini")), ConfigError);
}

TEST(Config, SubSeedsDeriveFromMasterSeed) {
  RunConfig c;
  c.seed = 5;
  const auto s = derive_run_seeds(5);
  EXPECT_EQ(bagging_config(c).seed, s.bagging);
  EXPECT_EQ(train_config(c).seed, s.train);
  EXPECT_EQ(forest_params(c).seed, s.forest);
  EXPECT_NE(s.split, s.bagging);
}

TEST(Config, ModelForChecksArchitecture) {
  RunConfig c;
  EXPECT_EQ(count_params(model_for(c, {32, 32, 1})), count_params(build_scaled_cnn({32, 32, 1}, {8, 16}, 5, 64)));
  c.widths = {8, 8, 8, 8};
  EXPECT_THROW(model_for(c, {12, 12, 1}), ConfigError);
  c.model_size = ModelSize::paper;
  EXPECT_THROW(model_for(c, {32, 32, 1}), ConfigError);
  EXPECT_EQ(count_params(model_for(c, {224, 224, 3})), count_params(build_paper_cnn(5)));
}

TEST(Config, SweepGridParsing) {
  EXPECT_EQ(parse_sweep_grid("0.8:10"), (std::vector<SweepCell>{{0.8, 10}}));
  EXPECT_THROW(parse_sweep_grid("0.8-10"), ConfigError);
  EXPECT_THROW(parse_sweep_grid("x:10"), ConfigError);
}
