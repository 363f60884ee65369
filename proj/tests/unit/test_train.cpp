#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "adam_oracle.hpp"
#include "bsecnn/dataset.hpp"
#include "bsecnn/random.hpp"
#include "bsecnn/train.hpp"
#include "gradcheck.hpp"
#include "testing.hpp"

using namespace bsecnn;

TEST(SparseCce, HandComputedMean) {
  Tensor64 probs({2, 3}, {0.7, 0.2, 0.1, 0.25, 0.25, 0.5});
  const std::vector<int> labels{0, 2};
  EXPECT_NEAR(sparse_cce(probs, labels), -(std::log(0.7) + std::log(0.5)) / 2, 1e-15);
}

TEST(SparseCce, ClampsZeroProbability) {
  Tensor64 probs({1, 2}, {1.0, 0.0});
  const std::vector<int> labels{1};
  EXPECT_NEAR(sparse_cce(probs, labels), -std::log(kProbabilityFloor), 1e-9);
}

TEST(SparseCce, RejectsOutOfRangeLabel) {
  Tensor64 probs({2, 2}, {0.5, 0.5, 0.5, 0.5});
  const std::vector<int> labels{0, 2};
  try {
    sparse_cce(probs, labels);
    FAIL();
  } catch (const LabelError& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(SparseCce, ProbabilityGradientMatchesFiniteDifferences) {
  testkit::Gen gen(12);
  auto probs = gen.tensor<double>({4, 3}, 0.1, 0.9);
  const auto labels = gen.labels(4, 3);
  const auto analytic = sparse_cce_prob_grad(probs, labels);
  EXPECT_LT(testkit::compare_fd(probs, analytic, [&] { return sparse_cce(probs, labels); }), 1e-4);
}

TEST(Adam, MatchesScalarOracleOverManySteps) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    EXPECT_LT(testkit::adam_trajectory_error(seed, 50, AdamHyper{}), 1e-12);
    EXPECT_LT(testkit::adam_trajectory_error(seed, 20, AdamHyper{0.01, 0.8, 0.99, 1e-6}), 1e-12);
  }
}

TEST(Adam, ZeroGradientIsAFixedPoint) {
  EXPECT_TRUE(testkit::adam_zero_gradient_fixed_point(3, 25));
}

TEST(Adam, FirstStepMovesByEtaOverSqrtOfGSquaredPlusEps) {
  ParamSet<double> p;
  p.groups.push_back({"dense", 0, Tensor64({1, 1}, {1.0}), Tensor64({1}, {0.0})});
  auto g = p.zeros_like();
  g.groups[0].weights[0] = 0.5;
  auto state = AdamState<double>::fresh(p);
  adam_step(p, g, state);
  EXPECT_EQ(state.t, 1u);
  EXPECT_NEAR(p.groups[0].weights[0], 1.0 - 0.001 * 0.5 / std::sqrt(0.25 + 1e-8), 1e-15);
}

TEST(Adam, NonFiniteGradientRaises) {
  ParamSet<double> p;
  p.groups.push_back({"dense", 0, Tensor64({1, 1}, {1.0}), Tensor64({1}, {0.0})});
  auto g = p.zeros_like();
  g.groups[0].bias[0] = std::numeric_limits<double>::quiet_NaN();
  auto state = AdamState<double>::fresh(p);
  EXPECT_THROW(adam_step(p, g, state), NumericError);
}

namespace {

LabeledSet<float> small_synthetic(std::uint64_t seed) {
  SynthOptions o;
  o.n_per_class = 12;
  o.image_size = 12;
  o.seed = seed;
  return to_labeled_set<float>(synth_dataset(o), 5);
}

}  // namespace

TEST(TrainSubmodel, DeterministicGivenSeed) {
  const auto data = small_synthetic(1);
  const auto spec = build_scaled_cnn({12, 12, 1}, {4}, 5, 16);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.seed = 5;
  const auto a = train_submodel(spec, full_view(data), cfg);
  const auto b = train_submodel(spec, full_view(data), cfg);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.history.to_csv(), b.history.to_csv());
}

TEST(TrainSubmodel, LossFallsAndFirstEpochStartsNearLogC) {
  const auto data = small_synthetic(2);
  const auto spec = build_scaled_cnn({12, 12, 1}, {6}, 5, 24);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 10;
  cfg.seed = 1;
  const auto fresh = evaluate(spec, init_params<float>(spec, derive_seed(cfg.seed, 0)), full_view(data));
  EXPECT_NEAR(fresh.loss, std::log(5.0), 0.1 * std::log(5.0));
  const auto r = train_submodel(spec, full_view(data), cfg);
  ASSERT_EQ(r.history.epochs.size(), 6u);
  EXPECT_LT(r.history.epochs.back().train_loss, r.history.epochs.front().train_loss);
}

TEST(TrainSubmodel, HistoryCsvHasNanWithoutValidation) {
  const auto data = small_synthetic(3);
  const auto spec = build_scaled_cnn({12, 12, 1}, {2}, 5, 4);
  TrainConfig cfg;
  cfg.epochs = 1;
  const auto csv = train_submodel(spec, full_view(data), cfg).history.to_csv();
  EXPECT_EQ(csv.rfind("epoch,train_loss,train_acc,val_loss,val_acc\n", 0), 0u);
  EXPECT_NE(csv.find(",nan,nan"), std::string::npos);
}

TEST(TrainSubmodel, RejectsBadLabelsAndEmptyViews) {
  auto data = small_synthetic(4);
  const auto spec = build_scaled_cnn({12, 12, 1}, {2}, 5, 4);
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train_submodel(spec, SampleView<float>{&data, {}}, cfg), InputError);
  data.labels[7] = 9;
  EXPECT_THROW(train_submodel(spec, full_view(data), cfg), LabelError);
}

TEST(Argmax, LowestIndexWinsTies) {
  const std::vector<double> v{0.2, 0.4, 0.4, 0.0};
  EXPECT_EQ(argmax<double>(v), 1u);
}
