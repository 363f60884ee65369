#include <cmath>

#include <gtest/gtest.h>

#include "bsecnn/model.hpp"
#include "gradcheck.hpp"
#include "testing.hpp"

using namespace bsecnn;

namespace {

// Parameter count from first principles: conv k*k*cin*cout + cout, dense n*m + m.
std::size_t oracle_param_count(std::size_t side, std::size_t channels, const std::vector<std::size_t>& widths,
                               std::size_t hidden, std::size_t classes) {
  std::size_t total = 0;
  for (auto w : widths) {
    total += 9 * channels * w + w;
    side = (side - 2) / 2;
    channels = w;
  }
  const std::size_t flat = side * side * channels;
  return total + flat * hidden + hidden + hidden * classes + classes;
}

}  // namespace

TEST(Model, FullNetworkParameterCount) {
  const auto spec = build_paper_cnn(10);
  EXPECT_EQ(count_params(spec), 9683658u);
  EXPECT_EQ(count_params(spec), oracle_param_count(224, 3, {32, 64, 128, 128}, 512, 10));
}

TEST(Model, FullNetworkShapeTrace) {
  const std::vector<Shape> want = {{222, 222, 32}, {111, 111, 32}, {109, 109, 64}, {54, 54, 64},
                                   {52, 52, 128},  {26, 26, 128},  {24, 24, 128},  {12, 12, 128},
                                   {18432},        {512},          {10}};
  EXPECT_EQ(shape_trace(build_paper_cnn(10)), want);
}

TEST(Model, SummaryListsKerasNamesAndTotals) {
  const auto text = model_summary(build_paper_cnn(10));
  EXPECT_NE(text.find("conv2d_3"), std::string::npos);
  EXPECT_NE(text.find("max_pooling2d_3"), std::string::npos);
  EXPECT_NE(text.find("dense_1"), std::string::npos);
  EXPECT_NE(text.find("9437696"), std::string::npos);
  EXPECT_NE(text.find("Total params: 9,683,658"), std::string::npos);
  EXPECT_EQ(text.find("re_lu"), std::string::npos);
}

TEST(Model, ScaledParameterCountMatchesOracle) {
  testkit::Gen gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t side = 16 + gen.index(24);
    const std::size_t channels = 1 + gen.index(3);
    const std::size_t classes = 2 + gen.index(4);
    const std::size_t hidden = 1 + gen.index(40);
    const std::vector<std::size_t> widths{1 + gen.index(8), 1 + gen.index(8)};
    const auto spec = build_scaled_cnn({side, side, channels}, widths, classes, hidden);
    EXPECT_EQ(count_params(spec), oracle_param_count(side, channels, widths, hidden, classes));
  }
}

TEST(Model, InferShapesNamesTheCollapsingLayer) {
  try {
    infer_shapes(build_scaled_cnn({6, 6, 1}, {4, 4}, 3, 8));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("conv2d_1"), std::string::npos);
  }
}

TEST(Model, RejectsFewerThanTwoClasses) { EXPECT_THROW(build_scaled_cnn({16, 16, 1}, {4}, 1, 8), InputError); }

TEST(Model, InitIsDeterministicAndBounded) {
  const auto spec = build_scaled_cnn({12, 12, 2}, {4, 6}, 3, 10);
  const auto a = init_params<double>(spec, 17);
  const auto b = init_params<double>(spec, 17);
  const auto c = init_params<double>(spec, 18);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(a.scalar_count(), count_params(spec));
  for (const auto& g : a.groups) {
    const auto& s = g.weights.shape();
    std::size_t fan_in = 1;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) fan_in *= s[i];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double w : g.weights.data()) EXPECT_LE(std::abs(w), limit);
    for (double v : g.bias.data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Model, BatchForwardEqualsPerSampleForward) {
  const auto spec = testkit::tiny_model();
  const auto params = init_params<double>(spec, 3);
  testkit::Gen gen(3);
  const auto batch = gen.tensor<double>({4, 10, 10, 2}, 0, 1);
  const auto logits = forward_batch(spec, params, batch);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto single = forward_sample(spec, params, batch.slice(i)).logits;
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(logits.at(i, c), single[c]);
  }
}

TEST(Model, EndToEndGradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 2; ++seed) EXPECT_LT(testkit::check_end_to_end_gradients(seed), 1e-4);
}

TEST(Model, ProbabilitiesAreDistributions) {
  const auto spec = testkit::tiny_model();
  const auto params = init_params<float>(spec, 9);
  testkit::Gen gen(9);
  const auto probs = predict_probs(spec, params, gen.tensor<float>({5, 10, 10, 2}, 0, 1));
  for (std::size_t i = 0; i < 5; ++i) {
    double sum = 0;
    for (std::size_t c = 0; c < 3; ++c) sum += probs.at(i, c);
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}
