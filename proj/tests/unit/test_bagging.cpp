#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>

#include <gtest/gtest.h>

#include "bsecnn/bagging.hpp"
#include "bsecnn/dataset.hpp"
#include "testing.hpp"

using namespace bsecnn;

TEST(Bagging, BagSizeRoundsAndKeepsAtLeastOne) {
  EXPECT_EQ(bag_size(10, 0.7), 7u);
  EXPECT_EQ(bag_size(10, 0.65), 7u);
  EXPECT_EQ(bag_size(10, 0.64), 6u);
  EXPECT_EQ(bag_size(3, 0.1), 1u);
  EXPECT_EQ(bag_size(1000, 1.0), 1000u);
}

TEST(Bagging, ConfigValidation) {
  EXPECT_THROW((BaggingConfig{0, 1.0, 0}.validate()), InputError);
  EXPECT_THROW((BaggingConfig{3, 0.0, 0}.validate()), InputError);
  EXPECT_THROW((BaggingConfig{3, 1.5, 0}.validate()), InputError);
  EXPECT_NO_THROW((BaggingConfig{3, 0.5, 0}.validate()));
}

TEST(Bagging, OutOfBagIsExactComplementOfDraws) {
  testkit::Gen gen(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + gen.index(200);
    const double ratio = gen.real(0.05, 1.0);
    Rng rng(static_cast<std::uint64_t>(trial));
    const auto bag = bootstrap_sample(n, ratio, rng);
    EXPECT_EQ(bag.indices.size(), bag_size(n, ratio));
    std::set<std::size_t> drawn(bag.indices.begin(), bag.indices.end());
    for (auto i : bag.indices) ASSERT_LT(i, n);
    std::set<std::size_t> oob(bag.out_of_bag.begin(), bag.out_of_bag.end());
    EXPECT_EQ(oob.size(), bag.out_of_bag.size());
    EXPECT_TRUE(std::is_sorted(bag.out_of_bag.begin(), bag.out_of_bag.end()));
    for (std::size_t i = 0; i < n; ++i) EXPECT_NE(drawn.count(i) == 1, oob.count(i) == 1);
  }
}

TEST(Bagging, OutOfBagFractionNearExpOfMinusRatio) {
  // Expected OOB fraction is (1 - 1/n)^(ratio n), close to e^-ratio.
  for (double ratio : {1.0, 0.7, 0.4}) {
    double total = 0;
    const int runs = 40;
    for (int s = 0; s < runs; ++s) {
      Rng rng(derive_seed(99, static_cast<std::uint64_t>(s)));
      total += static_cast<double>(bootstrap_sample(5000, ratio, rng).out_of_bag.size()) / 5000.0;
    }
    EXPECT_NEAR(total / runs, std::exp(-ratio), 0.01) << "ratio " << ratio;
  }
}

TEST(Bagging, MakeBagsUsesDerivedSeedPerModel) {
  const BaggingConfig cfg{4, 0.8, 123};
  const auto bags = make_bags(50, cfg);
  ASSERT_EQ(bags.bags.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    Rng rng(derive_seed(123, k));
    EXPECT_EQ(bags.bags[k].indices, bootstrap_sample(50, 0.8, rng).indices);
  }
  EXPECT_NE(bags.bags[0].indices, bags.bags[1].indices);
}

TEST(Bagging, CsvListsEveryDraw) {
  const auto bags = make_bags(5, BaggingConfig{2, 1.0, 0});
  const auto csv = bags.to_csv();
  EXPECT_EQ(csv.rfind("model_index,draw,sample_index\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 10);
}

TEST(Bagging, CombinerNamesRoundTrip) {
  for (auto k : {CombinerKind::average, CombinerKind::vote, CombinerKind::stacking}) {
    EXPECT_EQ(parse_combiner(combiner_name(k)), k);
  }
  EXPECT_THROW(parse_combiner("median"), ConfigError);
}

TEST(ParallelFor, RunsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(37);
  parallel_for(37, 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsLowestIndexFailure) {
  try {
    parallel_for(10, 3, [](std::size_t i) {
      if (i == 7 || i == 4) throw std::runtime_error("task " + std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "task 4");
  }
}

namespace {

struct Fixture {
  LabeledSet<float> data;
  ModelSpec spec;
  Fixture() {
    SynthOptions o;
    o.n_per_class = 8;
    o.image_size = 10;
    data = to_labeled_set<float>(synth_dataset(o), 5);
    spec = build_scaled_cnn({10, 10, 1}, {3}, 5, 8);
  }
};

}  // namespace

TEST(TrainEnsemble, ResultIndependentOfJobCount) {
  Fixture f;
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 8;
  const BaggingConfig bc{3, 0.7, 11};
  const auto one = train_ensemble(full_view(f.data), f.spec, bc, tc, 1);
  const auto three = train_ensemble(full_view(f.data), f.spec, bc, tc, 3);
  ASSERT_EQ(one.n_models(), 3u);
  EXPECT_EQ(one.members, three.members);
  EXPECT_NE(one.members[0], one.members[1]);
  const auto batch = full_view(f.data).batch();
  EXPECT_EQ(ensemble_predict_probs(one, batch, 1), ensemble_predict_probs(one, batch, 3));
}

TEST(TrainEnsemble, SubmodelKMatchesStandaloneTrainingOnItsBag) {
  Fixture f;
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 4;
  tc.seed = 8;
  const BaggingConfig bc{2, 0.5, 21};
  const auto ens = train_ensemble(full_view(f.data), f.spec, bc, tc);
  for (std::size_t k = 0; k < 2; ++k) {
    TrainConfig own = tc;
    own.seed = derive_seed(tc.seed, k);
    const auto solo = train_submodel(f.spec, full_view(f.data).subview(ens.bags.bags[k].indices), own);
    EXPECT_EQ(solo.params, ens.members[k]);
  }
}

TEST(TrainEnsemble, FailureCarriesModelIndexAndCategory) {
  Fixture f;
  f.data.labels[3] = 42;
  TrainConfig tc;
  tc.epochs = 1;
  try {
    train_ensemble(full_view(f.data), f.spec, BaggingConfig{2, 1.0, 0}, tc);
    FAIL();
  } catch (const SubmodelError& e) {
    EXPECT_EQ(e.category(), ErrorCategory::data);
    EXPECT_NE(std::string(e.what()).find("sub-model"), std::string::npos);
  }
}
