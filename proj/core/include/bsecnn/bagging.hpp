#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bsecnn/error.hpp"
#include "bsecnn/forest.hpp"
#include "bsecnn/model.hpp"
#include "bsecnn/random.hpp"
#include "bsecnn/samples.hpp"
#include "bsecnn/train.hpp"

namespace bsecnn {

struct BaggingConfig {
  std::size_t n_models = 10;
  double bagging_ratio = 1.0;
  std::uint64_t seed = 0;

  /// Throws InputError unless n_models >= 1 and 0 < bagging_ratio <= 1.
  void validate() const;
};

/// Draws for one sub-model (with repetition) and the indices never drawn.
struct BagEntry {
  std::vector<std::size_t> indices;
  std::vector<std::size_t> out_of_bag;
};

struct BagAssignment {
  std::size_t population = 0;
  std::vector<BagEntry> bags;

  /// model_index,draw,sample_index
  std::string to_csv() const;
};

/// round(ratio * n) draws, at least one.
std::size_t bag_size(std::size_t n, double ratio);

/// round(ratio * n) uniform draws with replacement from [0, n) plus the
/// out-of-bag complement.
BagEntry bootstrap_sample(std::size_t n, double ratio, Rng& rng);

/// One bag per sub-model; bag k is drawn from Rng(derive_seed(seed, k)).
BagAssignment make_bags(std::size_t n, const BaggingConfig& config);

enum class CombinerKind : std::uint8_t { average = 0, vote = 1, stacking = 2 };

std::string combiner_name(CombinerKind kind);
CombinerKind parse_combiner(const std::string& name);

/// Trained sub-models sharing one architecture plus the combiner that merges them.
template <typename T>
struct EnsembleModel {
  ModelSpec spec;
  std::vector<ParamSet<T>> members;
  std::vector<TrainHistory> histories;
  BagAssignment bags;
  CombinerKind combiner = CombinerKind::stacking;
  std::optional<RandomForest> forest;

  std::size_t n_models() const noexcept { return members.size(); }
  std::size_t n_classes() const noexcept { return spec.n_classes; }
};

/// Sub-model training failure tagged with the sub-model index. Keeps the
/// category of the underlying error.
class SubmodelError : public Error {
 public:
  SubmodelError(std::size_t model_index, const Error& inner)
      : Error("sub-model " + std::to_string(model_index) + ": " + inner.what()),
        model_index_(model_index),
        category_(inner.category()) {}
  std::size_t model_index() const noexcept { return model_index_; }
  ErrorCategory category() const noexcept override { return category_; }

 private:
  std::size_t model_index_;
  ErrorCategory category_;
};

/// Trains n_models sub-models, each only on its own bag of `train`.
///
/// Sub-model k uses bag seed derive_seed(bagging.seed, k) and training seed
/// derive_seed(train_config.seed, k), so the result does not depend on
/// `jobs` or on scheduling. The returned model has no forest yet.
template <typename T>
EnsembleModel<T> train_ensemble(const SampleView<T>& train, const ModelSpec& spec,
                                const BaggingConfig& bagging, const TrainConfig& train_config,
                                std::size_t jobs = 1,
                                const std::optional<SampleView<T>>& validation = std::nullopt);

/// Softmax outputs of every sub-model, [n_models, B, C].
template <typename T>
BasicTensor<T> ensemble_predict_probs(const EnsembleModel<T>& ensemble, const BasicTensor<T>& batch,
                                      std::size_t jobs = 1);

/// Runs task(i) for i in [0, count) on up to `jobs` threads. The first
/// exception (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task);

}  // namespace bsecnn
