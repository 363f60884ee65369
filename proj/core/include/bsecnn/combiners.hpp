#pragma once

#include <cstddef>
#include <vector>

#include "bsecnn/bagging.hpp"
#include "bsecnn/forest.hpp"
#include "bsecnn/samples.hpp"
#include "bsecnn/tensor.hpp"

namespace bsecnn {

/// Argmax of the mean over the model axis of probs [n_models, B, C].
/// Ties go to the lowest class.
template <typename T>
std::vector<int> combine_average(const BasicTensor<T>& probs);

/// Plurality of per-model argmaxes; ties go to the lowest class.
template <typename T>
std::vector<int> combine_vote(const BasicTensor<T>& probs);

/// [B, n_models * C] table; column m * C + c holds model m's probability of class c.
template <typename T>
FeatureMatrix meta_features(const BasicTensor<T>& probs);

/// Stacking forest defaults: 100 trees, depth 12, sqrt(d) candidates.
ForestParams default_stacking_params(std::uint64_t seed = 0);

/// Fits the meta-model on sub-model probabilities over `split`. The split
/// must be data the sub-models never trained on.
template <typename T>
RandomForest fit_stacking(const EnsembleModel<T>& ensemble, const SampleView<T>& split,
                          const ForestParams& params, std::size_t jobs = 1);

template <typename T>
std::vector<int> combine_stacking(const RandomForest& forest, const BasicTensor<T>& probs);

/// Dispatches on `kind`; stacking requires a fitted forest.
template <typename T>
std::vector<int> combine(CombinerKind kind, const BasicTensor<T>& probs, const RandomForest* forest);

/// Predicted labels for a batch using the ensemble's own combiner.
template <typename T>
std::vector<int> ensemble_predict(const EnsembleModel<T>& ensemble, const BasicTensor<T>& batch,
                                  std::size_t jobs = 1);

}  // namespace bsecnn
