#include "bsecnn/combiners.hpp"

#include <algorithm>

namespace bsecnn {
namespace {

template <typename T>
void require_prob_stack(const BasicTensor<T>& probs) {
  if (probs.rank() != 3) {
    throw DimensionError("combiner input must be [n_models, B, C], got " + shape_to_string(probs.shape()));
  }
}

int lowest_argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

template <typename T>
std::vector<int> combine_average(const BasicTensor<T>& probs) {
  require_prob_stack(probs);
  const std::size_t m = probs.dim(0), b = probs.dim(1), c = probs.dim(2);
  std::vector<int> out(b);
  std::vector<double> mean(c);
  for (std::size_t i = 0; i < b; ++i) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t j = 0; j < c; ++j) mean[j] += static_cast<double>(probs.at(k, i, j));
    }
    for (auto& v : mean) v /= static_cast<double>(m);
    out[i] = lowest_argmax(mean);
  }
  return out;
}

template <typename T>
std::vector<int> combine_vote(const BasicTensor<T>& probs) {
  require_prob_stack(probs);
  const std::size_t m = probs.dim(0), b = probs.dim(1), c = probs.dim(2);
  std::vector<int> out(b);
  std::vector<double> votes(c);
  for (std::size_t i = 0; i < b; ++i) {
    std::fill(votes.begin(), votes.end(), 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const T* row = &probs.at(k, i, 0);
      votes[static_cast<std::size_t>(std::max_element(row, row + c) - row)] += 1.0;
    }
    out[i] = lowest_argmax(votes);
  }
  return out;
}

template <typename T>
FeatureMatrix meta_features(const BasicTensor<T>& probs) {
  require_prob_stack(probs);
  const std::size_t m = probs.dim(0), b = probs.dim(1), c = probs.dim(2);
  FeatureMatrix f(b, m * c);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t j = 0; j < c; ++j) f.at(i, k * c + j) = static_cast<double>(probs.at(k, i, j));
    }
  }
  return f;
}

ForestParams default_stacking_params(std::uint64_t seed) {
  ForestParams p;
  p.n_trees = 100;
  p.max_depth = 12;
  p.max_features = 0;
  p.bootstrap = true;
  p.seed = seed;
  return p;
}

template <typename T>
RandomForest fit_stacking(const EnsembleModel<T>& ensemble, const SampleView<T>& split,
                          const ForestParams& params, std::size_t jobs) {
  if (split.empty() || split.set == nullptr) throw InputError("fit_stacking: empty stacking split");
  const auto probs = ensemble_predict_probs(ensemble, split.batch(), jobs);
  const auto labels = split.labels();
  return fit_forest(meta_features(probs), labels, params, ensemble.n_classes());
}

template <typename T>
std::vector<int> combine_stacking(const RandomForest& forest, const BasicTensor<T>& probs) {
  require_prob_stack(probs);
  const std::size_t d = probs.dim(0) * probs.dim(2);
  if (d != forest.n_features()) {
    throw DimensionError("stacking forest expects " + std::to_string(forest.n_features()) +
                         " meta-features, probabilities provide " + std::to_string(d));
  }
  return forest.predict(meta_features(probs));
}

template <typename T>
std::vector<int> combine(CombinerKind kind, const BasicTensor<T>& probs, const RandomForest* forest) {
  switch (kind) {
    case CombinerKind::average: return combine_average(probs);
    case CombinerKind::vote: return combine_vote(probs);
    case CombinerKind::stacking:
      if (forest == nullptr) throw InputError("stacking combiner requires a fitted forest");
      return combine_stacking(*forest, probs);
  }
  throw InputError("unknown combiner");
}

template <typename T>
std::vector<int> ensemble_predict(const EnsembleModel<T>& ensemble, const BasicTensor<T>& batch,
                                  std::size_t jobs) {
  const auto probs = ensemble_predict_probs(ensemble, batch, jobs);
  return combine(ensemble.combiner, probs, ensemble.forest ? &*ensemble.forest : nullptr);
}

#define BSECNN_INSTANTIATE_COMBINERS(T)                                                          \
  template std::vector<int> combine_average(const BasicTensor<T>&);                              \
  template std::vector<int> combine_vote(const BasicTensor<T>&);                                 \
  template FeatureMatrix meta_features(const BasicTensor<T>&);                                   \
  template RandomForest fit_stacking(const EnsembleModel<T>&, const SampleView<T>&,              \
                                     const ForestParams&, std::size_t);                          \
  template std::vector<int> combine_stacking(const RandomForest&, const BasicTensor<T>&);        \
  template std::vector<int> combine(CombinerKind, const BasicTensor<T>&, const RandomForest*);   \
  template std::vector<int> ensemble_predict(const EnsembleModel<T>&, const BasicTensor<T>&,     \
                                             std::size_t);

BSECNN_INSTANTIATE_COMBINERS(float)
BSECNN_INSTANTIATE_COMBINERS(double)

#undef BSECNN_INSTANTIATE_COMBINERS

}  // namespace bsecnn
