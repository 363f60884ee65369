#include "bsecnn/bagging.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include <fmt/format.h>

namespace bsecnn {

void BaggingConfig::validate() const {
  if (n_models < 1) throw InputError("n_models must be at least 1");
  if (!(bagging_ratio > 0.0 && bagging_ratio <= 1.0)) {
    throw InputError(fmt::format("bagging_ratio must lie in (0, 1], got {}", bagging_ratio));
  }
}

std::string BagAssignment::to_csv() const {
  std::string out = "model_index,draw,sample_index\n";
  for (std::size_t m = 0; m < bags.size(); ++m) {
    for (std::size_t d = 0; d < bags[m].indices.size(); ++d) {
      out += fmt::format("{},{},{}\n", m, d, bags[m].indices[d]);
    }
  }
  return out;
}

std::size_t bag_size(std::size_t n, double ratio) {
  const auto k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  return std::max<std::size_t>(k, 1);
}

BagEntry bootstrap_sample(std::size_t n, double ratio, Rng& rng) {
  if (n == 0) throw InputError("bootstrap_sample: population must be non-empty");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw InputError("bootstrap_sample: ratio must lie in (0, 1]");
  BagEntry entry;
  const std::size_t draws = bag_size(n, ratio);
  entry.indices.reserve(draws);
  std::vector<bool> drawn(n, false);
  for (std::size_t i = 0; i < draws; ++i) {
    const auto idx = static_cast<std::size_t>(rng.below(n));
    entry.indices.push_back(idx);
    drawn[idx] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!drawn[i]) entry.out_of_bag.push_back(i);
  }
  return entry;
}

BagAssignment make_bags(std::size_t n, const BaggingConfig& config) {
  config.validate();
  BagAssignment assignment{n, {}};
  for (std::size_t k = 0; k < config.n_models; ++k) {
    Rng rng(derive_seed(config.seed, k));
    assignment.bags.push_back(bootstrap_sample(n, config.bagging_ratio, rng));
  }
  return assignment;
}

std::string combiner_name(CombinerKind kind) {
  switch (kind) {
    case CombinerKind::average: return "average";
    case CombinerKind::vote: return "vote";
    case CombinerKind::stacking: return "stacking";
  }
  return "unknown";
}

CombinerKind parse_combiner(const std::string& name) {
  if (name == "average") return CombinerKind::average;
  if (name == "vote") return CombinerKind::vote;
  if (name == "stacking") return CombinerKind::stacking;
  throw ConfigError("unknown combiner '" + name + "' (expected average | vote | stacking)");
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(count);
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <typename T>
EnsembleModel<T> train_ensemble(const SampleView<T>& train, const ModelSpec& spec,
                                const BaggingConfig& bagging, const TrainConfig& train_config,
                                std::size_t jobs, const std::optional<SampleView<T>>& validation) {
  if (train.empty() || train.set == nullptr) throw InputError("train_ensemble: empty training view");
  EnsembleModel<T> ensemble;
  ensemble.spec = spec;
  ensemble.bags = make_bags(train.size(), bagging);
  ensemble.members.resize(bagging.n_models);
  ensemble.histories.resize(bagging.n_models);

  parallel_for(bagging.n_models, jobs, [&](std::size_t k) {
    try {
      TrainConfig cfg = train_config;
      cfg.seed = derive_seed(train_config.seed, k);
      auto result = train_submodel(spec, train.subview(ensemble.bags.bags[k].indices), cfg, validation);
      ensemble.members[k] = std::move(result.params);
      ensemble.histories[k] = std::move(result.history);
    } catch (const Error& e) {
      throw SubmodelError(k, e);
    }
  });
  return ensemble;
}

template <typename T>
BasicTensor<T> ensemble_predict_probs(const EnsembleModel<T>& ensemble, const BasicTensor<T>& batch,
                                      std::size_t jobs) {
  if (ensemble.members.empty()) throw InputError("ensemble has no sub-models");
  std::vector<BasicTensor<T>> per_model(ensemble.members.size());
  parallel_for(ensemble.members.size(), jobs, [&](std::size_t m) {
    per_model[m] = predict_probs(ensemble.spec, ensemble.members[m], batch);
  });
  return stack<T>(per_model);
}

template EnsembleModel<float> train_ensemble(const SampleView<float>&, const ModelSpec&,
                                             const BaggingConfig&, const TrainConfig&, std::size_t,
                                             const std::optional<SampleView<float>>&);
template EnsembleModel<double> train_ensemble(const SampleView<double>&, const ModelSpec&,
                                              const BaggingConfig&, const TrainConfig&, std::size_t,
                                              const std::optional<SampleView<double>>&);
template BasicTensor<float> ensemble_predict_probs(const EnsembleModel<float>&,
                                                   const BasicTensor<float>&, std::size_t);
template BasicTensor<double> ensemble_predict_probs(const EnsembleModel<double>&,
                                                    const BasicTensor<double>&, std::size_t);

}  // namespace bsecnn
