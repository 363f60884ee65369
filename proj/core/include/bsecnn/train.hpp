#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsecnn/model.hpp"
#include "bsecnn/samples.hpp"
#include "bsecnn/tensor.hpp"

namespace bsecnn {

/// Probabilities below this are clamped before taking the log.
inline constexpr double kProbabilityFloor = 1e-12;

/// Mean over the batch of -log p[i][label[i]] for probabilities [B, C].
template <typename T>
double sparse_cce(const BasicTensor<T>& probs, std::span<const int> labels);

/// d(sparse_cce)/d(probs): -1 / (B * p[i][label[i]]) at the label, zero elsewhere.
template <typename T>
BasicTensor<T> sparse_cce_prob_grad(const BasicTensor<T>& probs, std::span<const int> labels);

/// Gradient of sparse_cce(softmax(logits)) with respect to the logits:
/// (probs - onehot(labels)) / B.
template <typename T>
BasicTensor<T> softmax_cce_logit_grad(const BasicTensor<T>& probs, std::span<const int> labels);

struct AdamHyper {
  double eta = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamHyper&, const AdamHyper&) = default;
};

template <typename T>
struct AdamState {
  ParamSet<T> m;
  ParamSet<T> v;
  std::uint64_t t = 0;
  AdamHyper hyper;

  static AdamState fresh(const ParamSet<T>& params, AdamHyper hyper = {}) {
    return AdamState{params.zeros_like(), params.zeros_like(), 0, hyper};
  }
};

/// One Adam update. Increments t first, so the first call uses t = 1:
///   m = b1 m + (1 - b1) g;  v = b2 v + (1 - b2) g^2
///   m_hat = m / (1 - b1^t); v_hat = v / (1 - b2^t)
///   theta -= eta * m_hat / sqrt(v_hat + eps)
/// Note eps sits inside the square root.
template <typename T>
void adam_step(ParamSet<T>& params, const ParamSet<T>& grads, AdamState<T>& state);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  AdamHyper adam;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0;
  double train_acc = 0;
  double val_loss = 0;  // NaN without a held-out view
  double val_acc = 0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  /// epoch,train_loss,train_acc,val_loss,val_acc
  std::string to_csv() const;
};

template <typename T>
struct TrainResult {
  ParamSet<T> params;
  TrainHistory history;
};

struct Evaluation {
  double loss = 0;
  double accuracy = 0;
};

template <typename T>
Evaluation evaluate(const ModelSpec& spec, const ParamSet<T>& params, const SampleView<T>& view);

/// Minibatch Adam training of one network. Initialization, shuffling and
/// batching all derive from config.seed. The final partial batch is trained.
template <typename T>
TrainResult<T> train_submodel(const ModelSpec& spec, const SampleView<T>& train,
                              const TrainConfig& config,
                              const std::optional<SampleView<T>>& validation = std::nullopt);

/// Index of the largest element; ties go to the lowest index.
template <typename T>
std::size_t argmax(std::span<const T> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace bsecnn
