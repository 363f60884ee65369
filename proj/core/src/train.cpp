#include "bsecnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "bsecnn/layers.hpp"
#include "bsecnn/random.hpp"

namespace bsecnn {
namespace {

template <typename T>
void check_probs_labels(const BasicTensor<T>& probs, std::span<const int> labels) {
  if (probs.rank() != 2) throw DimensionError("probabilities must be [B, C], got " + shape_to_string(probs.shape()));
  if (probs.dim(0) != labels.size()) {
    throw DimensionError("batch axis: " + std::to_string(probs.dim(0)) + " probability rows vs " +
                         std::to_string(labels.size()) + " labels");
  }
  const auto n_classes = static_cast<int>(probs.dim(1));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) {
      throw LabelError("label " + std::to_string(labels[i]) + " outside [0, " +
                           std::to_string(n_classes) + ")",
                       i);
    }
  }
}

template <typename T>
void check_finite(const BasicTensor<T>& t, const std::string& group, const char* part) {
  for (auto v : t.data()) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite gradient in parameter group " + group + " (" + part + ")");
    }
  }
}

template <typename T>
void adam_update(BasicTensor<T>& theta, const BasicTensor<T>& g, BasicTensor<T>& m,
                 BasicTensor<T>& v, const AdamHyper& h, double bias1, double bias2) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double gi = static_cast<double>(g[i]);
    const double mi = h.beta1 * static_cast<double>(m[i]) + (1.0 - h.beta1) * gi;
    const double vi = h.beta2 * static_cast<double>(v[i]) + (1.0 - h.beta2) * gi * gi;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double m_hat = mi / bias1;
    const double v_hat = vi / bias2;
    theta[i] = static_cast<T>(static_cast<double>(theta[i]) - h.eta / std::sqrt(v_hat + h.epsilon) * m_hat);
  }
}

std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  return fmt::format("{:.6f}", x);
}

}  // namespace

template <typename T>
double sparse_cce(const BasicTensor<T>& probs, std::span<const int> labels) {
  check_probs_labels(probs, labels);
  if (labels.empty()) throw InputError("sparse_cce: empty batch");
  double total = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = static_cast<double>(probs.at(i, static_cast<std::size_t>(labels[i])));
    total -= std::log(std::max(p, kProbabilityFloor));
  }
  return total / static_cast<double>(labels.size());
}

template <typename T>
BasicTensor<T> sparse_cce_prob_grad(const BasicTensor<T>& probs, std::span<const int> labels) {
  check_probs_labels(probs, labels);
  BasicTensor<T> grad(probs.shape());
  const double n = static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    const double p = static_cast<double>(probs.at(i, y));
    // Past the clamp the loss is flat in p.
    grad.at(i, y) = p > kProbabilityFloor ? static_cast<T>(-1.0 / (n * p)) : T{0};
  }
  return grad;
}

template <typename T>
BasicTensor<T> softmax_cce_logit_grad(const BasicTensor<T>& probs, std::span<const int> labels) {
  check_probs_labels(probs, labels);
  BasicTensor<T> grad = probs;
  const T inv_n = T{1} / static_cast<T>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    grad.at(i, static_cast<std::size_t>(labels[i])) -= T{1};
  }
  for (auto& g : grad.data()) g *= inv_n;
  return grad;
}

template <typename T>
void adam_step(ParamSet<T>& params, const ParamSet<T>& grads, AdamState<T>& state) {
  if (grads.groups.size() != params.groups.size() || state.m.groups.size() != params.groups.size() ||
      state.v.groups.size() != params.groups.size()) {
    throw DimensionError("adam_step: parameter, gradient and moment group counts differ");
  }
  for (std::size_t k = 0; k < params.groups.size(); ++k) {
    const auto& p = params.groups[k];
    const auto& g = grads.groups[k];
    if (g.weights.shape() != p.weights.shape() || g.bias.shape() != p.bias.shape()) {
      throw DimensionError("adam_step: gradient shape mismatch in parameter group " + p.name);
    }
    check_finite(g.weights, p.name, "weights");
    check_finite(g.bias, p.name, "bias");
  }
  state.t += 1;
  const auto t = static_cast<double>(state.t);
  const double bias1 = 1.0 - std::pow(state.hyper.beta1, t);
  const double bias2 = 1.0 - std::pow(state.hyper.beta2, t);
  for (std::size_t k = 0; k < params.groups.size(); ++k) {
    auto& p = params.groups[k];
    adam_update(p.weights, grads.groups[k].weights, state.m.groups[k].weights, state.v.groups[k].weights,
                state.hyper, bias1, bias2);
    adam_update(p.bias, grads.groups[k].bias, state.m.groups[k].bias, state.v.groups[k].bias,
                state.hyper, bias1, bias2);
  }
}

std::string TrainHistory::to_csv() const {
  std::string out = "epoch,train_loss,train_acc,val_loss,val_acc\n";
  for (const auto& e : epochs) {
    out += fmt::format("{},{},{},{},{}\n", e.epoch, csv_number(e.train_loss), csv_number(e.train_acc),
                       csv_number(e.val_loss), csv_number(e.val_acc));
  }
  return out;
}

template <typename T>
Evaluation evaluate(const ModelSpec& spec, const ParamSet<T>& params, const SampleView<T>& view) {
  if (view.empty()) throw InputError("evaluate: empty sample view");
  double loss = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < view.size(); ++i) {
    const auto trace = forward_sample(spec, params, view.image(i));
    const auto probs = softmax(trace.logits);
    const auto y = static_cast<std::size_t>(view.label(i));
    loss -= std::log(std::max(static_cast<double>(probs[y]), kProbabilityFloor));
    if (argmax<T>(trace.logits.data()) == y) ++correct;
  }
  const auto n = static_cast<double>(view.size());
  return {loss / n, static_cast<double>(correct) / n};
}

template <typename T>
TrainResult<T> train_submodel(const ModelSpec& spec, const SampleView<T>& train,
                              const TrainConfig& config,
                              const std::optional<SampleView<T>>& validation) {
  if (train.empty() || train.set == nullptr) throw InputError("train_submodel: empty training view");
  if (config.batch_size == 0) throw InputError("train_submodel: batch_size must be positive");
  for (std::size_t i = 0; i < train.size(); ++i) {
    const int y = train.label(i);
    if (y < 0 || static_cast<std::size_t>(y) >= spec.n_classes) {
      throw LabelError("training label " + std::to_string(y) + " outside [0, " +
                           std::to_string(spec.n_classes) + ")",
                       i);
    }
  }

  TrainResult<T> result{init_params<T>(spec, derive_seed(config.seed, 0)), {}};
  AdamState<T> adam = AdamState<T>::fresh(result.params, config.adam);
  Rng shuffle_rng(derive_seed(config.seed, 1));
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  ParamSet<T> grads = result.params.zeros_like();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const T inv_n = T{1} / static_cast<T>(stop - start);
      for (auto& g : grads.groups) {
        g.weights.fill(T{0});
        g.bias.fill(T{0});
      }
      for (std::size_t pos = start; pos < stop; ++pos) {
        const auto trace = forward_sample(spec, result.params, train.image(order[pos]));
        auto probs = softmax(trace.logits);
        const auto y = static_cast<std::size_t>(train.label(order[pos]));
        loss_sum -= std::log(std::max(static_cast<double>(probs[y]), kProbabilityFloor));
        if (argmax<T>(trace.logits.data()) == y) ++correct;
        probs[y] -= T{1};
        for (auto& v : probs.data()) v *= inv_n;
        backward_sample(spec, result.params, trace, probs, grads);
      }
      adam_step(result.params, grads, adam);
    }
    const auto n = static_cast<double>(order.size());
    if (!std::isfinite(loss_sum)) throw NumericError("training loss became non-finite at epoch " + std::to_string(epoch + 1));
    EpochRecord rec{epoch + 1, loss_sum / n, static_cast<double>(correct) / n,
                    std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    if (validation && !validation->empty()) {
      const auto ev = evaluate(spec, result.params, *validation);
      rec.val_loss = ev.loss;
      rec.val_acc = ev.accuracy;
    }
    result.history.epochs.push_back(rec);
  }
  return result;
}

#define BSECNN_INSTANTIATE_TRAIN(T)                                                             \
  template double sparse_cce(const BasicTensor<T>&, std::span<const int>);                       \
  template BasicTensor<T> sparse_cce_prob_grad(const BasicTensor<T>&, std::span<const int>);    \
  template BasicTensor<T> softmax_cce_logit_grad(const BasicTensor<T>&, std::span<const int>);  \
  template void adam_step(ParamSet<T>&, const ParamSet<T>&, AdamState<T>&);                      \
  template Evaluation evaluate(const ModelSpec&, const ParamSet<T>&, const SampleView<T>&);      \
  template TrainResult<T> train_submodel(const ModelSpec&, const SampleView<T>&,                 \
                                         const TrainConfig&, const std::optional<SampleView<T>>&);

BSECNN_INSTANTIATE_TRAIN(float)
BSECNN_INSTANTIATE_TRAIN(double)

#undef BSECNN_INSTANTIATE_TRAIN

}  // namespace bsecnn
