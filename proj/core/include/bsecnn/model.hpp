#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bsecnn/tensor.hpp"

namespace bsecnn {

struct Conv2dLayer {
  std::size_t kernel_h = 3;
  std::size_t kernel_w = 3;
  std::size_t out_channels = 1;
  std::size_t stride = 1;
  friend bool operator==(const Conv2dLayer&, const Conv2dLayer&) = default;
};

struct MaxPoolLayer {
  std::size_t window = 2;
  std::size_t stride = 2;
  friend bool operator==(const MaxPoolLayer&, const MaxPoolLayer&) = default;
};

struct ReluLayer {
  friend bool operator==(const ReluLayer&, const ReluLayer&) = default;
};

struct FlattenLayer {
  friend bool operator==(const FlattenLayer&, const FlattenLayer&) = default;
};

struct DenseLayer {
  std::size_t units = 1;
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

using LayerSpec = std::variant<Conv2dLayer, MaxPoolLayer, ReluLayer, FlattenLayer, DenseLayer>;

enum class LayerKind : std::uint8_t { conv2d = 0, maxpool2d = 1, relu = 2, flatten = 3, dense = 4 };

LayerKind kind_of(const LayerSpec& layer);
std::string_view kind_name(LayerKind kind);

struct ModelSpec {
  Shape input_shape;  // [H, W, C]
  std::vector<LayerSpec> layers;
  std::size_t n_classes = 0;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Output shape of every layer, in order. Throws DimensionError naming the
/// first layer whose output would collapse or whose input does not fit, and
/// when the final output length differs from n_classes.
std::vector<Shape> infer_shapes(const ModelSpec& spec);

/// Keras-style display names: conv2d, conv2d_1, max_pooling2d, ...
std::vector<std::string> layer_names(const ModelSpec& spec);

/// Conv blocks (3x3 conv, relu, 2x2 pool) per width, then flatten, a hidden
/// dense layer with relu, and a dense classifier head.
ModelSpec build_scaled_cnn(const Shape& input_shape, const std::vector<std::size_t>& widths,
                           std::size_t n_classes, std::size_t dense_units = 512);

/// 224x224x3 network with conv widths 32, 64, 128, 128 and a 512-unit hidden layer.
ModelSpec build_paper_cnn(std::size_t n_classes);

std::size_t count_params(const LayerSpec& layer, const Shape& input_shape);
std::size_t count_params(const ModelSpec& spec);

/// Output shapes of the rows a layer-summary shows. Activations are folded
/// into the layer they follow, so relu layers are omitted.
std::vector<Shape> shape_trace(const ModelSpec& spec);

/// Three-column table (layer, output shape, parameter count) with totals.
std::string model_summary(const ModelSpec& spec);

template <typename T>
struct ParamGroup {
  std::string name;
  std::size_t layer_index = 0;
  BasicTensor<T> weights;
  BasicTensor<T> bias;

  friend bool operator==(const ParamGroup&, const ParamGroup&) = default;
};

/// Learnable tensors, one group per conv/dense layer in network order.
template <typename T>
struct ParamSet {
  std::vector<ParamGroup<T>> groups;

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.weights.size() + g.bias.size();
    return n;
  }

  ParamSet zeros_like() const {
    ParamSet z = *this;
    for (auto& g : z.groups) {
      g.weights.fill(T{0});
      g.bias.fill(T{0});
    }
    return z;
  }

  void add(const ParamSet& other);

  friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

/// Weights uniform in +-sqrt(6 / fan_in), zero biases; deterministic in seed.
template <typename T>
ParamSet<T> init_params(const ModelSpec& spec, std::uint64_t seed);

/// Per-layer inputs and pooling routes recorded by a single-sample forward pass.
template <typename T>
struct SampleTrace {
  std::vector<BasicTensor<T>> layer_inputs;
  std::vector<std::vector<std::uint32_t>> pool_argmax;
  BasicTensor<T> logits;
};

template <typename T>
SampleTrace<T> forward_sample(const ModelSpec& spec, const ParamSet<T>& params,
                              const BasicTensor<T>& sample);

/// Accumulates (adds) parameter gradients for one traced sample into `grads`.
/// Returns the gradient with respect to the sample.
template <typename T>
BasicTensor<T> backward_sample(const ModelSpec& spec, const ParamSet<T>& params,
                               const SampleTrace<T>& trace, const BasicTensor<T>& upstream,
                               ParamSet<T>& grads);

/// Logits [B, n_classes] for a batch [B, H, W, C].
template <typename T>
BasicTensor<T> forward_batch(const ModelSpec& spec, const ParamSet<T>& params,
                             const BasicTensor<T>& batch);

/// Parameter gradients summed over the batch for upstream logit gradients [B, n_classes].
template <typename T>
ParamSet<T> backward_batch(const ModelSpec& spec, const ParamSet<T>& params,
                           const BasicTensor<T>& batch, const BasicTensor<T>& upstream);

/// Softmax probabilities [B, n_classes].
template <typename T>
BasicTensor<T> predict_probs(const ModelSpec& spec, const ParamSet<T>& params,
                             const BasicTensor<T>& batch);

}  // namespace bsecnn
