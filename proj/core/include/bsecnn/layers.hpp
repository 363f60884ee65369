#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "bsecnn/tensor.hpp"

namespace bsecnn {

/// Convolution weights [k_h, k_w, in_channels, out_channels] and bias [out_channels].
template <typename T>
struct ConvKernelSet {
  BasicTensor<T> weights;
  BasicTensor<T> bias;

  std::size_t kernel_h() const { return weights.dim(0); }
  std::size_t kernel_w() const { return weights.dim(1); }
  std::size_t in_channels() const { return weights.dim(2); }
  std::size_t out_channels() const { return weights.dim(3); }
};

template <typename T>
struct ConvGrads {
  BasicTensor<T> d_input;
  BasicTensor<T> d_weights;
  BasicTensor<T> d_bias;
};

template <typename T>
struct DenseGrads {
  BasicTensor<T> d_input;
  BasicTensor<T> d_weights;
  BasicTensor<T> d_bias;
};

template <typename T>
struct PoolResult {
  BasicTensor<T> output;
  /// Flat input index of the maximal element feeding each output element.
  std::vector<std::uint32_t> argmax;
};

/// Forward value plus a backward map from an upstream gradient (shaped like
/// `output`) to one gradient per input.
template <typename T>
struct GradPair {
  BasicTensor<T> output;
  std::function<std::vector<BasicTensor<T>>(const BasicTensor<T>&)> backward;
};

std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride);

/// Valid (unpadded) sliding cross-correlation of an [H, W, Cin] input with
/// weights [k_h, k_w, Cin, Cout] and bias [Cout].
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias, std::size_t stride = 1);

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& upstream, const BasicTensor<T>& input,
                             const BasicTensor<T>& weights, const BasicTensor<T>& bias,
                             std::size_t stride = 1);

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const ConvKernelSet<T>& kernels,
                              std::size_t stride = 1) {
  return conv2d_forward(input, kernels.weights, kernels.bias, stride);
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& upstream, const BasicTensor<T>& input,
                             const ConvKernelSet<T>& kernels, std::size_t stride = 1) {
  return conv2d_backward(upstream, input, kernels.weights, kernels.bias, stride);
}

/// Max pooling over [H, W, C]; trailing odd rows/columns are dropped and ties
/// resolve to the first maximal element in row-major window order.
template <typename T>
PoolResult<T> maxpool2d_forward(const BasicTensor<T>& input, std::size_t window = 2,
                                std::size_t stride = 2);

template <typename T>
BasicTensor<T> maxpool2d_backward(const BasicTensor<T>& upstream,
                                  const std::vector<std::uint32_t>& argmax,
                                  const Shape& input_shape);

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input);

/// Passes upstream where input > 0; the subgradient at 0 is 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& upstream, const BasicTensor<T>& input);

template <typename T>
GradPair<T> relu(const BasicTensor<T>& input);

/// y = x . W + b for x [n], W [n, m], b [m].
template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias);

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& upstream, const BasicTensor<T>& input,
                             const BasicTensor<T>& weights);

/// Max-shifted softmax over a rank-1 logit vector.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits);

template <typename T>
BasicTensor<T> flatten(const BasicTensor<T>& input) {
  return input.reshaped({input.size()});
}

template <typename T>
BasicTensor<T> unflatten(const BasicTensor<T>& flat, const Shape& shape) {
  return flat.reshaped(shape);
}

}  // namespace bsecnn
