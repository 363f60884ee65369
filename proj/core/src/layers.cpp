#include "bsecnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bsecnn {
namespace {

void require_rank(const Shape& shape, std::size_t rank, const char* what) {
  if (shape.size() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_to_string(shape));
  }
}

void require_axis(const char* what, const char* axis, std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw DimensionError(std::string(what) + ": axis " + axis + " expected " +
                         std::to_string(expected) + ", got " + std::to_string(got));
  }
}

template <typename T>
void check_conv_operands(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                         const BasicTensor<T>& bias, std::size_t stride) {
  require_rank(input.shape(), 3, "conv2d input");
  require_rank(weights.shape(), 4, "conv2d weights");
  require_rank(bias.shape(), 1, "conv2d bias");
  if (stride == 0) throw DimensionError("conv2d: stride must be positive");
  require_axis("conv2d", "in_channels", input.dim(2), weights.dim(2));
  require_axis("conv2d bias", "out_channels", weights.dim(3), bias.dim(0));
  if (input.dim(0) < weights.dim(0)) {
    throw DimensionError("conv2d: axis height " + std::to_string(input.dim(0)) +
                         " is smaller than kernel height " + std::to_string(weights.dim(0)));
  }
  if (input.dim(1) < weights.dim(1)) {
    throw DimensionError("conv2d: axis width " + std::to_string(input.dim(1)) +
                         " is smaller than kernel width " + std::to_string(weights.dim(1)));
  }
}

}  // namespace

std::size_t conv_output_extent(std::size_t input, std::size_t kernel, std::size_t stride) {
  if (stride == 0 || kernel == 0 || input < kernel) return 0;
  return (input - kernel) / stride + 1;
}

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias, std::size_t stride) {
  check_conv_operands(input, weights, bias, stride);
  const std::size_t in_w = input.dim(1);
  const std::size_t cin = input.dim(2);
  const std::size_t kh = weights.dim(0), kw = weights.dim(1);
  const std::size_t cout = weights.dim(3);
  const std::size_t out_h = conv_output_extent(input.dim(0), kh, stride);
  const std::size_t out_w = conv_output_extent(in_w, kw, stride);

  BasicTensor<T> out({out_h, out_w, cout});
  const T* x = input.data().data();
  const T* w = weights.data().data();
  const T* b = bias.data().data();
  T* y = out.data().data();

  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      T* acc = y + (oy * out_w + ox) * cout;
      std::copy(b, b + cout, acc);
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const T* xrow = x + ((oy * stride + ky) * in_w + ox * stride) * cin;
        const T* wrow = w + ky * kw * cin * cout;
        // The (kx, ci) pairs of one kernel row are contiguous in both operands.
        for (std::size_t j = 0; j < kw * cin; ++j) {
          const T xv = xrow[j];
          const T* wj = wrow + j * cout;
          for (std::size_t co = 0; co < cout; ++co) acc[co] += xv * wj[co];
        }
      }
    }
  }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& upstream, const BasicTensor<T>& input,
                             const BasicTensor<T>& weights, const BasicTensor<T>& bias,
                             std::size_t stride) {
  check_conv_operands(input, weights, bias, stride);
  const std::size_t in_w = input.dim(1);
  const std::size_t cin = input.dim(2);
  const std::size_t kh = weights.dim(0), kw = weights.dim(1);
  const std::size_t cout = weights.dim(3);
  const std::size_t out_h = conv_output_extent(input.dim(0), kh, stride);
  const std::size_t out_w = conv_output_extent(in_w, kw, stride);
  require_rank(upstream.shape(), 3, "conv2d upstream");
  require_axis("conv2d upstream", "height", out_h, upstream.dim(0));
  require_axis("conv2d upstream", "width", out_w, upstream.dim(1));
  require_axis("conv2d upstream", "channels", cout, upstream.dim(2));

  ConvGrads<T> g{BasicTensor<T>(input.shape()), BasicTensor<T>(weights.shape()),
                 BasicTensor<T>(bias.shape())};
  const T* x = input.data().data();
  const T* w = weights.data().data();
  const T* dy = upstream.data().data();
  T* dx = g.d_input.data().data();
  T* dw = g.d_weights.data().data();
  T* db = g.d_bias.data().data();

  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const T* grad = dy + (oy * out_w + ox) * cout;
      for (std::size_t co = 0; co < cout; ++co) db[co] += grad[co];
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const std::size_t base = ((oy * stride + ky) * in_w + ox * stride) * cin;
        const T* xrow = x + base;
        T* dxrow = dx + base;
        const T* wrow = w + ky * kw * cin * cout;
        T* dwrow = dw + ky * kw * cin * cout;
        for (std::size_t j = 0; j < kw * cin; ++j) {
          const T xv = xrow[j];
          const T* wj = wrow + j * cout;
          T* dwj = dwrow + j * cout;
          T sum{0};
          for (std::size_t co = 0; co < cout; ++co) {
            dwj[co] += xv * grad[co];
            sum += wj[co] * grad[co];
          }
          dxrow[j] += sum;
        }
      }
    }
  }
  return g;
}

template <typename T>
PoolResult<T> maxpool2d_forward(const BasicTensor<T>& input, std::size_t window,
                                std::size_t stride) {
  require_rank(input.shape(), 3, "maxpool2d input");
  if (window == 0 || stride == 0) throw DimensionError("maxpool2d: window and stride must be positive");
  if (input.dim(0) < window || input.dim(1) < window) {
    throw DimensionError("maxpool2d: window " + std::to_string(window) +
                         " larger than input " + shape_to_string(input.shape()));
  }
  const std::size_t in_w = input.dim(1), ch = input.dim(2);
  const std::size_t out_h = (input.dim(0) - window) / stride + 1;
  const std::size_t out_w = (in_w - window) / stride + 1;

  PoolResult<T> r{BasicTensor<T>({out_h, out_w, ch}), {}};
  r.argmax.resize(r.output.size());
  const T* x = input.data().data();
  T* y = r.output.data().data();

  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      for (std::size_t c = 0; c < ch; ++c) {
        std::size_t best = ((oy * stride) * in_w + ox * stride) * ch + c;
        for (std::size_t dy = 0; dy < window; ++dy) {
          for (std::size_t dx = 0; dx < window; ++dx) {
            const std::size_t idx = ((oy * stride + dy) * in_w + ox * stride + dx) * ch + c;
            if (x[idx] > x[best]) best = idx;
          }
        }
        const std::size_t o = (oy * out_w + ox) * ch + c;
        y[o] = x[best];
        r.argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

template <typename T>
BasicTensor<T> maxpool2d_backward(const BasicTensor<T>& upstream,
                                  const std::vector<std::uint32_t>& argmax,
                                  const Shape& input_shape) {
  if (upstream.size() != argmax.size()) {
    throw DimensionError("maxpool2d backward: upstream " + shape_to_string(upstream.shape()) +
                         " does not match saved argmax of length " + std::to_string(argmax.size()));
  }
  BasicTensor<T> dx(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    if (argmax[i] >= dx.size()) {
      throw DimensionError("maxpool2d backward: argmax index outside input shape " +
                           shape_to_string(input_shape));
    }
    dx[argmax[i]] += upstream[i];
  }
  return dx;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input) {
  BasicTensor<T> out = input;
  for (auto& v : out.data()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& upstream, const BasicTensor<T>& input) {
  if (upstream.shape() != input.shape()) {
    throw DimensionError("relu backward: upstream " + shape_to_string(upstream.shape()) +
                         " vs input " + shape_to_string(input.shape()));
  }
  BasicTensor<T> dx = upstream;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(input[i] > T{0})) dx[i] = T{0};
  }
  return dx;
}

template <typename T>
GradPair<T> relu(const BasicTensor<T>& input) {
  return {relu_forward(input), [input](const BasicTensor<T>& upstream) {
            return std::vector<BasicTensor<T>>{relu_backward(upstream, input)};
          }};
}

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias) {
  require_rank(weights.shape(), 2, "dense weights");
  require_rank(bias.shape(), 1, "dense bias");
  const std::size_t n = weights.dim(0), m = weights.dim(1);
  require_axis("dense", "input", n, input.size());
  require_axis("dense bias", "units", m, bias.dim(0));

  BasicTensor<T> out = bias;
  T* y = out.data().data();
  const T* w = weights.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const T xv = input[i];
    if (xv == T{0}) continue;
    const T* wi = w + i * m;
    for (std::size_t j = 0; j < m; ++j) y[j] += xv * wi[j];
  }
  return out;
}

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& upstream, const BasicTensor<T>& input,
                             const BasicTensor<T>& weights) {
  require_rank(weights.shape(), 2, "dense weights");
  const std::size_t n = weights.dim(0), m = weights.dim(1);
  require_axis("dense", "input", n, input.size());
  require_axis("dense upstream", "units", m, upstream.size());

  DenseGrads<T> g{BasicTensor<T>(input.shape()), BasicTensor<T>(weights.shape()), upstream};
  g.d_bias = upstream.reshaped({m});
  const T* w = weights.data().data();
  const T* dy = upstream.data().data();
  T* dw = g.d_weights.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const T xv = input[i];
    const T* wi = w + i * m;
    T* dwi = dw + i * m;
    T sum{0};
    for (std::size_t j = 0; j < m; ++j) {
      dwi[j] = xv * dy[j];
      sum += wi[j] * dy[j];
    }
    g.d_input[i] = sum;
  }
  return g;
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
  if (logits.empty()) throw DimensionError("softmax: empty logits");
  T top = logits[0];
  for (auto v : logits.data()) {
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite logit");
    top = std::max(top, v);
  }
  BasicTensor<T> out = logits.reshaped({logits.size()});
  T total{0};
  for (auto& v : out.data()) {
    v = std::exp(v - top);
    total += v;
  }
  for (auto& v : out.data()) v /= total;
  return out;
}

#define BSECNN_INSTANTIATE_LAYERS(T)                                                          \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&,        \
                                         const BasicTensor<T>&, std::size_t);                  \
  template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                        const BasicTensor<T>&, const BasicTensor<T>&,          \
                                        std::size_t);                                          \
  template PoolResult<T> maxpool2d_forward(const BasicTensor<T>&, std::size_t, std::size_t);   \
  template BasicTensor<T> maxpool2d_backward(const BasicTensor<T>&,                            \
                                             const std::vector<std::uint32_t>&, const Shape&); \
  template BasicTensor<T> relu_forward(const BasicTensor<T>&);                                 \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);         \
  template GradPair<T> relu(const BasicTensor<T>&);                                            \
  template BasicTensor<T> dense_forward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                        const BasicTensor<T>&);                                \
  template DenseGrads<T> dense_backward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                        const BasicTensor<T>&);                                \
  template BasicTensor<T> softmax(const BasicTensor<T>&);

BSECNN_INSTANTIATE_LAYERS(float)
BSECNN_INSTANTIATE_LAYERS(double)

#undef BSECNN_INSTANTIATE_LAYERS

}  // namespace bsecnn
