#include "bsecnn/model.hpp"

#include <cmath>
#include <map>

#include <fmt/format.h>

#include "bsecnn/layers.hpp"
#include "bsecnn/random.hpp"

namespace bsecnn {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string_view keras_base_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool2d: return "max_pooling2d";
    case LayerKind::relu: return "re_lu";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
  }
  return "layer";
}

std::string_view keras_type_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "Conv2D";
    case LayerKind::maxpool2d: return "MaxPooling2D";
    case LayerKind::relu: return "ReLU";
    case LayerKind::flatten: return "Flatten";
    case LayerKind::dense: return "Dense";
  }
  return "Layer";
}

std::string describe(const ModelSpec& spec, std::size_t index) {
  return "layer " + std::to_string(index) + " (" + layer_names(spec)[index] + ")";
}

Shape output_shape(const LayerSpec& layer, const Shape& in, const ModelSpec& spec,
                   std::size_t index) {
  auto fail = [&](const std::string& why) -> DimensionError {
    return DimensionError(describe(spec, index) + ": " + why + " for input " + shape_to_string(in));
  };
  return std::visit(
      overloaded{
          [&](const Conv2dLayer& c) -> Shape {
            if (in.size() != 3) throw fail("conv2d needs a rank-3 input");
            if (c.kernel_h == 0 || c.kernel_w == 0 || c.out_channels == 0 || c.stride == 0) {
              throw fail("conv2d sizes must be positive");
            }
            const auto h = conv_output_extent(in[0], c.kernel_h, c.stride);
            const auto w = conv_output_extent(in[1], c.kernel_w, c.stride);
            if (h < 1 || w < 1) throw fail("output dimension underflow");
            return {h, w, c.out_channels};
          },
          [&](const MaxPoolLayer& p) -> Shape {
            if (in.size() != 3) throw fail("maxpool2d needs a rank-3 input");
            if (p.window == 0 || p.stride == 0) throw fail("pool sizes must be positive");
            if (in[0] < p.window || in[1] < p.window) throw fail("output dimension underflow");
            return {(in[0] - p.window) / p.stride + 1, (in[1] - p.window) / p.stride + 1, in[2]};
          },
          [&](const ReluLayer&) -> Shape { return in; },
          [&](const FlattenLayer&) -> Shape { return {shape_numel(in)}; },
          [&](const DenseLayer& d) -> Shape {
            if (in.size() != 1) throw fail("dense needs a flattened input");
            if (d.units == 0) throw fail("dense units must be positive");
            return {d.units};
          },
      },
      layer);
}

/// Index into ParamSet::groups per layer, or -1 for parameter-free layers.
std::vector<int> group_index(const ModelSpec& spec) {
  std::vector<int> idx(spec.layers.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto kind = kind_of(spec.layers[i]);
    if (kind == LayerKind::conv2d || kind == LayerKind::dense) idx[i] = next++;
  }
  return idx;
}

template <typename T>
void check_params(const ModelSpec& spec, const ParamSet<T>& params) {
  const auto idx = group_index(spec);
  std::size_t expected = 0;
  for (int g : idx) expected += g >= 0 ? 1 : 0;
  if (params.groups.size() != expected) {
    throw DimensionError("parameter set has " + std::to_string(params.groups.size()) +
                         " groups, model needs " + std::to_string(expected));
  }
}

std::string keras_shape(const Shape& s) {
  std::string out = "(None";
  for (auto d : s) out += ", " + std::to_string(d);
  return out + ")";
}

std::string thousands(std::size_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

}  // namespace

LayerKind kind_of(const LayerSpec& layer) { return static_cast<LayerKind>(layer.index()); }

std::string_view kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool2d: return "maxpool2d";
    case LayerKind::relu: return "relu";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
  }
  return "unknown";
}

std::vector<std::string> layer_names(const ModelSpec& spec) {
  std::map<LayerKind, int> seen;
  std::vector<std::string> names;
  for (const auto& layer : spec.layers) {
    const auto kind = kind_of(layer);
    const int n = seen[kind]++;
    std::string name(keras_base_name(kind));
    if (n > 0) name += "_" + std::to_string(n);
    names.push_back(std::move(name));
  }
  return names;
}

std::vector<Shape> infer_shapes(const ModelSpec& spec) {
  if (spec.input_shape.size() != 3 || shape_numel(spec.input_shape) == 0) {
    throw DimensionError("model input must be a positive [H, W, C] shape, got " +
                         shape_to_string(spec.input_shape));
  }
  if (spec.layers.empty()) throw DimensionError("model has no layers");
  std::vector<Shape> shapes;
  Shape current = spec.input_shape;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    current = output_shape(spec.layers[i], current, spec, i);
    shapes.push_back(current);
  }
  if (current.size() != 1 || current[0] != spec.n_classes) {
    throw DimensionError("final layer output " + shape_to_string(current) +
                         " does not match n_classes " + std::to_string(spec.n_classes));
  }
  return shapes;
}

ModelSpec build_scaled_cnn(const Shape& input_shape, const std::vector<std::size_t>& widths,
                           std::size_t n_classes, std::size_t dense_units) {
  if (n_classes < 2) throw InputError("n_classes must be at least 2");
  if (widths.empty()) throw InputError("at least one convolution width is required");
  ModelSpec spec{input_shape, {}, n_classes};
  for (auto w : widths) {
    spec.layers.emplace_back(Conv2dLayer{3, 3, w, 1});
    spec.layers.emplace_back(ReluLayer{});
    spec.layers.emplace_back(MaxPoolLayer{2, 2});
  }
  spec.layers.emplace_back(FlattenLayer{});
  spec.layers.emplace_back(DenseLayer{dense_units});
  spec.layers.emplace_back(ReluLayer{});
  spec.layers.emplace_back(DenseLayer{n_classes});
  infer_shapes(spec);
  return spec;
}

ModelSpec build_paper_cnn(std::size_t n_classes) {
  return build_scaled_cnn({224, 224, 3}, {32, 64, 128, 128}, n_classes, 512);
}

std::size_t count_params(const LayerSpec& layer, const Shape& input_shape) {
  return std::visit(overloaded{
                        [&](const Conv2dLayer& c) {
                          return c.kernel_h * c.kernel_w * input_shape.back() * c.out_channels +
                                 c.out_channels;
                        },
                        [&](const DenseLayer& d) { return shape_numel(input_shape) * d.units + d.units; },
                        [](const auto&) { return std::size_t{0}; },
                    },
                    layer);
}

std::size_t count_params(const ModelSpec& spec) {
  const auto shapes = infer_shapes(spec);
  std::size_t total = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    total += count_params(spec.layers[i], i == 0 ? spec.input_shape : shapes[i - 1]);
  }
  return total;
}

std::vector<Shape> shape_trace(const ModelSpec& spec) {
  const auto shapes = infer_shapes(spec);
  std::vector<Shape> trace;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (kind_of(spec.layers[i]) != LayerKind::relu) trace.push_back(shapes[i]);
  }
  return trace;
}

std::string model_summary(const ModelSpec& spec) {
  const auto shapes = infer_shapes(spec);
  const auto names = layer_names(spec);
  std::string out = fmt::format("{:<32}{:<28}{}\n", "Layer (type)", "Output Shape", "Param #");
  out += std::string(70, '=') + "\n";
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto kind = kind_of(spec.layers[i]);
    if (kind == LayerKind::relu) continue;
    const auto label = fmt::format("{} ({})", names[i], keras_type_name(kind));
    out += fmt::format("{:<32}{:<28}{}\n", label, keras_shape(shapes[i]),
                       count_params(spec.layers[i], i == 0 ? spec.input_shape : shapes[i - 1]));
  }
  const auto total = count_params(spec);
  out += std::string(70, '=') + "\n";
  out += "Total params: " + thousands(total) + "\n";
  out += "Trainable params: " + thousands(total) + "\n";
  out += "Non-trainable params: 0\n";
  return out;
}

template <typename T>
void ParamSet<T>::add(const ParamSet& other) {
  if (other.groups.size() != groups.size()) throw DimensionError("parameter set group count mismatch");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& a = groups[g];
    const auto& b = other.groups[g];
    if (a.weights.shape() != b.weights.shape() || a.bias.shape() != b.bias.shape()) {
      throw DimensionError("parameter group " + a.name + " shape mismatch");
    }
    for (std::size_t i = 0; i < a.weights.size(); ++i) a.weights[i] += b.weights[i];
    for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias[i] += b.bias[i];
  }
}

template <typename T>
ParamSet<T> init_params(const ModelSpec& spec, std::uint64_t seed) {
  const auto shapes = infer_shapes(spec);
  const auto names = layer_names(spec);
  ParamSet<T> params;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const Shape& in = i == 0 ? spec.input_shape : shapes[i - 1];
    Shape wshape, bshape;
    std::size_t fan_in = 0;
    if (const auto* c = std::get_if<Conv2dLayer>(&spec.layers[i])) {
      wshape = {c->kernel_h, c->kernel_w, in.back(), c->out_channels};
      bshape = {c->out_channels};
      fan_in = c->kernel_h * c->kernel_w * in.back();
    } else if (const auto* d = std::get_if<DenseLayer>(&spec.layers[i])) {
      wshape = {shape_numel(in), d->units};
      bshape = {d->units};
      fan_in = shape_numel(in);
    } else {
      continue;
    }
    Rng rng(derive_seed(seed, params.groups.size()));
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    BasicTensor<T> w(wshape);
    for (auto& v : w.data()) v = static_cast<T>(rng.uniform(-limit, limit));
    params.groups.push_back({names[i], i, std::move(w), BasicTensor<T>(bshape)});
  }
  return params;
}

template <typename T>
SampleTrace<T> forward_sample(const ModelSpec& spec, const ParamSet<T>& params,
                              const BasicTensor<T>& sample) {
  if (sample.shape() != spec.input_shape) {
    throw DimensionError("sample shape " + shape_to_string(sample.shape()) +
                         " does not match model input " + shape_to_string(spec.input_shape));
  }
  check_params(spec, params);
  const auto gidx = group_index(spec);
  SampleTrace<T> trace;
  trace.layer_inputs.reserve(spec.layers.size());
  trace.pool_argmax.resize(spec.layers.size());
  BasicTensor<T> x = sample;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    BasicTensor<T> y = std::visit(
        overloaded{
            [&](const Conv2dLayer& c) {
              const auto& g = params.groups[static_cast<std::size_t>(gidx[i])];
              return conv2d_forward(x, g.weights, g.bias, c.stride);
            },
            [&](const MaxPoolLayer& p) {
              auto r = maxpool2d_forward(x, p.window, p.stride);
              trace.pool_argmax[i] = std::move(r.argmax);
              return std::move(r.output);
            },
            [&](const ReluLayer&) { return relu_forward(x); },
            [&](const FlattenLayer&) { return flatten(x); },
            [&](const DenseLayer&) {
              const auto& g = params.groups[static_cast<std::size_t>(gidx[i])];
              return dense_forward(x, g.weights, g.bias);
            },
        },
        spec.layers[i]);
    trace.layer_inputs.push_back(std::move(x));
    x = std::move(y);
  }
  trace.logits = std::move(x);
  return trace;
}

template <typename T>
BasicTensor<T> backward_sample(const ModelSpec& spec, const ParamSet<T>& params,
                               const SampleTrace<T>& trace, const BasicTensor<T>& upstream,
                               ParamSet<T>& grads) {
  if (upstream.size() != spec.n_classes) {
    throw DimensionError("upstream gradient length " + std::to_string(upstream.size()) +
                         " does not match n_classes " + std::to_string(spec.n_classes));
  }
  const auto gidx = group_index(spec);
  BasicTensor<T> dy = upstream.reshaped({spec.n_classes});
  for (std::size_t k = spec.layers.size(); k-- > 0;) {
    const auto& x = trace.layer_inputs[k];
    dy = std::visit(
        overloaded{
            [&](const Conv2dLayer& c) {
              const auto gi = static_cast<std::size_t>(gidx[k]);
              const auto& g = params.groups[gi];
              auto cg = conv2d_backward(dy, x, g.weights, g.bias, c.stride);
              auto& acc = grads.groups[gi];
              for (std::size_t i = 0; i < acc.weights.size(); ++i) acc.weights[i] += cg.d_weights[i];
              for (std::size_t i = 0; i < acc.bias.size(); ++i) acc.bias[i] += cg.d_bias[i];
              return std::move(cg.d_input);
            },
            [&](const MaxPoolLayer&) { return maxpool2d_backward(dy, trace.pool_argmax[k], x.shape()); },
            [&](const ReluLayer&) { return relu_backward(dy, x); },
            [&](const FlattenLayer&) { return unflatten(dy, x.shape()); },
            [&](const DenseLayer&) {
              const auto gi = static_cast<std::size_t>(gidx[k]);
              auto dg = dense_backward(dy, x, params.groups[gi].weights);
              auto& acc = grads.groups[gi];
              for (std::size_t i = 0; i < acc.weights.size(); ++i) acc.weights[i] += dg.d_weights[i];
              for (std::size_t i = 0; i < acc.bias.size(); ++i) acc.bias[i] += dg.d_bias[i];
              return std::move(dg.d_input);
            },
        },
        spec.layers[k]);
  }
  return dy;
}

template <typename T>
BasicTensor<T> forward_batch(const ModelSpec& spec, const ParamSet<T>& params,
                             const BasicTensor<T>& batch) {
  Shape expected = spec.input_shape;
  expected.insert(expected.begin(), batch.rank() ? batch.dim(0) : 0);
  if (batch.shape() != expected) {
    throw DimensionError("batch shape " + shape_to_string(batch.shape()) +
                         " does not match model input [B, " +
                         shape_to_string(spec.input_shape).substr(1));
  }
  const std::size_t n = batch.dim(0);
  BasicTensor<T> out({n, spec.n_classes});
  for (std::size_t b = 0; b < n; ++b) {
    const auto trace = forward_sample(spec, params, batch.slice(b));
    std::copy(trace.logits.values().begin(), trace.logits.values().end(), out.row(b).begin());
  }
  return out;
}

template <typename T>
ParamSet<T> backward_batch(const ModelSpec& spec, const ParamSet<T>& params,
                           const BasicTensor<T>& batch, const BasicTensor<T>& upstream) {
  if (batch.rank() != 4) throw DimensionError("batch must be rank 4 [B, H, W, C]");
  const std::size_t n = batch.dim(0);
  if (upstream.shape() != Shape{n, spec.n_classes}) {
    throw DimensionError("upstream shape " + shape_to_string(upstream.shape()) + " expected " +
                         shape_to_string({n, spec.n_classes}));
  }
  ParamSet<T> grads = params.zeros_like();
  for (std::size_t b = 0; b < n; ++b) {
    const auto trace = forward_sample(spec, params, batch.slice(b));
    backward_sample(spec, params, trace, upstream.slice(b), grads);
  }
  return grads;
}

template <typename T>
BasicTensor<T> predict_probs(const ModelSpec& spec, const ParamSet<T>& params,
                             const BasicTensor<T>& batch) {
  BasicTensor<T> logits = forward_batch(spec, params, batch);
  for (std::size_t b = 0; b < logits.dim(0); ++b) {
    const auto p = softmax(logits.slice(b));
    std::copy(p.values().begin(), p.values().end(), logits.row(b).begin());
  }
  return logits;
}

#define BSECNN_INSTANTIATE_MODEL(T)                                                             \
  template struct ParamSet<T>;                                                                   \
  template ParamSet<T> init_params(const ModelSpec&, std::uint64_t);                             \
  template SampleTrace<T> forward_sample(const ModelSpec&, const ParamSet<T>&,                   \
                                         const BasicTensor<T>&);                                 \
  template BasicTensor<T> backward_sample(const ModelSpec&, const ParamSet<T>&,                  \
                                          const SampleTrace<T>&, const BasicTensor<T>&,          \
                                          ParamSet<T>&);                                         \
  template BasicTensor<T> forward_batch(const ModelSpec&, const ParamSet<T>&,                    \
                                        const BasicTensor<T>&);                                  \
  template ParamSet<T> backward_batch(const ModelSpec&, const ParamSet<T>&,                      \
                                      const BasicTensor<T>&, const BasicTensor<T>&);             \
  template BasicTensor<T> predict_probs(const ModelSpec&, const ParamSet<T>&, const BasicTensor<T>&);

BSECNN_INSTANTIATE_MODEL(float)
BSECNN_INSTANTIATE_MODEL(double)

#undef BSECNN_INSTANTIATE_MODEL

}  // namespace bsecnn
