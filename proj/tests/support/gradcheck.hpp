#pragma once

// Central finite-difference checks of every analytic gradient in double
// precision. Each check returns the largest relative error
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) it observed.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "bsecnn/layers.hpp"
#include "bsecnn/model.hpp"
#include "bsecnn/train.hpp"
#include "testing.hpp"

namespace bsecnn::testkit {

inline constexpr double kFdStep = 1e-5;

inline double fd_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

// Compares `analytic` against central differences of `loss` with respect to
// every element of `x`; x is restored afterwards.
inline double compare_fd(Tensor64& x, const Tensor64& analytic, const std::function<double()>& loss) {
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + kFdStep;
    const double up = loss();
    x[i] = saved - kFdStep;
    const double down = loss();
    x[i] = saved;
    worst = std::max(worst, fd_relative_error(analytic[i], (up - down) / (2 * kFdStep)));
  }
  return worst;
}

inline double weighted_sum(const Tensor64& out, const Tensor64& probe) {
  double s = 0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * probe[i];
  return s;
}

inline double check_conv_gradients(std::uint64_t seed, std::size_t stride = 1) {
  Gen gen(seed);
  auto input = gen.tensor<double>({7, 6, 3});
  auto weights = gen.tensor<double>({3, 2, 3, 4});
  auto bias = gen.tensor<double>({4});
  const auto out_shape = conv2d_forward(input, weights, bias, stride).shape();
  const auto probe = gen.tensor<double>(out_shape);
  const auto grads = conv2d_backward(probe, input, weights, bias, stride);
  auto loss = [&] { return weighted_sum(conv2d_forward(input, weights, bias, stride), probe); };
  return std::max({compare_fd(input, grads.d_input, loss), compare_fd(weights, grads.d_weights, loss),
                   compare_fd(bias, grads.d_bias, loss)});
}

inline double check_dense_gradients(std::uint64_t seed) {
  Gen gen(seed);
  auto input = gen.tensor<double>({9});
  auto weights = gen.tensor<double>({9, 5});
  auto bias = gen.tensor<double>({5});
  const auto probe = gen.tensor<double>({5});
  const auto grads = dense_backward(probe, input, weights);
  auto loss = [&] { return weighted_sum(dense_forward(input, weights, bias), probe); };
  return std::max({compare_fd(input, grads.d_input, loss), compare_fd(weights, grads.d_weights, loss),
                   compare_fd(bias, grads.d_bias, loss)});
}

// Distinct values spaced 0.01 apart keep every window maximum well away
// from a tie under a 1e-5 perturbation.
inline double check_maxpool_gradients(std::uint64_t seed) {
  Gen gen(seed);
  Tensor64 input({7, 8, 2});
  std::vector<std::size_t> order(input.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), gen.engine());
  for (std::size_t i = 0; i < input.size(); ++i) input[i] = 0.01 * static_cast<double>(order[i]) - 0.5;
  const auto pooled = maxpool2d_forward(input);
  const auto probe = gen.tensor<double>(pooled.output.shape());
  const auto d_input = maxpool2d_backward(probe, pooled.argmax, input.shape());
  auto loss = [&] { return weighted_sum(maxpool2d_forward(input).output, probe); };
  return compare_fd(input, d_input, loss);
}

// Inputs are kept at least 0.05 away from the kink at zero.
inline double check_relu_gradients(std::uint64_t seed) {
  Gen gen(seed);
  Tensor64 input({4, 5, 3});
  for (auto& x : input.data()) x = (gen.coin() ? 1.0 : -1.0) * gen.real(0.05, 1.0);
  const auto probe = gen.tensor<double>(input.shape());
  const auto d_input = relu_backward(probe, input);
  auto loss = [&] { return weighted_sum(relu_forward(input), probe); };
  return compare_fd(input, d_input, loss);
}

// Mean sparse cross-entropy of row-wise softmax over logits [B, C].
inline double softmax_cce_loss(const Tensor64& logits, const std::vector<int>& labels) {
  Tensor64 probs(logits.shape());
  const std::size_t c = logits.dim(1);
  for (std::size_t i = 0; i < logits.dim(0); ++i) {
    Tensor64 row({c}, std::vector<double>(logits.row(i).begin(), logits.row(i).end()));
    const auto p = softmax(row);
    std::copy(p.data().begin(), p.data().end(), probs.row(i).begin());
  }
  return sparse_cce(probs, labels);
}

inline double check_softmax_cce_gradients(std::uint64_t seed) {
  Gen gen(seed);
  auto logits = gen.tensor<double>({6, 5}, -3.0, 3.0);
  const auto labels = gen.labels(6, 5);
  Tensor64 probs(logits.shape());
  for (std::size_t i = 0; i < 6; ++i) {
    Tensor64 row({5}, std::vector<double>(logits.row(i).begin(), logits.row(i).end()));
    const auto p = softmax(row);
    std::copy(p.data().begin(), p.data().end(), probs.row(i).begin());
  }
  const auto analytic = softmax_cce_logit_grad(probs, labels);
  return compare_fd(logits, analytic, [&] { return softmax_cce_loss(logits, labels); });
}

// Two conv blocks, a hidden dense layer and a 3-class head on 10x10x2 input.
inline ModelSpec tiny_model() { return build_scaled_cnn({10, 10, 2}, {3, 4}, 3, 6); }

inline double check_end_to_end_gradients(std::uint64_t seed) {
  Gen gen(seed);
  const auto spec = tiny_model();
  auto params = init_params<double>(spec, seed);
  const auto batch = gen.tensor<double>({3, 10, 10, 2}, 0.0, 1.0);
  const auto labels = gen.labels(3, 3);

  auto loss = [&] { return softmax_cce_loss(forward_batch(spec, params, batch), labels); };
  const auto probs = predict_probs(spec, params, batch);
  const auto grads = backward_batch(spec, params, batch, softmax_cce_logit_grad(probs, labels));

  double worst = 0;
  for (std::size_t g = 0; g < params.groups.size(); ++g) {
    worst = std::max(worst, compare_fd(params.groups[g].weights, grads.groups[g].weights, loss));
    worst = std::max(worst, compare_fd(params.groups[g].bias, grads.groups[g].bias, loss));
  }
  return worst;
}

}  // namespace bsecnn::testkit
