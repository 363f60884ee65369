#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bsecnn/random.hpp"
#include "bsecnn/tensor.hpp"

namespace bsecnn {

/// Non-overlapping row-major tiles of an [H, W, C] image; partial edge tiles
/// are discarded.
std::vector<Tensor> tile_image(const Tensor& image, std::size_t tile = 598);

/// Bilinear resize with half-pixel centres: source coordinate
/// (dst + 0.5) * src / dst - 0.5, clamped to the image.
Tensor resize_bilinear(const Tensor& image, std::size_t target_h, std::size_t target_w);

Tensor crop(const Tensor& image, std::size_t top, std::size_t left, std::size_t height, std::size_t width);
Tensor flip_horizontal(const Tensor& image);
/// Clockwise rotation by quarter_turns * 90 degrees.
Tensor rotate90(const Tensor& image, std::size_t quarter_turns);

struct AugmentSpec {
  std::size_t crop_count = 3;
  bool enable_flips = true;
  bool enable_rot90 = true;
  std::size_t crop_h = 598;
  std::size_t crop_w = 598;
  std::uint64_t seed = 0;
};

/// crop_count random crops, each flipped horizontally with p = 0.5 and
/// rotated by a uniform multiple of 90 degrees (180 for non-square crops so
/// the output keeps crop_size).
std::vector<Tensor> augment(const Tensor& image, const AugmentSpec& spec, Rng& rng);
std::vector<Tensor> augment(const Tensor& image, const AugmentSpec& spec);

}  // namespace bsecnn
