#include "bsecnn/image_ops.hpp"

#include <algorithm>
#include <cmath>

namespace bsecnn {
namespace {

void require_image(const Tensor& image, const char* what) {
  if (image.rank() != 3) {
    throw InputError(std::string(what) + ": expected an [H, W, C] image, got " + shape_to_string(image.shape()));
  }
}

}  // namespace

std::vector<Tensor> tile_image(const Tensor& image, std::size_t tile) {
  require_image(image, "tile_image");
  if (tile == 0) throw InputError("tile_image: tile size must be positive");
  const std::size_t h = image.dim(0), w = image.dim(1);
  if (h < tile || w < tile) {
    throw InputError("tile_image: image " + shape_to_string(image.shape()) + " smaller than tile " +
                     std::to_string(tile));
  }
  std::vector<Tensor> tiles;
  for (std::size_t ty = 0; ty + tile <= h; ty += tile) {
    for (std::size_t tx = 0; tx + tile <= w; tx += tile) tiles.push_back(crop(image, ty, tx, tile, tile));
  }
  return tiles;
}

Tensor resize_bilinear(const Tensor& image, std::size_t target_h, std::size_t target_w) {
  require_image(image, "resize_bilinear");
  if (target_h == 0 || target_w == 0) throw InputError("resize_bilinear: target dimensions must be positive");
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  Tensor out({target_h, target_w, c});

  auto source = [](std::size_t dst, std::size_t src_n, std::size_t dst_n) {
    const double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(src_n) / static_cast<double>(dst_n) - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(src_n - 1));
  };

  for (std::size_t y = 0; y < target_h; ++y) {
    const double sy = source(y, h, target_h);
    const auto y0 = static_cast<std::size_t>(std::floor(sy));
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < target_w; ++x) {
      const double sx = source(x, w, target_w);
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double top = (1 - fx) * image.at(y0, x0, ch) + fx * image.at(y0, x1, ch);
        const double bottom = (1 - fx) * image.at(y1, x0, ch) + fx * image.at(y1, x1, ch);
        out.at(y, x, ch) = static_cast<float>((1 - fy) * top + fy * bottom);
      }
    }
  }
  return out;
}

Tensor crop(const Tensor& image, std::size_t top, std::size_t left, std::size_t height, std::size_t width) {
  require_image(image, "crop");
  if (height == 0 || width == 0 || top + height > image.dim(0) || left + width > image.dim(1)) {
    throw InputError("crop window exceeds image " + shape_to_string(image.shape()));
  }
  const std::size_t c = image.dim(2);
  Tensor out({height, width, c});
  for (std::size_t y = 0; y < height; ++y) {
    const auto src = image.data().subspan(((top + y) * image.dim(1) + left) * c, width * c);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(y * width * c));
  }
  return out;
}

Tensor flip_horizontal(const Tensor& image) {
  require_image(image, "flip_horizontal");
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  Tensor out(image.shape());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) out.at(y, w - 1 - x, ch) = image.at(y, x, ch);
    }
  }
  return out;
}

Tensor rotate90(const Tensor& image, std::size_t quarter_turns) {
  require_image(image, "rotate90");
  Tensor current = image;
  for (std::size_t turn = 0; turn < quarter_turns % 4; ++turn) {
    const std::size_t h = current.dim(0), w = current.dim(1), c = current.dim(2);
    Tensor next({w, h, c});
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        for (std::size_t ch = 0; ch < c; ++ch) next.at(x, h - 1 - y, ch) = current.at(y, x, ch);
      }
    }
    current = std::move(next);
  }
  return current;
}

std::vector<Tensor> augment(const Tensor& image, const AugmentSpec& spec, Rng& rng) {
  require_image(image, "augment");
  if (spec.crop_h == 0 || spec.crop_w == 0 || spec.crop_h > image.dim(0) || spec.crop_w > image.dim(1)) {
    throw InputError("augment: crop " + std::to_string(spec.crop_h) + "x" + std::to_string(spec.crop_w) +
                     " does not fit image " + shape_to_string(image.shape()));
  }
  std::vector<Tensor> out;
  out.reserve(spec.crop_count);
  for (std::size_t i = 0; i < spec.crop_count; ++i) {
    const auto top = static_cast<std::size_t>(rng.below(image.dim(0) - spec.crop_h + 1));
    const auto left = static_cast<std::size_t>(rng.below(image.dim(1) - spec.crop_w + 1));
    Tensor t = crop(image, top, left, spec.crop_h, spec.crop_w);
    if (spec.enable_flips && rng.coin()) t = flip_horizontal(t);
    if (spec.enable_rot90) {
      const auto turns = spec.crop_h == spec.crop_w ? rng.below(4) : 2 * rng.below(2);
      t = rotate90(t, static_cast<std::size_t>(turns));
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Tensor> augment(const Tensor& image, const AugmentSpec& spec) {
  Rng rng(spec.seed);
  return augment(image, spec, rng);
}

}  // namespace bsecnn
