#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bsecnn/samples.hpp"
#include "bsecnn/tensor.hpp"

namespace bsecnn {

inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;

/// Image dataset with the two label views used throughout: multi-class
/// (0 negative, 1 benign calcification, 2 benign mass, 3 malignant
/// calcification, 4 malignant mass) and binary (0 negative, 1 positive).
///
/// On-disk layout, little-endian:
///   "BSEC" | version u32 | N u64 | H u32 | W u32 | C u32 | dtype u8 (1 = f32)
///   | N*H*W*C f32 row-major | N u8 multi-class labels | N u8 binary labels
///   | metadata length u32 | UTF-8 metadata
struct DatasetContainer {
  Tensor images;  // [N, H, W, C], values in [0, 1]
  std::vector<std::uint8_t> labels_multi;
  std::vector<std::uint8_t> labels_binary;
  std::string metadata;

  std::size_t size() const noexcept { return labels_multi.size(); }
  Shape image_shape() const { return Shape(images.shape().begin() + 1, images.shape().end()); }

  /// Shape agreement, label ranges, binary == binarize(multi), pixel range.
  void validate() const;

  friend bool operator==(const DatasetContainer&, const DatasetContainer&) = default;
};

std::vector<std::uint8_t> encode_container(const DatasetContainer& dataset);

/// Rejects unknown magic, version or dtype, truncation, trailing bytes and
/// any invariant violation with a FormatError carrying the byte offset.
DatasetContainer decode_container(std::span<const std::uint8_t> bytes);

void save_container(const DatasetContainer& dataset, const std::string& path);
DatasetContainer load_container(const std::string& path);

/// Training-ready copy: binary labels for n_classes == 2, multi-class labels
/// for n_classes == 5.
template <typename T>
LabeledSet<T> to_labeled_set(const DatasetContainer& dataset, std::size_t n_classes);

struct SynthOptions {
  std::size_t n_per_class = 200;
  std::size_t n_classes = 5;
  std::size_t image_size = 32;
  std::size_t channels = 1;
  /// Additive uniform noise amplitude; pixels are clamped to [0, 1].
  double noise = 0.15;
  std::uint64_t seed = 0;
};

/// Class templates: blank, small disk, large disk, small cross, large cross,
/// each centred on a dim background.
DatasetContainer synth_dataset(const SynthOptions& options);

struct SplitFractions {
  double train = 0.6;
  double val = 0.1;
  double stacking = 0.2;
  double test = 0.1;

  friend bool operator==(const SplitFractions&, const SplitFractions&) = default;
};

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> stacking;
  std::vector<std::size_t> test;
};

/// Stratified seeded split into four disjoint, covering, ascending index
/// lists. Per class, each part receives floor(n_k * f) samples plus largest
/// remainders, so counts are within one of n_k * f.
DatasetSplit split_dataset(std::span<const int> labels, const SplitFractions& fractions, std::uint64_t seed);

}  // namespace bsecnn
