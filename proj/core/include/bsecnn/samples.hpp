#pragma once

#include <cstddef>
#include <vector>

#include "bsecnn/tensor.hpp"

namespace bsecnn {

/// Images [N, H, W, C] with one integer class label per image.
template <typename T>
struct LabeledSet {
  BasicTensor<T> images;
  std::vector<int> labels;
  std::size_t n_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  Shape sample_shape() const { return Shape(images.shape().begin() + 1, images.shape().end()); }
};

/// Index list (repetition allowed) into a shared LabeledSet. The set must
/// outlive the view.
template <typename T>
struct SampleView {
  const LabeledSet<T>* set = nullptr;
  std::vector<std::size_t> indices;

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
  int label(std::size_t i) const { return set->labels[indices[i]]; }
  BasicTensor<T> image(std::size_t i) const { return set->images.slice(indices[i]); }

  /// Stacked images [n, H, W, C] of this view.
  BasicTensor<T> batch() const {
    std::vector<BasicTensor<T>> items;
    items.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) items.push_back(image(i));
    return stack<T>(items);
  }

  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(set->labels[i]);
    return out;
  }

  /// View over a subset of this view's positions.
  SampleView subview(const std::vector<std::size_t>& positions) const {
    SampleView v{set, {}};
    v.indices.reserve(positions.size());
    for (auto p : positions) v.indices.push_back(indices.at(p));
    return v;
  }
};

template <typename T>
SampleView<T> full_view(const LabeledSet<T>& set) {
  SampleView<T> v{&set, std::vector<std::size_t>(set.size())};
  for (std::size_t i = 0; i < set.size(); ++i) v.indices[i] = i;
  return v;
}

}  // namespace bsecnn
