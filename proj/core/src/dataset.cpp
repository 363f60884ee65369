#include "bsecnn/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "bsecnn/binary_io.hpp"
#include "bsecnn/metrics.hpp"
#include "bsecnn/random.hpp"

namespace bsecnn {
namespace {

constexpr char kMagic[4] = {'B', 'S', 'E', 'C'};

// First invariant violation, indexed within its section.
struct Violation {
  enum class Where { none, pixel, multi_label, binary_label } where = Where::none;
  std::size_t index = 0;
  std::string what;
};

Violation find_violation(const DatasetContainer& d) {
  for (std::size_t i = 0; i < d.images.size(); ++i) {
    const float v = d.images[i];
    if (!(v >= 0.0f && v <= 1.0f)) return {Violation::Where::pixel, i, "pixel value outside [0, 1]"};
  }
  for (std::size_t i = 0; i < d.labels_multi.size(); ++i) {
    if (d.labels_multi[i] >= 5) return {Violation::Where::multi_label, i, "multi-class label outside [0, 5)"};
  }
  for (std::size_t i = 0; i < d.labels_binary.size(); ++i) {
    if (d.labels_binary[i] > 1) return {Violation::Where::binary_label, i, "binary label outside {0, 1}"};
    if (d.labels_binary[i] != binarize_label(d.labels_multi[i])) {
      return {Violation::Where::binary_label, i, "binary label disagrees with multi-class label"};
    }
  }
  return {};
}

void check_shapes(const DatasetContainer& d) {
  if (d.images.rank() != 4) throw InputError("dataset images must be [N, H, W, C]");
  const std::size_t n = d.images.dim(0);
  if (d.labels_multi.size() != n || d.labels_binary.size() != n) {
    throw InputError(fmt::format("dataset has {} images but {} multi-class and {} binary labels", n,
                                 d.labels_multi.size(), d.labels_binary.size()));
  }
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

void DatasetContainer::validate() const {
  check_shapes(*this);
  const auto v = find_violation(*this);
  if (v.where != Violation::Where::none) throw InputError(fmt::format("{} (sample element {})", v.what, v.index));
}

std::vector<std::uint8_t> encode_container(const DatasetContainer& dataset) {
  dataset.validate();
  ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint32_t>(kContainerVersion);
  w.put<std::uint64_t>(dataset.images.dim(0));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.images.dim(1)));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.images.dim(2)));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.images.dim(3)));
  w.put<std::uint8_t>(kDtypeFloat32);
  w.put_array<float>(dataset.images.data());
  w.put_array<std::uint8_t>(dataset.labels_multi);
  w.put_array<std::uint8_t>(dataset.labels_binary);
  w.put_string(dataset.metadata);
  return w.bytes();
}

DatasetContainer decode_container(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.get_bytes(4, "magic") != std::string_view(kMagic, 4)) throw FormatError("bad magic, expected \"BSEC\"", 0);
  const auto version_at = r.offset();
  const auto version = r.get<std::uint32_t>("version");
  if (version != kContainerVersion) {
    throw FormatError(fmt::format("unsupported container version {} (reader supports {})", version, kContainerVersion),
                      version_at);
  }
  const auto n_at = r.offset();
  const auto n = r.get<std::uint64_t>("sample count");
  const auto h = r.get<std::uint32_t>("height");
  const auto w = r.get<std::uint32_t>("width");
  const auto c = r.get<std::uint32_t>("channels");
  const auto dtype_at = r.offset();
  const auto dtype = r.get<std::uint8_t>("dtype tag");
  if (dtype != kDtypeFloat32) throw FormatError(fmt::format("unsupported dtype tag {}", dtype), dtype_at);
  if (n == 0 || h == 0 || w == 0 || c == 0) throw FormatError("dataset dimensions must be positive", n_at);

  const std::uint64_t per_image = std::uint64_t{h} * w * c;
  if (per_image != 0 && n > r.remaining() / per_image) throw FormatError("truncated image payload", r.offset());
  const auto payload_at = r.offset();
  auto pixels = r.get_array<float>(n * per_image, "image payload");
  const auto multi_at = r.offset();
  auto multi = r.get_array<std::uint8_t>(n, "multi-class labels");
  const auto binary_at = r.offset();
  auto binary = r.get_array<std::uint8_t>(n, "binary labels");
  auto metadata = r.get_string("metadata");
  r.expect_end("metadata");

  DatasetContainer d{Tensor({static_cast<std::size_t>(n), h, w, c}, std::move(pixels)), std::move(multi),
                     std::move(binary), std::move(metadata)};
  const auto v = find_violation(d);
  switch (v.where) {
    case Violation::Where::none: break;
    case Violation::Where::pixel: throw FormatError(v.what, payload_at + v.index * sizeof(float));
    case Violation::Where::multi_label: throw FormatError(v.what, multi_at + v.index);
    case Violation::Where::binary_label: throw FormatError(v.what, binary_at + v.index);
  }
  return d;
}

void save_container(const DatasetContainer& dataset, const std::string& path) {
  write_file_bytes(path, encode_container(dataset));
}

DatasetContainer load_container(const std::string& path) { return decode_container(read_file_bytes(path)); }

template <typename T>
LabeledSet<T> to_labeled_set(const DatasetContainer& dataset, std::size_t n_classes) {
  if (n_classes != 2 && n_classes != 5) throw ConfigError("n_classes must be 2 or 5");
  LabeledSet<T> set{dataset.images.cast<T>(), {}, n_classes};
  const auto& src = n_classes == 2 ? dataset.labels_binary : dataset.labels_multi;
  set.labels.assign(src.begin(), src.end());
  return set;
}

template LabeledSet<float> to_labeled_set(const DatasetContainer&, std::size_t);
template LabeledSet<double> to_labeled_set(const DatasetContainer&, std::size_t);

DatasetContainer synth_dataset(const SynthOptions& o) {
  if (o.n_classes < 1 || o.n_classes > 5) throw InputError("synthetic data supports 1 to 5 classes");
  if (o.image_size < 8) throw InputError("synthetic images need at least 8x8 pixels for the class patterns");
  if (o.n_per_class == 0 || o.channels == 0) throw InputError("synthetic dataset must be non-empty");
  if (o.noise < 0) throw InputError("noise amplitude must be non-negative");

  const std::size_t s = o.image_size;
  const double size = static_cast<double>(s);
  const double centre = (size - 1.0) / 2.0;
  const double bar = std::max(0.5, size / 20.0);
  constexpr double background = 0.1, foreground = 0.9;

  auto pattern = [&](std::size_t cls, double dy, double dx) {
    const double r = std::hypot(dy, dx);
    const bool on_cross = [&](double half_len) {
      return (std::abs(dx) <= bar && std::abs(dy) <= half_len) || (std::abs(dy) <= bar && std::abs(dx) <= half_len);
    }(cls == 3 ? 0.2 * size : 0.4 * size);
    switch (cls) {
      case 1: return r <= 0.15 * size;
      case 2: return r <= 0.35 * size;
      case 3:
      case 4: return on_cross;
      default: return false;
    }
  };

  const std::size_t n = o.n_per_class * o.n_classes;
  Tensor images({n, s, s, o.channels});
  DatasetContainer d{std::move(images), std::vector<std::uint8_t>(n), std::vector<std::uint8_t>(n), {}};
  Rng rng(o.seed);
  std::size_t at = 0;
  for (std::size_t i = 0; i < o.n_per_class; ++i) {
    for (std::size_t cls = 0; cls < o.n_classes; ++cls) {
      const std::size_t sample = i * o.n_classes + cls;
      for (std::size_t y = 0; y < s; ++y) {
        for (std::size_t x = 0; x < s; ++x) {
          const double base = pattern(cls, static_cast<double>(y) - centre, static_cast<double>(x) - centre)
                                  ? foreground
                                  : background;
          for (std::size_t ch = 0; ch < o.channels; ++ch) {
            const double jitter = o.noise > 0 ? rng.uniform(-o.noise, o.noise) : 0.0;
            d.images[at++] = static_cast<float>(clamp01(base + jitter));
          }
        }
      }
      d.labels_multi[sample] = static_cast<std::uint8_t>(cls);
      d.labels_binary[sample] = static_cast<std::uint8_t>(cls == 0 ? 0 : 1);
    }
  }
  d.metadata = fmt::format("synthetic n_per_class={} n_classes={} image_size={} channels={} noise={} seed={}",
                           o.n_per_class, o.n_classes, o.image_size, o.channels, o.noise, o.seed);
  return d;
}

DatasetSplit split_dataset(std::span<const int> labels, const SplitFractions& f, std::uint64_t seed) {
  const std::array<double, 4> frac{f.train, f.val, f.stacking, f.test};
  double sum = 0;
  for (double x : frac) {
    if (!(x >= 0.0)) throw InputError("split fractions must be non-negative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError(fmt::format("split fractions sum to {}, expected 1", sum));
  if (labels.empty()) throw InputError("cannot split an empty dataset");

  int top = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw LabelError("negative label", i);
    top = std::max(top, labels[i]);
  }
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(top) + 1);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);

  std::array<std::vector<std::size_t>, 4> parts;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& members = by_class[k];
    if (members.empty()) continue;
    Rng rng(derive_seed(seed, k));
    rng.shuffle(std::span<std::size_t>(members));

    const auto nk = static_cast<double>(members.size());
    std::array<std::size_t, 4> count{};
    std::array<double, 4> remainder{};
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      const double exact = nk * frac[j];
      count[j] = static_cast<std::size_t>(std::floor(exact));
      remainder[j] = exact - static_cast<double>(count[j]);
      assigned += count[j];
    }
    // Largest remainders first; equal remainders rotate with the class so
    // that small classes do not all favour the same part.
    std::array<std::size_t, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
      return (a + 4 - k % 4) % 4 < (b + 4 - k % 4) % 4;
    });
    for (std::size_t i = 0; assigned < members.size(); ++i, ++assigned) {
      if (frac[order[i % 4]] > 0) {
        ++count[order[i % 4]];
      } else {
        --assigned;
      }
    }
    std::size_t pos = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      parts[j].insert(parts[j].end(), members.begin() + static_cast<std::ptrdiff_t>(pos),
                      members.begin() + static_cast<std::ptrdiff_t>(pos + count[j]));
      pos += count[j];
    }
  }

  static constexpr const char* names[4] = {"train", "val", "stacking", "test"};
  for (std::size_t j = 0; j < 4; ++j) {
    std::sort(parts[j].begin(), parts[j].end());
    if (parts[j].empty() && frac[j] > 0 && static_cast<double>(labels.size()) * frac[j] >= 1.0) {
      throw InputError(fmt::format("split part '{}' is empty although its fraction is {}", names[j], frac[j]));
    }
  }
  return {std::move(parts[0]), std::move(parts[1]), std::move(parts[2]), std::move(parts[3])};
}

}  // namespace bsecnn
