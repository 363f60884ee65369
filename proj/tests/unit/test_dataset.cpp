#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include <gtest/gtest.h>

#include "bsecnn/binary_io.hpp"
#include "bsecnn/dataset.hpp"
#include "testing.hpp"

using namespace bsecnn;

namespace {

DatasetContainer tiny_container() {
  DatasetContainer d{Tensor({3, 2, 2, 1}, {0, 0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f, 0.7f, 0.8f, 0.9f, 1.0f, 0.25f}),
                     {0, 3, 4},
                     {0, 1, 1},
                     "unit"};
  return d;
}

constexpr std::size_t kPayloadOffset = 4 + 4 + 8 + 4 + 4 + 4 + 1;

std::uint64_t format_offset(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_container(bytes);
  } catch (const FormatError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "decode accepted corrupt bytes";
  return 0;
}

}  // namespace

TEST(Container, RoundTripIsByteIdentical) {
  const auto d = tiny_container();
  const auto bytes = encode_container(d);
  EXPECT_EQ(bytes.size(), kPayloadOffset + 12 * 4 + 3 + 3 + 4 + 4);
  const auto back = decode_container(bytes);
  EXPECT_EQ(back, d);
  EXPECT_EQ(encode_container(back), bytes);

  testkit::TempDir dir("container");
  save_container(d, dir.file("d.bsec"));
  EXPECT_EQ(load_container(dir.file("d.bsec")), d);
  EXPECT_EQ(read_file_bytes(dir.file("d.bsec")), bytes);
}

TEST(Container, HeaderFieldsAreLittleEndian) {
  const auto bytes = encode_container(tiny_container());
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "BSEC");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 3);
  EXPECT_EQ(bytes[16], 2);
  EXPECT_EQ(bytes[kPayloadOffset - 1], kDtypeFloat32);
}

TEST(Container, RejectsCorruptionWithOffsets) {
  const auto good = encode_container(tiny_container());

  auto bad_magic = good;
  bad_magic[1] = 'X';
  EXPECT_EQ(format_offset(bad_magic), 0u);

  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(format_offset(bad_version), 4u);

  auto bad_dtype = good;
  bad_dtype[kPayloadOffset - 1] = 2;
  EXPECT_EQ(format_offset(bad_dtype), kPayloadOffset - 1);

  auto bad_binary = good;
  const std::size_t binary_at = kPayloadOffset + 48 + 3;
  bad_binary[binary_at + 1] = 0;
  EXPECT_EQ(format_offset(bad_binary), binary_at + 1);

  auto bad_multi = good;
  bad_multi[kPayloadOffset + 48 + 2] = 5;
  EXPECT_EQ(format_offset(bad_multi), kPayloadOffset + 48 + 2);

  auto bad_pixel = good;
  const float big = 1.5f;
  std::memcpy(bad_pixel.data() + kPayloadOffset + 4 * 5, &big, 4);
  EXPECT_EQ(format_offset(bad_pixel), kPayloadOffset + 20);

  auto trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(format_offset(trailing), good.size());
}

TEST(Container, EveryTruncationIsRejected) {
  const auto good = encode_container(tiny_container());
  for (std::size_t len = 0; len < good.size(); ++len) {
    std::vector<std::uint8_t> cut(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(len));
    EXPECT_THROW(decode_container(cut), FormatError) << "length " << len;
  }
}

TEST(Container, ValidateCatchesInconsistentLabels) {
  auto d = tiny_container();
  d.labels_binary[0] = 1;
  EXPECT_THROW(d.validate(), InputError);
  EXPECT_THROW(encode_container(d), InputError);
}

TEST(Container, LabeledSetPicksLabelView) {
  const auto d = tiny_container();
  EXPECT_EQ(to_labeled_set<float>(d, 5).labels, (std::vector<int>{0, 3, 4}));
  EXPECT_EQ(to_labeled_set<double>(d, 2).labels, (std::vector<int>{0, 1, 1}));
  EXPECT_THROW(to_labeled_set<float>(d, 3), ConfigError);
}

TEST(Synth, DeterministicAndLabelled) {
  SynthOptions o;
  o.n_per_class = 4;
  o.image_size = 16;
  o.seed = 5;
  const auto a = synth_dataset(o);
  EXPECT_EQ(a, synth_dataset(o));
  o.seed = 6;
  EXPECT_NE(a.images, synth_dataset(o).images);
  EXPECT_EQ(a.size(), 20u);
  EXPECT_NO_THROW(a.validate());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.labels_multi[i], i % 5);
}

TEST(Synth, NoiselessImagesAreIdenticalWithinClass) {
  SynthOptions o;
  o.n_per_class = 3;
  o.noise = 0;
  const auto d = synth_dataset(o);
  for (std::size_t i = 5; i < d.size(); ++i) EXPECT_EQ(d.images.slice(i), d.images.slice(i % 5));
}

TEST(Synth, NearestCentroidSeparatesNoiselessClasses) {
  SynthOptions o;
  o.n_per_class = 2;
  o.noise = 0;
  o.image_size = 20;
  const auto d = synth_dataset(o);
  std::vector<Tensor> centroid;
  for (std::size_t k = 0; k < 5; ++k) centroid.push_back(d.images.slice(k));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto img = d.images.slice(i);
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t k = 0; k < 5; ++k) {
      double dist = 0;
      for (std::size_t j = 0; j < img.size(); ++j) dist += std::pow(img[j] - centroid[k][j], 2);
      if (dist < best_d) best_d = dist, best = k;
    }
    EXPECT_EQ(best, d.labels_multi[i]);
  }
  // Distinct templates: every pair differs.
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = a + 1; b < 5; ++b) EXPECT_NE(centroid[a], centroid[b]) << a << " vs " << b;
}

TEST(Synth, RejectsTinyImages) {
  SynthOptions o;
  o.image_size = 6;
  EXPECT_THROW(synth_dataset(o), InputError);
}

TEST(Split, DisjointCoveringStratifiedDeterministic) {
  testkit::Gen gen(31);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 20 + gen.index(400);
    const int classes = 2 + gen.integer(0, 3);
    const auto labels = gen.labels(n, classes);
    const SplitFractions f{};
    const auto s = split_dataset(labels, f, static_cast<std::uint64_t>(trial));

    std::vector<int> seen(n, 0);
    for (const auto* part : {&s.train, &s.val, &s.stacking, &s.test}) {
      EXPECT_TRUE(std::is_sorted(part->begin(), part->end()));
      for (auto i : *part) ++seen[i];
    }
    for (int c : seen) ASSERT_EQ(c, 1);

    const double frac[4] = {f.train, f.val, f.stacking, f.test};
    const std::vector<std::size_t>* parts[4] = {&s.train, &s.val, &s.stacking, &s.test};
    for (int k = 0; k < classes; ++k) {
      const auto nk = static_cast<double>(std::count(labels.begin(), labels.end(), k));
      for (int j = 0; j < 4; ++j) {
        const auto got = std::count_if(parts[j]->begin(), parts[j]->end(), [&](auto i) { return labels[i] == k; });
        EXPECT_LE(std::abs(static_cast<double>(got) - nk * frac[j]), 1.0);
      }
    }
    const auto again = split_dataset(labels, f, static_cast<std::uint64_t>(trial));
    EXPECT_EQ(again.train, s.train);
    EXPECT_EQ(again.test, s.test);
  }
}

TEST(Split, RejectsBadFractions) {
  const std::vector<int> labels(100, 0);
  EXPECT_THROW(split_dataset(labels, SplitFractions{0.5, 0.1, 0.1, 0.1}, 0), InputError);
  EXPECT_THROW(split_dataset(labels, SplitFractions{1.2, -0.2, 0.0, 0.0}, 0), InputError);
  EXPECT_NO_THROW(split_dataset(labels, SplitFractions{0.6, 0.1, 0.2, 0.1 + 5e-10}, 0));
}

TEST(Split, EmptyPartForLargeEnoughDatasetRaises) {
  // Each class of two puts its larger remainder into train, so test stays
  // empty although 6 * 0.2 >= 1.
  const std::vector<int> labels{0, 1, 2, 0, 1, 2};
  EXPECT_THROW(split_dataset(labels, SplitFractions{0.8, 0.0, 0.0, 0.2}, 0), InputError);
  const std::vector<int> single{0, 1};
  EXPECT_NO_THROW(split_dataset(single, SplitFractions{0.8, 0.0, 0.0, 0.2}, 0));
}
