#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bsecnn/bagging.hpp"
#include "bsecnn/config.hpp"

namespace bsecnn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Trained ensemble plus the configuration that produced it.
///
/// On-disk layout, little-endian:
///   "BSCK" | version u32 | scalar width u8 (4 or 8) | config text (u32 length + UTF-8)
///   | seeds 4 x u64 | model spec | member count u32 | member parameter sets
///   | combiner u8 | forest flag u8 | forest
template <typename T>
struct Checkpoint {
  EnsembleModel<T> ensemble;
  RunConfig config;
  RunSeeds seeds;
};

template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint<T>& checkpoint);

/// Throws FormatError with the byte offset on bad magic, unsupported
/// version, a scalar width other than sizeof(T), truncation or trailing data.
template <typename T>
Checkpoint<T> decode_checkpoint(std::span<const std::uint8_t> bytes);

template <typename T>
void save_checkpoint(const Checkpoint<T>& checkpoint, const std::string& path);

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path);

/// 32 or 64, read from the header without decoding the rest.
int checkpoint_precision(std::span<const std::uint8_t> bytes);

}  // namespace bsecnn
