#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "bsecnn/error.hpp"

namespace bsecnn {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts need byte swapping");

/// Append-only little-endian encoder.
class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put_array(std::span<const T> values) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
    bytes_.insert(bytes_.end(), p, p + values.size_bytes());
  }

  void put_bytes(std::string_view raw) { bytes_.insert(bytes_.end(), raw.begin(), raw.end()); }

  /// u32 length prefix followed by the UTF-8 bytes.
  void put_string(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s);
  }

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

/// Bounds-checked little-endian decoder; failures carry the byte offset.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get(const char* what) {
    require(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  std::vector<T> get_array(std::uint64_t count, const char* what) {
    if (count > remaining() / sizeof(T)) throw FormatError(std::string("truncated ") + what, offset_);
    std::vector<T> out(static_cast<std::size_t>(count));
    std::memcpy(out.data(), bytes_.data() + offset_, static_cast<std::size_t>(count) * sizeof(T));
    offset_ += static_cast<std::size_t>(count) * sizeof(T);
    return out;
  }

  std::string get_bytes(std::uint64_t count, const char* what) {
    if (count > remaining()) throw FormatError(std::string("truncated ") + what, offset_);
    std::string out(reinterpret_cast<const char*>(bytes_.data() + offset_), static_cast<std::size_t>(count));
    offset_ += static_cast<std::size_t>(count);
    return out;
  }

  std::string get_string(const char* what) { return get_bytes(get<std::uint32_t>(what), what); }

  std::uint64_t offset() const noexcept { return offset_; }
  std::uint64_t remaining() const noexcept { return bytes_.size() - offset_; }

  /// Throws unless every byte was consumed.
  void expect_end(const char* what) const {
    if (remaining() != 0) throw FormatError(std::string("trailing bytes after ") + what, offset_);
  }

 private:
  void require(std::size_t n, const char* what) const {
    if (n > remaining()) throw FormatError(std::string("truncated ") + what, offset_);
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace bsecnn
