#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bsecnn {

// Every failure raised by the library derives from Error. The CLI maps the
// category() onto its exit codes.
enum class ErrorCategory { config, data, numeric };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ErrorCategory category() const noexcept { return ErrorCategory::data; }
};

// Tensor/layer shape disagreement.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Non-finite values in logits, gradients or parameters.
class NumericError : public Error {
 public:
  using Error::Error;
  ErrorCategory category() const noexcept override { return ErrorCategory::numeric; }
};

// A class label outside [0, n_classes).
class LabelError : public Error {
 public:
  LabelError(const std::string& what, std::size_t index)
      : Error(what + " (at index " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// Empty inputs and violated preconditions on arguments.
class InputError : public Error {
 public:
  using Error::Error;
};

// Metric with an all-zero denominator set.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
  ErrorCategory category() const noexcept override { return ErrorCategory::numeric; }
};

// Malformed or truncated binary file.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ErrorCategory category() const noexcept override { return ErrorCategory::config; }
};

}  // namespace bsecnn
