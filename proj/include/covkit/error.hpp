#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace covkit {

enum class ErrorKind {
  FlatDirection,
  NonFiniteValue,
  LostPrecision,
  NoConvergence,
  NotPositiveDefinite,
  DegenerateHessian,
  AllWeightsZero,
  InsufficientBatches,
  DimensionMismatch,
  NonPositiveDiagonal,
  InvalidArgument,
  ConfigError,
  DataError,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers dispatch on kind().
/// index() carries the coordinate, pivot or eigen-direction involved, if any.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(message), kind_(kind), index_(index) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

  Error with_index(std::size_t index) const {
    return Error(kind_, what(), index);
  }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> index_;
};

}  // namespace covkit
