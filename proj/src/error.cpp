#include "covkit/error.hpp"

namespace covkit {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::FlatDirection: return "FlatDirection";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::LostPrecision: return "LostPrecision";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::DegenerateHessian: return "DegenerateHessian";
    case ErrorKind::AllWeightsZero: return "AllWeightsZero";
    case ErrorKind::InsufficientBatches: return "InsufficientBatches";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonPositiveDiagonal: return "NonPositiveDiagonal";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::DataError: return "DataError";
  }
  return "Unknown";
}

}  // namespace covkit
