#include "jket/error.hpp"

namespace jket {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Shape: return "ShapeError";
    case ErrorKind::Numeric: return "NumericError";
    case ErrorKind::Usage: return "UsageError";
    case ErrorKind::Data: return "DataError";
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Sampling: return "SamplingError";
    case ErrorKind::Config: return "ConfigError";
  }
  return "Error";
}

}  // namespace jket
