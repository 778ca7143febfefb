#pragma once

#include <stdexcept>
#include <string>

namespace jket {

// Error taxonomy shared by all modules. The CLI maps these to exit codes
// and prints kind + location, so every throw site should name the op or
// file:line it originates from.
enum class ErrorKind {
  Shape,     // operand shapes do not conform
  Numeric,   // non-finite value produced by a forward pass
  Usage,     // API misuse (backward with no tape, missing grad, ...)
  Data,      // semantically invalid data (empty corpus, empty field, ...)
  Format,    // malformed file contents
  Io,        // unreadable/unwritable files
  Sampling,  // negative sampling could not avoid collisions
  Config,    // invalid run configuration
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& where, const std::string& what)
      : std::runtime_error(std::string(error_kind_name(kind)) + " [" + where + "]: " + what),
        kind_(kind),
        where_(where) {}

  ErrorKind kind() const { return kind_; }
  const std::string& where() const { return where_; }

 private:
  ErrorKind kind_;
  std::string where_;
};

struct ShapeError : Error {
  ShapeError(const std::string& where, const std::string& what) : Error(ErrorKind::Shape, where, what) {}
};
struct NumericError : Error {
  NumericError(const std::string& where, const std::string& what) : Error(ErrorKind::Numeric, where, what) {}
};
struct UsageError : Error {
  UsageError(const std::string& where, const std::string& what) : Error(ErrorKind::Usage, where, what) {}
};
struct DataError : Error {
  DataError(const std::string& where, const std::string& what) : Error(ErrorKind::Data, where, what) {}
};
struct FormatError : Error {
  FormatError(const std::string& where, const std::string& what) : Error(ErrorKind::Format, where, what) {}
};
struct IoError : Error {
  IoError(const std::string& where, const std::string& what) : Error(ErrorKind::Io, where, what) {}
};
struct SamplingError : Error {
  SamplingError(const std::string& where, const std::string& what) : Error(ErrorKind::Sampling, where, what) {}
};
struct ConfigError : Error {
  ConfigError(const std::string& where, const std::string& what) : Error(ErrorKind::Config, where, what) {}
};

}  // namespace jket
