#pragma once

#include <stdexcept>
#include <string>

namespace cdcnn {

// Broad failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  usage,       // bad arguments or configuration values
  data,        // malformed or inconsistent input files / datasets
  shape,       // tensor shapes do not agree with an operation's contract
  numeric,     // NaN/Inf encountered, or a numerically impossible request
  checkpoint,  // checkpoint stream failed to decode
  io,          // filesystem failures
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};
struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& what) : Error(ErrorKind::shape, what) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};
struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

}  // namespace cdcnn
