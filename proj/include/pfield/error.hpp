#pragma once

#include <stdexcept>
#include <string>

namespace pfield {

/// Broad failure class; the CLI maps these onto exit codes 2/3/4.
enum class ErrorKind { Config, Data, Internal };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

/// Malformed input row; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what);
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Frame stride of an agent differs from the file stride.
class StrideError : public DataError {
 public:
  StrideError(long long agent_id, const std::string& what);
  [[nodiscard]] long long agent_id() const noexcept { return agent_id_; }

 private:
  long long agent_id_;
};

/// Trajectory with zero total path length cannot be labeled.
class DegenerateLabelError : public DataError {
 public:
  using DataError::DataError;
};

class OutOfBoundsError : public DataError {
 public:
  using DataError::DataError;
};

/// Grid specs or channel counts disagree.
class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

class EstimatorUnfitError : public DataError {
 public:
  using DataError::DataError;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

/// Runs `fn`, prefixing any pfield::Error message with the pipeline stage name.
template <typename Fn>
decltype(auto) with_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(stage) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Internal, std::string(stage) + ": " + e.what());
  }
}

}  // namespace pfield
