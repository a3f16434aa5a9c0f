#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sharplab {

/// Base class for every error raised by the library. `kind()` is a short
/// machine-readable tag used by the CLI's single-line error output.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

class ShapeError : public Error {
public:
  explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

class ParameterError : public Error {
public:
  explicit ParameterError(const std::string& what) : Error("parameter", what) {}
};

class FormatError : public Error {
public:
  explicit FormatError(const std::string& what) : Error("format", what) {}
};

class LengthError : public Error {
public:
  explicit LengthError(const std::string& what) : Error("length", what) {}
};

class NumericError : public Error {
public:
  explicit NumericError(const std::string& what) : Error("numeric", what) {}
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class UndefinedCorrelation : public Error {
public:
  explicit UndefinedCorrelation(const std::string& what)
      : Error("undefined-correlation", what) {}
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error("parse", what), row_(row), column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

private:
  std::size_t row_;
  std::size_t column_;
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

/// Training produced a non-finite or exploding loss.
class DivergedError : public Error {
public:
  DivergedError(const std::string& what, std::size_t epoch)
      : Error("diverged", what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

private:
  std::size_t epoch_;
};

}  // namespace sharplab
