// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace granum {

/// Root of every error the engine throws.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer dimensions do not agree.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Invalid argument range (for example lo >= hi in a uniform draw).
class RangeError : public Error {
public:
  using Error::Error;
};

/// Bad hyperparameters, unknown model ids, ill-placed split boundaries.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Not enough data, empty inputs, non-positive means.
class DataError : public Error {
public:
  using Error::Error;
};

/// A CSV row could not be read. Carries the 1-based line number.
class ParseError : public DataError {
public:
  ParseError(std::size_t line, const std::string &what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Well-formed input that breaks a domain rule (OHLC ordering, duplicates).
class ValidationError : public DataError {
public:
  using DataError::DataError;
};

/// Weight documents and result files: I/O failures, bad versions, truncation.
class PersistenceError : public Error {
public:
  using Error::Error;
};

} // namespace granum
