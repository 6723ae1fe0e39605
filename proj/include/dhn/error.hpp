//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <stdexcept>
#include <string>

namespace dhn {

/// Malformed or inconsistent input (files, configuration, network data).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A row of an input file could not be parsed.
class ParseError : public InputError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : InputError(file + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Parsed data violates a model invariant.
class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

/// Linear solver or optimizer breakdown.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dhn
