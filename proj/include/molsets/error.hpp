// SPDX-FileCopyrightText: Copyright (c) 2026 The MolSets Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace molsets {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// SMILES grammar violation; `offset()` is the 0-based character position.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(message + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Element or descriptor lookup failure while building node features.
class FeaturizationError : public Error {
 public:
  using Error::Error;
};

/// Incompatible tensor or layer shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Violated precondition of an operation (empty set, non-scalar loss, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (CSV rows, weight fractions, targets).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during training or prediction.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace molsets
