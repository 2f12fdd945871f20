// Copyright 2026 The refbeauty Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace refbeauty {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or inconsistent configuration (unknown column, incompatible checkpoints, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Tensor dimensions do not satisfy an architecture contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A model is asked to produce features/scores before its weights exist.
class NotReadyError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A training loss evaluated to NaN or infinity.
class NonFiniteLossError : public Error {
 public:
  NonFiniteLossError(const std::string& term, const std::string& diagnostic)
      : Error("non-finite loss term '" + term + "': " + diagnostic), term_(term) {}

  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

}  // namespace refbeauty
