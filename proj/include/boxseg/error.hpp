// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace boxseg {

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data or arguments violate a documented contract. CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or encoding failure. CLI exit code 2.
class IoError : public Error {
 public:
  using Error::Error;
};

// Interchange-specific failures, kept distinct so callers can tell them apart.
class MalformedJsonError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SchemaVersionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class HashMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace boxseg
