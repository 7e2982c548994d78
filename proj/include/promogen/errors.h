// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace promogen {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidAnchorPositions : public Error {
 public:
  using Error::Error;
};

/// Anchor filter parameters admit no valid placement (R < 0).
class Infeasible : public Error {
 public:
  using Error::Error;
};

class InvalidStage : public Error {
 public:
  using Error::Error;
};

class MissingGradient : public Error {
 public:
  using Error::Error;
};

/// A metric has no valid samples to average over.
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

} // namespace promogen
