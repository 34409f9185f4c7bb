// advlip/error.hpp

// Copyright 2026 The advlip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ADVLIP_ERROR_HPP_
#define ADVLIP_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace advlip {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is out of its valid domain. `field()` names it.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Malformed, truncated or inconsistent data on disk or in memory.
class DataError : public Error {
 public:
  enum class Kind { kIo, kBadMagic, kTruncated, kIntegrity, kMalformed, kInsufficient };

  DataError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// A non-finite value appeared where finite values are required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace advlip

#endif  // ADVLIP_ERROR_HPP_
