// Copyright 2026 The vlad Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace vlad {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible shapes or extents.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (log of x <= 0,
/// out-of-range pixel, invalid probability, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf was produced. Never silently propagated.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed text or binary input (prompts, dataset files, checkpoints).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid or unknown configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace vlad
