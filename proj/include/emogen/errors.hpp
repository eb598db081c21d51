// Copyright 2026 The emogen Authors.
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

namespace emogen {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or manifest content.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (TSV files, vocab files, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, undefined reductions, shape mismatches.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public NumericError {
 public:
  using NumericError::NumericError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace emogen
