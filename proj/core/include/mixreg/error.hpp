/*
 * Copyright 2026 The mixreg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace mixreg {

/// Malformed or truncated input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File is well formed but uses a feature this reader does not handle.
class UnsupportedTypeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument is outside its documented domain.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data cannot support the requested construction (e.g. an all-zero
/// gradient field handed to gradient sampling).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No sample survived into the joint histogram.
class DegenerateHistogramError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The starting transform maps every sample outside the moving volume.
class OverlapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mixreg
