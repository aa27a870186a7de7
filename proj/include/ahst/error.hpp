// Copyright 2026 The AHST Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace ahst {

/// Base class for all library errors. Each subclass maps onto one CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad parameters, unparseable files, invalid state specs.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Image, kernel table and configuration disagree about the sampling grid.
class GeometryMismatch : public Error {
 public:
  using Error::Error;
};

/// Data that carries no usable signal (black image, zero trace).
class DegenerateData : public Error {
 public:
  using Error::Error;
};

/// Nonlinear fit failed to converge or converged to a poor model.
class FitError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidInput(what);
}

}  // namespace ahst
