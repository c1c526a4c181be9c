// Copyright 2026 The Catstab Authors.
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

#ifndef CATSTAB_ERRORS_HPP
#define CATSTAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace catstab {

// Base class for everything thrown by this library.
struct CatstabError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mode dimension < 2, Fock index out of range, and similar construction mistakes.
struct InvalidDimensionError : CatstabError {
  using CatstabError::CatstabError;
};

// Parameter outside its mathematical domain (e.g. an odd cat at alpha = 0).
struct InvalidArgumentError : CatstabError {
  using CatstabError::CatstabError;
};

// Operands built on incompatible mode layouts.
struct LayoutError : CatstabError {
  using CatstabError::CatstabError;
};

// A request would exceed an explicit size cap (e.g. dense superoperator
// assembly past the dimension limit).  `required_bytes` is the estimated
// allocation that was refused.
struct CapacityError : CatstabError {
  std::size_t required_bytes = 0;
  CapacityError(const std::string& msg, std::size_t bytes)
      : CatstabError(msg), required_bytes(bytes) {}
};

// Time stepping failed: step size underflow, tolerance not reachable, NaNs.
struct IntegratorError : CatstabError {
  using CatstabError::CatstabError;
};

// A numerically singular / ill-posed linear-algebra subproblem.
struct NumericalError : CatstabError {
  using CatstabError::CatstabError;
};

// Steady-state solve found more than one candidate stationary state.
struct DegenerateSteadyStateError : NumericalError {
  int null_space_dim = 0;
  DegenerateSteadyStateError(const std::string& msg, int dim)
      : NumericalError(msg), null_space_dim(dim) {}
};

// Bad user input: malformed JSON, unknown keys, out-of-range parameters.
struct ConfigError : CatstabError {
  using CatstabError::CatstabError;
};

}  // namespace catstab

#endif  // CATSTAB_ERRORS_HPP
