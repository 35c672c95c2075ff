// Copyright 2026 The trilinear-sense Authors
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

#include "trilinear/csv.hpp"

namespace trilinear {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller.
class InvalidArgument : public Error {
   public:
    using Error::Error;
};

/// Iterative solver exhausted its budget.
class ConvergenceError : public Error {
   public:
    using Error::Error;
};

/// Radial stiffness has a negative eigenvalue; no linear crystal exists.
class UnstableCrystal : public Error {
   public:
    using Error::Error;
};

class Unsupported : public Error {
   public:
    using Error::Error;
};

/// State norm drifted beyond tolerance.
class NormBreach : public Error {
   public:
    using Error::Error;
};

/// Population reached the last Fock rows of a truncated mode.
class TruncationBreach : public Error {
   public:
    TruncationBreach(std::string mode, double tail_mass, double tolerance)
        : Error("truncation breach in mode '" + mode + "': tail mass " + csv::format_double(tail_mass, 4) +
                " exceeds " + csv::format_double(tolerance, 4)),
          mode_(std::move(mode)),
          tail_mass_(tail_mass) {}

    const std::string &mode() const noexcept { return mode_; }
    double tail_mass() const noexcept { return tail_mass_; }

   private:
    std::string mode_;
    double tail_mass_;
};

/// Malformed experiment or trap configuration.
class ConfigError : public Error {
   public:
    using Error::Error;
};

}  // namespace trilinear
