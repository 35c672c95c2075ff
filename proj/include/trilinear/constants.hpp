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

#include <numbers>

namespace trilinear::constants {

// CODATA 2018 exact / recommended values, SI.
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double epsilon0 = 8.8541878128e-12;     // F/m
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Converts a "frequency over 2 pi" in kHz to an angular frequency in rad/s.
constexpr double khz_to_rad_per_s(double f_khz) { return two_pi * 1e3 * f_khz; }
constexpr double rad_per_s_to_khz(double w) { return w / (two_pi * 1e3); }
constexpr double ms_to_s(double t_ms) { return 1e-3 * t_ms; }
constexpr double s_to_ms(double t_s) { return 1e3 * t_s; }

}  // namespace trilinear::constants
