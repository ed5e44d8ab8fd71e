// Copyright 2026 The nvtrap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NVTRAP_UNITS_HPP
#define NVTRAP_UNITS_HPP

#include <numbers>

/// Physical constants (CODATA 2018, SI) and the handful of unit conversions
/// used at the library boundary. Everything inside the library is SI; the
/// helpers below are the only places where nm, GHz or THz appear.
namespace nvtrap::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double eps0 = 8.8541878128e-12;       // F/m
inline constexpr double c = 299792458.0;               // m/s
inline constexpr double k_boltzmann = 1.380649e-23;    // J/K

inline constexpr double nm = 1e-9;
inline constexpr double mW = 1e-3;
inline constexpr double GHz = 1e9;
inline constexpr double THz = 1e12;
inline constexpr double MHz = 1e6;

/// Vacuum wavelength (m) to angular frequency (rad/s).
constexpr double angular_from_wavelength(double wavelength) {
  return two_pi * c / wavelength;
}

/// Angular frequency (rad/s) to vacuum wavelength (m).
constexpr double wavelength_from_angular(double omega) {
  return two_pi * c / omega;
}

/// Angular rate for a cyclic frequency, i.e. 2*pi*f.
constexpr double angular_rate(double hertz) { return two_pi * hertz; }

/// Converts a spectral width in wavelength units around `center` (both m)
/// into an angular-frequency width (first-order dispersion).
constexpr double angular_width_from_wavelength(double width, double center) {
  return two_pi * c * width / (center * center);
}

}  // namespace nvtrap::units

#endif  // NVTRAP_UNITS_HPP
