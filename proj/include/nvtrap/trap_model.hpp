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

#ifndef NVTRAP_TRAP_MODEL_HPP
#define NVTRAP_TRAP_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "nvtrap/collective_spin.hpp"
#include "nvtrap/error.hpp"
#include "nvtrap/parallel.hpp"
#include "nvtrap/quantum_core.hpp"
#include "nvtrap/stiffness_table.hpp"
#include "nvtrap/units.hpp"

/// Rayleigh trap of a nanodiamond plus the dipole contribution of its NV
/// centres, wavelength sweeps and the normalised observables.
namespace nvtrap::trap {

using collective::Nanodiamond;
using quantum::NVPhotophysics;

enum class WaistLaw { constant, linear };

struct BeamConfig {
  double wavelength = 640.0 * units::nm;
  double power = 4.0 * units::mW;
  double w0_ref = 470.0 * units::nm;       ///< waist at lambda_w0_ref
  double lambda_w0_ref = 640.0 * units::nm;
  double n_medium = 1.33;
  WaistLaw waist_law = WaistLaw::linear;

  void validate() const {
    detail::require(wavelength > 0.0, "BeamConfig: wavelength must be > 0");
    detail::require(power >= 0.0, "BeamConfig: power must be >= 0");
    detail::require(w0_ref > 0.0, "BeamConfig: w0_ref must be > 0");
    detail::require(lambda_w0_ref > 0.0, "BeamConfig: lambda_w0_ref must be > 0");
    detail::require(n_medium > 0.0, "BeamConfig: n_medium must be > 0");
  }

  double waist() const {
    return waist_law == WaistLaw::linear ? w0_ref * (wavelength / lambda_w0_ref)
                                         : w0_ref;
  }

  double omega() const { return units::angular_from_wavelength(wavelength); }

  BeamConfig at(double lambda) const {
    BeamConfig b = *this;
    b.wavelength = lambda;
    return b;
  }
};

/// E0 = sqrt(4 P / (pi w0^2 n2 eps0 c)).
inline double field_amplitude(const BeamConfig& beam) {
  beam.validate();
  const double w0 = beam.waist();
  return std::sqrt(4.0 * beam.power /
                   (units::pi * w0 * w0 * beam.n_medium * units::eps0 * units::c));
}

inline quantum::DriveField drive_field(const BeamConfig& beam) {
  return {beam.omega(), field_amplitude(beam), 0.0, beam.waist()};
}

/// Rayleigh (dipole) approximation holds for radius <= lambda / 4.
inline bool rayleigh_regime(double radius, const BeamConfig& beam) {
  return radius <= 0.25 * beam.wavelength;
}

/// kappa_cl = (4 pi eps0 n2 R^3 / w0^2) ((m^2 - 1)/(m^2 + 2)) E0^2, m = n1/n2.
inline double classical_stiffness(double radius, const BeamConfig& beam,
                                  double n_host) {
  detail::require(radius > 0.0, "classical_stiffness: radius must be > 0");
  detail::require(n_host > 0.0, "classical_stiffness: n_host must be > 0");
  const double w0 = beam.waist();
  const double e0 = field_amplitude(beam);
  const double m = n_host / beam.n_medium;
  const double cm = (m * m - 1.0) / (m * m + 2.0);
  return 4.0 * units::pi * units::eps0 * beam.n_medium * radius * radius *
         radius / (w0 * w0) * cm * e0 * e0;
}

/// N identical, independent NVs at the crystal-mean ZPL:
/// kappa_q = -N (hbar Delta / 2 eta) (Gamma / 2 gamma) (4 / w0^2) s0/(1+s0).
/// The dipole moment is evaluated at phys.omega0.
inline double independent_quantum_stiffness(const Nanodiamond& nd,
                                            const NVPhotophysics& phys,
                                            const BeamConfig& beam) {
  nd.validate();
  phys.validate();
  const quantum::DriveField f = drive_field(beam);
  const double rabi =
      quantum::rabi_frequency(quantum::zpl_dipole_moment(phys), f);
  const double g = phys.gamma();
  const double delta = f.omega - nd.zpl_center;
  const double s0 = phys.eta() * rabi * rabi /
                    (phys.gamma_total() * g * (1.0 + delta * delta / (g * g)));
  return -static_cast<double>(nd.n_nv) * units::hbar * delta /
         (2.0 * phys.eta()) * (phys.gamma_total() / (2.0 * g)) *
         (4.0 / (f.w0 * f.w0)) * s0 / (1.0 + s0);
}

enum class QuantumMode { none, independent, collective };

struct StiffnessBreakdown {
  double wavelength = 0.0;
  double kappa_cl = 0.0;
  double kappa_q = 0.0;
  double kappa_tot = 0.0;
};

struct SweepOptions {
  collective::CollectiveOptions collective;
  /// Optional surrogate for collective mode; must be built for `phys`.
  const collective::StiffnessTable* table = nullptr;
  int workers = 1;
  /// Empirical chromatic baseline: both stiffness terms are scaled by
  /// 1 + chromatic_slope * (lambda - chromatic_anchor), slope in 1/m.
  double chromatic_slope = 0.0;
  double chromatic_anchor = 639.13 * units::nm;
};

inline StiffnessBreakdown stiffness_at(const Nanodiamond& nd,
                                       const NVPhotophysics& phys,
                                       const BeamConfig& beam, QuantumMode mode,
                                       double grain_width,
                                       const SweepOptions& opts = {}) {
  StiffnessBreakdown out;
  out.wavelength = beam.wavelength;
  out.kappa_cl = classical_stiffness(nd.radius, beam, phys.n_host);
  switch (mode) {
    case QuantumMode::none:
      break;
    case QuantumMode::independent:
      out.kappa_q = independent_quantum_stiffness(nd, phys, beam);
      break;
    case QuantumMode::collective:
      out.kappa_q =
          opts.table ? opts.table->ensemble_quantum_stiffness(
                           nd, drive_field(beam), grain_width)
                     : collective::ensemble_quantum_stiffness(
                           nd, phys, drive_field(beam), grain_width,
                           opts.collective, 1);
      break;
  }
  const double chroma =
      1.0 + opts.chromatic_slope * (beam.wavelength - opts.chromatic_anchor);
  out.kappa_cl *= chroma;
  out.kappa_q *= chroma;
  out.kappa_tot = out.kappa_cl + out.kappa_q;
  return out;
}

/// kappa_cl + kappa_q over a wavelength list; sweep points run concurrently.
inline std::vector<StiffnessBreakdown> total_stiffness_curve(
    const Nanodiamond& nd, const NVPhotophysics& phys,
    const BeamConfig& beam_template, const std::vector<double>& wavelengths,
    QuantumMode mode, double grain_width, const SweepOptions& opts = {}) {
  detail::require(!wavelengths.empty(), "total_stiffness_curve: empty grid");
  std::vector<StiffnessBreakdown> out(wavelengths.size());
  parallel_for(wavelengths.size(), opts.workers, [&](std::size_t i) {
    out[i] = stiffness_at(nd, phys, beam_template.at(wavelengths[i]), mode,
                          grain_width, opts);
  });
  return out;
}

/// 629-648 nm in 0.5 nm steps with lambda_ref inserted.
inline std::vector<double> default_wavelength_grid(
    double lambda_ref = 639.13 * units::nm) {
  std::vector<double> grid;
  for (int k = 0; k <= 38; ++k) grid.push_back((629.0 + 0.5 * k) * units::nm);
  if (std::find(grid.begin(), grid.end(), lambda_ref) == grid.end()) {
    grid.push_back(lambda_ref);
    std::sort(grid.begin(), grid.end());
  }
  return grid;
}

struct RatioCurve {
  std::vector<double> wavelengths;
  std::vector<double> ratios;
  double lambda_ref = 639.13 * units::nm;
};

/// kappa_tot(lambda) / kappa_tot(lambda_ref); lambda_ref must be on the grid.
inline RatioCurve ratio_curve(const std::vector<StiffnessBreakdown>& curve,
                              double lambda_ref = 639.13 * units::nm) {
  const auto ref = std::find_if(curve.begin(), curve.end(), [&](const auto& b) {
    return b.wavelength == lambda_ref;
  });
  detail::require(ref != curve.end(),
                  "ratio_curve: lambda_ref is not on the wavelength grid");
  detail::require(ref->kappa_tot != 0.0, "ratio_curve: zero reference stiffness");
  RatioCurve out;
  out.lambda_ref = lambda_ref;
  for (const auto& b : curve) {
    out.wavelengths.push_back(b.wavelength);
    out.ratios.push_back(b.kappa_tot / ref->kappa_tot);
  }
  return out;
}

/// Xi(lambda) = ratio_high(lambda) - ratio_low(lambda).
inline std::vector<std::pair<double, double>> xi_curve(const RatioCurve& high,
                                                       const RatioCurve& low) {
  detail::require(high.wavelengths == low.wavelengths &&
                      high.ratios.size() == high.wavelengths.size() &&
                      low.ratios.size() == low.wavelengths.size(),
                  "xi_curve: wavelength grids do not match");
  std::vector<std::pair<double, double>> out;
  out.reserve(high.wavelengths.size());
  for (std::size_t i = 0; i < high.wavelengths.size(); ++i) {
    out.emplace_back(high.wavelengths[i], high.ratios[i] - low.ratios[i]);
  }
  return out;
}

/// Largest |Xi| over a curve.
inline double peak_abs_xi(const std::vector<std::pair<double, double>>& xi) {
  double peak = 0.0;
  for (const auto& p : xi) peak = std::max(peak, std::abs(p.second));
  return peak;
}

}  // namespace nvtrap::trap

#endif  // NVTRAP_TRAP_MODEL_HPP
