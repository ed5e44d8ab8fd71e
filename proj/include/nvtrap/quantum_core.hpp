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

#ifndef NVTRAP_QUANTUM_CORE_HPP
#define NVTRAP_QUANTUM_CORE_HPP

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "nvtrap/error.hpp"
#include "nvtrap/units.hpp"

/// Single-emitter dipole physics of an NV centre: ZPL dipole moment, the
/// ground / excited / phonon-sideband Bloch steady state and the analytic
/// dipole force and potential of independent emitters.
namespace nvtrap::quantum {

/// Emitter constants. All rates are angular (rad/s).
struct NVPhotophysics {
  double gamma_zpl = 0.0;     ///< ZPL spontaneous emission rate
  double gamma_sb = 0.0;      ///< summed phonon-sideband emission rate
  double gamma_ph = 0.0;      ///< sideband -> ground phonon decay
  double gamma_c = 0.0;       ///< extra (inhomogeneous) coherence decay
  double omega0 = 0.0;        ///< ZPL transition angular frequency
  double debye_waller = 0.04; ///< fraction of emission into the ZPL
  double n_host = 2.4;        ///< diamond refractive index

  /// Total spontaneous rate Gamma = Gamma_ZPL + Gamma_SB.
  double gamma_total() const { return gamma_zpl + gamma_sb; }

  /// Transverse (coherence) decay rate gamma = Gamma/2 + gamma_c.
  double gamma() const { return 0.5 * gamma_total() + gamma_c; }

  /// Sideband bottleneck factor eta = (2 Gamma_Ph + Gamma_SB) / (2 Gamma_Ph).
  double eta() const { return (2.0 * gamma_ph + gamma_sb) / (2.0 * gamma_ph); }

  void validate() const {
    detail::require(gamma_zpl > 0.0, "NVPhotophysics: gamma_zpl must be > 0");
    detail::require(gamma_sb >= 0.0, "NVPhotophysics: gamma_sb must be >= 0");
    detail::require(gamma_ph > 0.0, "NVPhotophysics: gamma_ph must be > 0");
    detail::require(gamma_c >= 0.0, "NVPhotophysics: gamma_c must be >= 0");
    detail::require(omega0 > 0.0, "NVPhotophysics: omega0 must be > 0");
    detail::require(n_host > 0.0, "NVPhotophysics: n_host must be > 0");
    detail::require(debye_waller > 0.0 && debye_waller <= 1.0,
                    "NVPhotophysics: debye_waller must lie in (0, 1]");
  }

  /// Builds the constants from a total in-diamond decay rate split by the
  /// Debye-Waller factor, and a total transverse rate `gamma_transverse`
  /// (gamma_c is whatever remains after Gamma/2).
  static NVPhotophysics from_total_rate(double gamma_total, double debye_waller,
                                        double gamma_ph,
                                        double gamma_transverse,
                                        double omega0, double n_host) {
    NVPhotophysics p;
    p.gamma_zpl = debye_waller * gamma_total;
    p.gamma_sb = (1.0 - debye_waller) * gamma_total;
    p.gamma_ph = gamma_ph;
    p.gamma_c = gamma_transverse - 0.5 * gamma_total;
    p.omega0 = omega0;
    p.debye_waller = debye_waller;
    p.n_host = n_host;
    p.validate();
    return p;
  }

  /// Room-temperature NV defaults: Gamma/2pi = 13 MHz, Debye-Waller 0.04,
  /// Gamma_Ph/2pi = 38 GHz, gamma/2pi = 1 THz, ZPL at 639.08 nm, n = 2.4.
  static NVPhotophysics defaults() {
    using namespace units;
    return from_total_rate(angular_rate(13.0 * MHz), 0.04,
                           angular_rate(38.0 * GHz), angular_rate(1.0 * THz),
                           angular_from_wavelength(639.08 * nm), 2.4);
  }
};

/// Trapping-laser drive evaluated at one point of the Gaussian profile
/// E(x) = E0 exp(-x^2 / w0^2).
struct DriveField {
  double omega = 0.0;  ///< laser angular frequency
  double e0 = 0.0;     ///< peak field amplitude, V/m
  double x = 0.0;      ///< position along the measurement axis, m
  double w0 = 0.0;     ///< waist, m

  void validate() const {
    detail::require(e0 >= 0.0, "DriveField: e0 must be >= 0");
    detail::require(w0 > 0.0, "DriveField: w0 must be > 0");
    detail::require(omega > 0.0, "DriveField: omega must be > 0");
  }

  double profile() const { return std::exp(-(x * x) / (w0 * w0)); }
};

struct BlochSteadyState {
  double rho_ee = 0.0;
  double rho_gg = 1.0;
  double rho_pp = 0.0;
  std::complex<double> coherence{0.0, 0.0};  ///< rotating-frame rho_eg
};

/// ZPL transition dipole moment (C m) from the ZPL emission rate inside
/// a host of index n_host.
inline double zpl_dipole_moment(const NVPhotophysics& phys) {
  using namespace units;
  phys.validate();
  const double w3 = phys.omega0 * phys.omega0 * phys.omega0;
  return std::sqrt(phys.gamma_zpl * 3.0 * pi * eps0 * c * c * c * hbar /
                   (phys.n_host * w3));
}

/// Orientation- and time-averaged Rabi frequency sqrt(2/3) d E(x) / hbar.
inline double rabi_frequency(double d_zpl, const DriveField& field) {
  field.validate();
  return std::sqrt(2.0 / 3.0) * d_zpl * field.e0 * field.profile() /
         units::hbar;
}

inline double detuning(const NVPhotophysics& phys, double omega) {
  return omega - phys.omega0;
}

/// s = eta Omega^2 / (Gamma gamma (1 + Delta^2/gamma^2)).
inline double saturation_parameter(const NVPhotophysics& phys, double omega,
                                   double rabi) {
  const double g = phys.gamma();
  const double delta = detuning(phys, omega);
  return phys.eta() * rabi * rabi /
         (phys.gamma_total() * g * (1.0 + delta * delta / (g * g)));
}

/// Fixed point of the three-level optical Bloch equations. Solved as a
/// 5x5 linear system in (rho_ee, rho_gg, rho_pp, Re rho_eg, Im rho_eg)
/// with the trace condition replacing the redundant ground-state equation.
inline BlochSteadyState bloch_steady_state(const NVPhotophysics& phys,
                                           double omega, double rabi) {
  phys.validate();
  detail::require(rabi >= 0.0, "bloch_steady_state: rabi must be >= 0");

  // Work in units of gamma so that every coefficient is O(1).
  const double scale = phys.gamma();
  const double g_tot = phys.gamma_total() / scale;
  const double g_sb = phys.gamma_sb / scale;
  const double g_ph = phys.gamma_ph / scale;
  const double g = 1.0;
  const double delta = detuning(phys, omega) / scale;
  const double om = rabi / scale;

  Eigen::Matrix<double, 5, 5> m = Eigen::Matrix<double, 5, 5>::Zero();
  Eigen::Matrix<double, 5, 1> rhs = Eigen::Matrix<double, 5, 1>::Zero();
  // d rho_ee / dt = -Omega Im(rho_eg) - Gamma rho_ee
  m(0, 0) = -g_tot;
  m(0, 4) = -om;
  // d rho_pp / dt = Gamma_SB rho_ee - Gamma_Ph rho_pp
  m(1, 0) = g_sb;
  m(1, 2) = -g_ph;
  // Re: -gamma a - Delta b
  m(2, 3) = -g;
  m(2, 4) = -delta;
  // Im: Delta a - gamma b + Omega/2 (rho_ee - rho_gg)
  m(3, 3) = delta;
  m(3, 4) = -g;
  m(3, 0) = 0.5 * om;
  m(3, 1) = -0.5 * om;
  // trace
  m.row(4).head<3>().setOnes();
  rhs(4) = 1.0;

  for (int r = 0; r < 5; ++r) {
    const double norm = m.row(r).cwiseAbs().maxCoeff();
    m.row(r) /= norm;
    rhs(r) /= norm;
  }
  const Eigen::FullPivLU<Eigen::Matrix<double, 5, 5>> lu(m);
  if (!lu.isInvertible()) {
    throw NumericalError("bloch_steady_state: singular Bloch system");
  }
  const Eigen::Matrix<double, 5, 1> x = lu.solve(rhs);

  BlochSteadyState out;
  out.rho_ee = x(0);
  out.rho_gg = x(1);
  out.rho_pp = x(2);
  out.coherence = {x(3), x(4)};
  return out;
}

/// Analytic dipole force (N) along x,
/// F = -(1/eta) (hbar Delta / 2) (Gamma / 2 gamma) grad(s) / (1 + s).
/// Attractive towards the beam centre for red detuning.
inline double dipole_force_analytic(const NVPhotophysics& phys,
                                    const DriveField& field) {
  phys.validate();
  const double rabi = rabi_frequency(zpl_dipole_moment(phys), field);
  const double s = saturation_parameter(phys, field.omega, rabi);
  const double grad_s = s * (-4.0 * field.x / (field.w0 * field.w0));
  const double delta = detuning(phys, field.omega);
  return -(1.0 / phys.eta()) * (units::hbar * delta / 2.0) *
         (phys.gamma_total() / (2.0 * phys.gamma())) * grad_s / (1.0 + s);
}

/// The same force from the steady-state coherence,
/// F = -hbar Re(Omega* <sigma>) grad log|Omega|.
inline double dipole_force_from_coherence(const NVPhotophysics& phys,
                                          const DriveField& field) {
  const double rabi = rabi_frequency(zpl_dipole_moment(phys), field);
  const BlochSteadyState ss = bloch_steady_state(phys, field.omega, rabi);
  const double grad_log_rabi = -2.0 * field.x / (field.w0 * field.w0);
  return -units::hbar * (rabi * ss.coherence.real()) * grad_log_rabi;
}

/// Optical potential (J),
/// U = (1/eta) (hbar Delta / 2) (Gamma / 2 gamma) log(1 + s).
/// Negative (trapping) for red detuning; -dU/dx equals the analytic force.
inline double dipole_potential_analytic(const NVPhotophysics& phys,
                                        const DriveField& field) {
  phys.validate();
  const double rabi = rabi_frequency(zpl_dipole_moment(phys), field);
  const double s = saturation_parameter(phys, field.omega, rabi);
  const double delta = detuning(phys, field.omega);
  return (1.0 / phys.eta()) * (units::hbar * delta / 2.0) *
         (phys.gamma_total() / (2.0 * phys.gamma())) * std::log1p(s);
}

}  // namespace nvtrap::quantum

#endif  // NVTRAP_QUANTUM_CORE_HPP
