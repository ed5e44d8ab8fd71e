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

#include <array>
#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "nvtrap/quantum_core.hpp"
#include "nvtrap/units.hpp"

namespace {

using nvtrap::quantum::BlochSteadyState;
using nvtrap::quantum::DriveField;
using nvtrap::quantum::NVPhotophysics;
using cplx = std::complex<double>;

// Evaluated once at 40 significant digits (mpmath) from
// d = sqrt(G_zpl 3 pi eps0 c^3 hbar / (n1 w0^3)).
constexpr double kGoldenDipole = 3.550561433664276941e-30;

struct Draw {
  NVPhotophysics phys;
  double omega;
  double rabi;
};

// Dimensionless draw in units of gamma = 1: Delta/gamma in [-5, 5],
// saturation in [0, 10].
Draw random_draw(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  NVPhotophysics p;
  const double g_tot = 0.05 + 1.5 * u(rng);
  const double dw = 0.02 + 0.98 * u(rng);
  p.gamma_zpl = dw * g_tot;
  p.gamma_sb = (1.0 - dw) * g_tot;
  p.gamma_ph = 0.1 + 5.0 * u(rng);
  p.gamma_c = 1.0 - 0.5 * g_tot;
  p.omega0 = 1000.0;
  p.debye_waller = dw;
  const double delta = -5.0 + 10.0 * u(rng);
  const double s = 10.0 * u(rng);
  const double g = p.gamma();
  const double rabi =
      std::sqrt(s * p.gamma_total() * g * (1.0 + delta * delta / (g * g)) /
                p.eta());
  return {p, p.omega0 + delta, rabi};
}

// Right-hand side of the three-level Bloch equations, written directly in
// terms of the complex coherence.
struct BlochState {
  double ee, gg, pp;
  cplx eg;
};

BlochState bloch_rhs(const NVPhotophysics& p, double delta, double rabi,
                     const BlochState& y) {
  const cplx i(0.0, 1.0);
  const cplx ge = std::conj(y.eg);
  BlochState d;
  const cplx drive = i * (rabi / 2.0) * (y.eg - ge);
  d.ee = drive.real() - (p.gamma_zpl + p.gamma_sb) * y.ee;
  d.gg = -drive.real() + p.gamma_zpl * y.ee + p.gamma_ph * y.pp;
  d.pp = p.gamma_sb * y.ee - p.gamma_ph * y.pp;
  d.eg = -(p.gamma() - i * delta) * y.eg + i * (rabi / 2.0) * (y.ee - y.gg);
  return d;
}

BlochState axpy(const BlochState& y, double h, const BlochState& k) {
  return {y.ee + h * k.ee, y.gg + h * k.gg, y.pp + h * k.pp, y.eg + h * k.eg};
}

BlochState integrate_rk4(const NVPhotophysics& p, double delta, double rabi) {
  BlochState y{0.0, 1.0, 0.0, 0.0};
  const double fastest =
      std::abs(delta) + rabi + p.gamma() + p.gamma_total() + p.gamma_ph;
  const double slowest = std::min({p.gamma_total(), p.gamma_ph, p.gamma()});
  const double h = 0.25 / fastest;
  const long steps = static_cast<long>(120.0 / slowest / h) + 1;
  for (long n = 0; n < steps; ++n) {
    const BlochState k1 = bloch_rhs(p, delta, rabi, y);
    const BlochState k2 = bloch_rhs(p, delta, rabi, axpy(y, h / 2, k1));
    const BlochState k3 = bloch_rhs(p, delta, rabi, axpy(y, h / 2, k2));
    const BlochState k4 = bloch_rhs(p, delta, rabi, axpy(y, h, k3));
    y.ee += h / 6 * (k1.ee + 2 * k2.ee + 2 * k3.ee + k4.ee);
    y.gg += h / 6 * (k1.gg + 2 * k2.gg + 2 * k3.gg + k4.gg);
    y.pp += h / 6 * (k1.pp + 2 * k2.pp + 2 * k3.pp + k4.pp);
    y.eg += h / 6 * (k1.eg + 2.0 * k2.eg + 2.0 * k3.eg + k4.eg);
  }
  return y;
}

DriveField default_field(const NVPhotophysics& phys, double detuning_hz,
                         double x_over_w0) {
  DriveField f;
  f.omega = phys.omega0 + nvtrap::units::angular_rate(detuning_hz);
  f.e0 = 2.555504559500075e6;
  f.w0 = 470e-9;
  f.x = x_over_w0 * f.w0;
  return f;
}

}  // namespace

TEST(ZplDipoleMoment, MatchesGoldenValue) {
  const auto phys = NVPhotophysics::defaults();
  EXPECT_NEAR(nvtrap::quantum::zpl_dipole_moment(phys) / kGoldenDipole, 1.0,
              1e-12);
}

TEST(ZplDipoleMoment, SquareRootScalingInRate) {
  auto phys = NVPhotophysics::defaults();
  const double d1 = nvtrap::quantum::zpl_dipole_moment(phys);
  phys.gamma_zpl *= 2.0;
  EXPECT_NEAR(nvtrap::quantum::zpl_dipole_moment(phys) / d1, std::sqrt(2.0),
              1e-14);
  phys.gamma_zpl = 1e-30;
  EXPECT_LT(nvtrap::quantum::zpl_dipole_moment(phys), 1e-40);
}

TEST(NVPhotophysics, DefaultsAndInvariants) {
  const auto p = NVPhotophysics::defaults();
  EXPECT_NEAR(p.gamma_zpl / p.gamma_total(), 0.04, 1e-15);
  EXPECT_NEAR(p.gamma() / nvtrap::units::angular_rate(1e12), 1.0, 1e-14);
  EXPECT_NEAR(p.gamma_ph / nvtrap::units::angular_rate(38e9), 1.0, 1e-14);
  auto bad = p;
  bad.debye_waller = 0.0;
  EXPECT_THROW(bad.validate(), nvtrap::InvalidArgument);
  bad = p;
  bad.gamma_ph = 0.0;
  EXPECT_THROW(bad.validate(), nvtrap::InvalidArgument);
}

TEST(RabiFrequency, DefinitionAndLimits) {
  DriveField f{1e15, 0.0, 0.0, 470e-9};
  EXPECT_EQ(nvtrap::quantum::rabi_frequency(1e-30, f), 0.0);
  f.e0 = 1.0;
  EXPECT_DOUBLE_EQ(nvtrap::quantum::rabi_frequency(1.0, f) *
                       nvtrap::units::hbar,
                   std::sqrt(2.0 / 3.0));
  f.x = 50.0 * f.w0;
  EXPECT_EQ(nvtrap::quantum::rabi_frequency(1.0, f), 0.0);
  f.w0 = 0.0;
  EXPECT_THROW(nvtrap::quantum::rabi_frequency(1.0, f),
               nvtrap::InvalidArgument);
}

TEST(BlochSteadyState, UndrivenIsGroundState) {
  const auto p = NVPhotophysics::defaults();
  const auto ss = nvtrap::quantum::bloch_steady_state(p, p.omega0 * 1.001, 0.0);
  EXPECT_EQ(ss.rho_gg, 1.0);
  EXPECT_EQ(ss.rho_ee, 0.0);
  EXPECT_EQ(ss.rho_pp, 0.0);
  EXPECT_EQ(std::abs(ss.coherence), 0.0);
}

TEST(BlochSteadyState, MatchesLongTimeIntegration) {
  std::mt19937_64 rng(20260001);
  for (int trial = 0; trial < 100; ++trial) {
    const Draw d = random_draw(rng);
    const auto ss = nvtrap::quantum::bloch_steady_state(d.phys, d.omega, d.rabi);
    const BlochState y =
        integrate_rk4(d.phys, d.omega - d.phys.omega0, d.rabi);
    EXPECT_NEAR(ss.rho_ee, y.ee, 1e-10) << "trial " << trial;
    EXPECT_NEAR(ss.rho_gg, y.gg, 1e-10) << "trial " << trial;
    EXPECT_NEAR(ss.rho_pp, y.pp, 1e-10) << "trial " << trial;
    EXPECT_NEAR(ss.coherence.real(), y.eg.real(), 1e-10) << "trial " << trial;
    EXPECT_NEAR(ss.coherence.imag(), y.eg.imag(), 1e-10) << "trial " << trial;
  }
}

TEST(BlochSteadyState, TraceAndBoundsOverRandomDraws) {
  std::mt19937_64 rng(20260002);
  for (int trial = 0; trial < 1000; ++trial) {
    const Draw d = random_draw(rng);
    const auto ss = nvtrap::quantum::bloch_steady_state(d.phys, d.omega, d.rabi);
    ASSERT_NEAR(ss.rho_ee + ss.rho_gg + ss.rho_pp, 1.0, 1e-12);
    ASSERT_GE(ss.rho_ee, -1e-15);
    ASSERT_LE(ss.rho_ee, 1.0);
    ASSERT_GE(ss.rho_pp, -1e-15);
    ASSERT_LE(std::abs(ss.coherence), 0.5 + 1e-12);
    ASSERT_NEAR(ss.rho_pp, ss.rho_ee * d.phys.gamma_sb / d.phys.gamma_ph,
                1e-12);
  }
}

TEST(BlochSteadyState, TwoLevelLimit) {
  std::mt19937_64 rng(20260003);
  for (int trial = 0; trial < 50; ++trial) {
    Draw d = random_draw(rng);
    d.phys.gamma_sb = 0.0;
    d.phys.gamma_c = 1.0 - 0.5 * d.phys.gamma_zpl;
    const double delta = d.omega - d.phys.omega0;
    const double g = d.phys.gamma();
    const double gt = d.phys.gamma_total();
    const double s =
        d.rabi * d.rabi / (gt * g * (1.0 + delta * delta / (g * g)));
    const auto ss = nvtrap::quantum::bloch_steady_state(d.phys, d.omega, d.rabi);
    EXPECT_EQ(ss.rho_pp, 0.0);
    EXPECT_NEAR(ss.rho_ee, 0.5 * s / (1.0 + s), 1e-13);
    const cplx expected =
        cplx(0.0, d.rabi / 2.0) * (-1.0 / (1.0 + s)) / cplx(g, -delta);
    EXPECT_NEAR(std::abs(ss.coherence - expected), 0.0, 1e-13);
  }
}

TEST(DipoleForce, VanishesOnResonanceAndAtCentre) {
  const auto p = NVPhotophysics::defaults();
  EXPECT_EQ(nvtrap::quantum::dipole_force_analytic(p, default_field(p, 0.0, 0.4)),
            0.0);
  EXPECT_EQ(
      nvtrap::quantum::dipole_force_analytic(p, default_field(p, -2e11, 0.0)),
      0.0);
}

TEST(DipoleForce, AttractiveForRedDetuning) {
  const auto p = NVPhotophysics::defaults();
  // x > 0: a restoring force points to -x.
  EXPECT_LT(
      nvtrap::quantum::dipole_force_analytic(p, default_field(p, -5e11, 0.3)),
      0.0);
  EXPECT_GT(
      nvtrap::quantum::dipole_force_analytic(p, default_field(p, 5e11, 0.3)),
      0.0);
}

TEST(DipoleForce, CoherenceFormMatchesAnalyticForm) {
  const auto p = NVPhotophysics::defaults();
  for (double det : {-3e12, -1e12, -2e11, 1e10, 4e11, 2.5e12}) {
    for (double xr : {-0.8, -0.2, 0.35, 1.1}) {
      const DriveField f = default_field(p, det, xr);
      const double a = nvtrap::quantum::dipole_force_analytic(p, f);
      const double b = nvtrap::quantum::dipole_force_from_coherence(p, f);
      EXPECT_NEAR(b / a, 1.0, 1e-10) << det << " " << xr;
    }
  }
}

TEST(DipoleForce, OddInDetuning) {
  const auto p = NVPhotophysics::defaults();
  for (double det : {1e9, 3e11, 1e12, 4e12}) {
    for (double xr : {-0.5, 0.25, 0.9}) {
      const double fp =
          nvtrap::quantum::dipole_force_analytic(p, default_field(p, det, xr));
      const double fm =
          nvtrap::quantum::dipole_force_analytic(p, default_field(p, -det, xr));
      EXPECT_NEAR(fp / -fm, 1.0, 1e-10);
    }
  }
}

TEST(DipoleForce, FastPhononDecayGivesTwoLevelForce) {
  auto p = NVPhotophysics::defaults();
  p.gamma_ph = 1e6 * p.gamma_sb;
  for (double det : {-1.5e12, -3e11, 7e11}) {
    const DriveField f = default_field(p, det, 0.4);
    // Two-level dipole force with eta = 1, from the textbook coherence.
    const double rabi = nvtrap::quantum::rabi_frequency(
        nvtrap::quantum::zpl_dipole_moment(p), f);
    const double g = p.gamma();
    const double delta = f.omega - p.omega0;
    const double s =
        rabi * rabi / (p.gamma_total() * g * (1.0 + delta * delta / (g * g)));
    const double dlog = -2.0 * f.x / (f.w0 * f.w0);
    const double re_u = 0.5 * rabi * delta / ((g * g + delta * delta) * (1 + s));
    const double two_level = -nvtrap::units::hbar * rabi * re_u * dlog;
    const double full = nvtrap::quantum::dipole_force_from_coherence(p, f);
    EXPECT_NEAR(full / two_level, 1.0, 1e-3);
  }
}

TEST(DipolePotential, SignAndResonance) {
  const auto p = NVPhotophysics::defaults();
  EXPECT_EQ(
      nvtrap::quantum::dipole_potential_analytic(p, default_field(p, 0.0, 0.0)),
      0.0);
  EXPECT_LT(
      nvtrap::quantum::dipole_potential_analytic(p, default_field(p, -4e11, 0.0)),
      0.0);
  EXPECT_GT(
      nvtrap::quantum::dipole_potential_analytic(p, default_field(p, 4e11, 0.0)),
      0.0);
}

TEST(DipolePotential, GradientReproducesForce) {
  const auto p = NVPhotophysics::defaults();
  for (double det : {-2e12, -4e11, 6e11}) {
    for (double xr : {-0.7, -0.15, 0.3, 0.85}) {
      DriveField f = default_field(p, det, xr);
      const double h = f.w0 * 1e-6;
      DriveField fp = f;
      DriveField fm = f;
      fp.x += h;
      fm.x -= h;
      const double du =
          (nvtrap::quantum::dipole_potential_analytic(p, fp) -
           nvtrap::quantum::dipole_potential_analytic(p, fm)) /
          (2.0 * h);
      const double force = nvtrap::quantum::dipole_force_analytic(p, f);
      EXPECT_NEAR(-du / force, 1.0, 1e-6) << det << " " << xr;
    }
  }
}

TEST(DipolePotential, LinearisedFormAtLowSaturation) {
  const auto p = NVPhotophysics::defaults();
  DriveField f = default_field(p, -5e11, 0.0);
  const double d = nvtrap::quantum::zpl_dipole_moment(p);
  const double s_now = nvtrap::quantum::saturation_parameter(
      p, f.omega, nvtrap::quantum::rabi_frequency(d, f));
  f.e0 *= std::sqrt(0.01 / s_now);
  const double s = nvtrap::quantum::saturation_parameter(
      p, f.omega, nvtrap::quantum::rabi_frequency(d, f));
  ASSERT_NEAR(s, 0.01, 1e-12);
  const double delta = f.omega - p.omega0;
  const double linear = (1.0 / p.eta()) * (nvtrap::units::hbar * delta / 2.0) *
                        (p.gamma_total() / (2.0 * p.gamma())) * s;
  const double full = nvtrap::quantum::dipole_potential_analytic(p, f);
  EXPECT_LT(std::abs(full - linear) / std::abs(linear), 0.01);
}
