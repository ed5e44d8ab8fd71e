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

#ifndef NVTRAP_BROWNIAN_SIM_HPP
#define NVTRAP_BROWNIAN_SIM_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nvtrap/error.hpp"
#include "nvtrap/rng.hpp"
#include "nvtrap/units.hpp"

/// Overdamped Langevin motion of a trapped particle, recorded as a
/// five-segment position trace.
namespace nvtrap::brownian {

struct FluidEnvironment {
  double temperature = 295.0;  ///< K
  double viscosity = 8.9e-4;   ///< Pa s

  void validate() const {
    detail::require(temperature > 0.0, "FluidEnvironment: temperature must be > 0");
    detail::require(viscosity > 0.0, "FluidEnvironment: viscosity must be > 0");
  }
};

/// Stokes drag 6 pi eta R.
inline double drag_coefficient(double radius, const FluidEnvironment& env) {
  env.validate();
  detail::require(radius > 0.0, "drag_coefficient: radius must be > 0");
  return 6.0 * units::pi * env.viscosity * radius;
}

/// How a stiffness kappa maps to the linear restoring force -k x.
/// hooke: k = kappa, so kappa = 2 pi beta f_c. quadratic: U = kappa x^2,
/// k = 2 kappa.
enum class StiffnessConvention { hooke, quadratic };

inline double restoring_constant(double kappa, StiffnessConvention conv) {
  return conv == StiffnessConvention::hooke ? kappa : 2.0 * kappa;
}

/// f_c = k / (2 pi beta).
inline double corner_frequency_truth(
    double kappa, double beta,
    StiffnessConvention conv = StiffnessConvention::hooke) {
  detail::require(beta > 0.0, "corner_frequency_truth: beta must be > 0");
  detail::require(kappa >= 0.0, "corner_frequency_truth: kappa must be >= 0");
  return restoring_constant(kappa, conv) / (units::two_pi * beta);
}

inline double kappa_for_corner_frequency(
    double f_c, double beta,
    StiffnessConvention conv = StiffnessConvention::hooke) {
  const double k = units::two_pi * beta * f_c;
  return conv == StiffnessConvention::hooke ? k : 0.5 * k;
}

/// Equipartition spread sqrt(kB T / k).
inline double positional_spread(
    double kappa, double temperature,
    StiffnessConvention conv = StiffnessConvention::hooke) {
  detail::require(kappa > 0.0, "positional_spread: kappa must be > 0");
  return std::sqrt(units::k_boltzmann * temperature /
                   restoring_constant(kappa, conv));
}

enum class Integrator { euler_maruyama, exact_ou };

inline constexpr std::array<std::string_view, 5> kSegmentLabels{
    "660_start", "660_blue", "660_ref", "660_red", "660_end"};

struct Segment {
  std::string label;
  std::size_t begin = 0;  ///< first sample index
  std::size_t end = 0;    ///< one past the last sample
};

struct SegmentedAcquisition {
  double dt = 1e-5;
  std::vector<Segment> segments;
  std::vector<double> samples;  ///< position, m

  std::span<const double> segment_samples(std::size_t i) const {
    const Segment& s = segments.at(i);
    return std::span<const double>(samples).subspan(s.begin, s.end - s.begin);
  }
  double duration() const { return dt * static_cast<double>(samples.size()); }
};

struct SimulationConfig {
  double dt = 1e-5;
  double segment_duration = 10.0;
  StiffnessConvention convention = StiffnessConvention::hooke;
  Integrator integrator = Integrator::euler_maruyama;
  double measurement_noise = 0.0;  ///< rms white readout noise, m
  /// Anomalous event: from step_time on, every stiffness is multiplied by
  /// step_factor. Negative step_time disables it.
  double step_time = -1.0;
  double step_factor = 1.0;
  double stability_fraction = 0.1;  ///< dt <= fraction * beta / k
};

/// Largest Euler-Maruyama step accepted for restoring constant k.
inline double max_stable_dt(double kappa, double beta,
                            const SimulationConfig& cfg) {
  return cfg.stability_fraction * beta /
         restoring_constant(kappa, cfg.convention);
}

/// Overdamped Langevin dynamics beta dx = -k x dt + sqrt(2 kB T beta) dW
/// over five segments of stiffness kappa_per_segment. The start point is
/// drawn from the stationary distribution of the first segment.
inline SegmentedAcquisition simulate_trace(
    const std::array<double, 5>& kappa_per_segment, double radius,
    const FluidEnvironment& env, const SimulationConfig& cfg,
    std::uint64_t seed) {
  env.validate();
  detail::require(cfg.dt > 0.0, "simulate_trace: dt must be > 0");
  detail::require(cfg.segment_duration > 0.0,
                  "simulate_trace: segment_duration must be > 0");
  detail::require(cfg.measurement_noise >= 0.0,
                  "simulate_trace: measurement_noise must be >= 0");
  detail::require(cfg.step_factor > 0.0, "simulate_trace: step_factor must be > 0");
  const double beta = drag_coefficient(radius, env);
  for (double k : kappa_per_segment) {
    detail::require(k > 0.0 && std::isfinite(k),
                    "simulate_trace: stiffness must be > 0");
    const double kmax = cfg.step_time >= 0.0 ? k * std::max(1.0, cfg.step_factor) : k;
    if (cfg.integrator == Integrator::euler_maruyama) {
      detail::require(cfg.dt <= max_stable_dt(kmax, beta, cfg),
                      "simulate_trace: dt above the stability bound " +
                          std::to_string(max_stable_dt(kmax, beta, cfg)) + " s");
    }
  }
  const auto per_segment =
      static_cast<std::size_t>(std::llround(cfg.segment_duration / cfg.dt));
  detail::require(per_segment >= 2, "simulate_trace: segment shorter than 2 dt");
  detail::require(
      std::abs(per_segment * cfg.dt - cfg.segment_duration) <= 1e-9 * cfg.segment_duration,
      "simulate_trace: segment_duration is not a multiple of dt");

  SegmentedAcquisition acq;
  acq.dt = cfg.dt;
  acq.samples.resize(5 * per_segment);
  for (std::size_t s = 0; s < 5; ++s) {
    acq.segments.push_back(
        {std::string(kSegmentLabels[s]), s * per_segment, (s + 1) * per_segment});
  }

  std::mt19937_64 rng = make_rng(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double kt = units::k_boltzmann * env.temperature;
  const std::size_t step_index =
      cfg.step_time >= 0.0
          ? static_cast<std::size_t>(std::llround(cfg.step_time / cfg.dt))
          : acq.samples.size();

  double x = std::sqrt(kt / restoring_constant(kappa_per_segment[0], cfg.convention)) *
             normal(rng);
  for (std::size_t s = 0; s < 5; ++s) {
    // Coefficients for the two stiffness values a segment can take.
    struct Step {
      double decay, noise;
    };
    auto coefficients = [&](double kappa) {
      const double k = restoring_constant(kappa, cfg.convention);
      if (cfg.integrator == Integrator::exact_ou) {
        const double a = std::exp(-k * cfg.dt / beta);
        return Step{a, std::sqrt(kt / k * (1.0 - a * a))};
      }
      return Step{1.0 - k * cfg.dt / beta, std::sqrt(2.0 * kt * cfg.dt / beta)};
    };
    const Step before = coefficients(kappa_per_segment[s]);
    const Step after = coefficients(kappa_per_segment[s] * cfg.step_factor);
    for (std::size_t i = acq.segments[s].begin; i < acq.segments[s].end; ++i) {
      acq.samples[i] = x;
      const Step& c = i >= step_index ? after : before;
      x = c.decay * x + c.noise * normal(rng);
    }
  }
  if (cfg.measurement_noise > 0.0) {
    std::mt19937_64 noise_rng = make_rng(seed, 1);
    for (double& v : acq.samples) v += cfg.measurement_noise * normal(noise_rng);
  }
  return acq;
}

}  // namespace nvtrap::brownian

#endif  // NVTRAP_BROWNIAN_SIM_HPP
