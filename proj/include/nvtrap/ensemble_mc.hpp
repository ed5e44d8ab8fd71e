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

#ifndef NVTRAP_ENSEMBLE_MC_HPP
#define NVTRAP_ENSEMBLE_MC_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nvtrap/collective_spin.hpp"
#include "nvtrap/error.hpp"
#include "nvtrap/parallel.hpp"
#include "nvtrap/rng.hpp"
#include "nvtrap/stiffness_table.hpp"
#include "nvtrap/trace_analysis.hpp"
#include "nvtrap/trap_model.hpp"
#include "nvtrap/units.hpp"

/// Monte Carlo over crystal-to-crystal variability of size, NV count and
/// ZPL statistics.
namespace nvtrap::mc {

using collective::Nanodiamond;
using quantum::NVPhotophysics;
using trap::BeamConfig;

enum class NvLaw {
  mean_normalised,  ///< N = anchor * D^3 / E[D^3], so <N> = anchor
  anchored,         ///< N = anchor * (D / anchor_diameter)^3
  per_volume,       ///< N = anchor * (D / 100 nm)^3, anchor per (100 nm)^3
};

struct PopulationModel {
  double size_mean = 150.0 * units::nm;  ///< diameter
  double size_sd = 23.0 * units::nm;
  double size_min = 20.0 * units::nm;    ///< lower truncation
  NvLaw nv_law = NvLaw::mean_normalised;
  double nv_anchor = 9500.0;
  double nv_anchor_diameter = 150.0 * units::nm;
  std::array<double, 2> zpl_weights{0.4, 0.6};
  std::array<double, 2> zpl_means{638.345 * units::nm, 639.570 * units::nm};
  std::array<double, 2> zpl_sds{0.25 * units::nm, 0.25 * units::nm};
  double sigma_mean = 1.82 * units::nm;
  double sigma_sd = 0.55 * units::nm;
  double sigma_min = 0.2 * units::nm;

  static PopulationModel high_nv() { return {}; }

  static PopulationModel low_nv() {
    PopulationModel m;
    m.size_mean = 168.0 * units::nm;
    m.size_sd = 31.0 * units::nm;
    m.nv_anchor = 1.0;
    m.nv_anchor_diameter = m.size_mean;
    return m;
  }

  void validate() const {
    detail::require(size_mean > 0.0 && size_sd >= 0.0 && size_min > 0.0 &&
                        size_min <= size_mean,
                    "PopulationModel: invalid size distribution");
    detail::require(nv_anchor >= 1.0 && nv_anchor_diameter > 0.0,
                    "PopulationModel: invalid NV anchor");
    detail::require(zpl_weights[0] >= 0.0 && zpl_weights[1] >= 0.0 &&
                        zpl_weights[0] + zpl_weights[1] > 0.0,
                    "PopulationModel: invalid ZPL mixture weights");
    for (int c = 0; c < 2; ++c) {
      detail::require(zpl_means[c] > 0.0 && zpl_sds[c] >= 0.0,
                      "PopulationModel: invalid ZPL mixture component");
    }
    detail::require(sigma_mean > 0.0 && sigma_sd >= 0.0 && sigma_min > 0.0 &&
                        sigma_min <= sigma_mean,
                    "PopulationModel: invalid ZPL width distribution");
  }

  /// Mixture mean of the ZPL centre.
  double zpl_center_mean() const {
    const double w = zpl_weights[0] + zpl_weights[1];
    return (zpl_weights[0] * zpl_means[0] + zpl_weights[1] * zpl_means[1]) / w;
  }
};

/// E[D^3] of the truncated size distribution by adaptive quadrature.
inline double mean_cubed_diameter(const PopulationModel& m) {
  m.validate();
  if (m.size_sd == 0.0) return m.size_mean * m.size_mean * m.size_mean;
  const double s = m.size_sd;
  auto pdf = [&](double d) {
    const double z = (d - m.size_mean) / s;
    return std::exp(-0.5 * z * z);
  };
  const double hi = m.size_mean + 12.0 * s;
  using boost::math::quadrature::gauss_kronrod;
  const double norm = gauss_kronrod<double, 61>::integrate(pdf, m.size_min, hi, 15, 1e-13);
  const double cube = gauss_kronrod<double, 61>::integrate(
      [&](double d) { return d * d * d * pdf(d); }, m.size_min, hi, 15, 1e-13);
  return cube / norm;
}

/// NV count for diameter d under the model's law.
inline long nv_count(const PopulationModel& m, double diameter,
                     double mean_d3 = 0.0) {
  double n = 0.0;
  const double d3 = diameter * diameter * diameter;
  switch (m.nv_law) {
    case NvLaw::mean_normalised:
      n = m.nv_anchor * d3 / (mean_d3 > 0.0 ? mean_d3 : mean_cubed_diameter(m));
      break;
    case NvLaw::anchored:
      n = m.nv_anchor * d3 / std::pow(m.nv_anchor_diameter, 3);
      break;
    case NvLaw::per_volume:
      n = m.nv_anchor * d3 / std::pow(100.0 * units::nm, 3);
      break;
  }
  return std::max<long>(1, std::lround(n));
}

namespace internal {

inline double truncated_normal(std::mt19937_64& rng, double mean, double sd,
                               double lower) {
  if (sd == 0.0) return std::max(mean, lower);
  std::normal_distribution<double> normal(mean, sd);
  for (int i = 0; i < 1000; ++i) {
    const double v = normal(rng);
    if (v >= lower) return v;
  }
  throw NumericalError("truncated_normal: truncation rejects almost all mass");
}

}  // namespace internal

/// Draws one crystal. `mean_d3` caches E[D^3]; pass 0 to compute it.
inline Nanodiamond sample_nanodiamond(const PopulationModel& m,
                                      std::mt19937_64& rng, double mean_d3 = 0.0) {
  const double d = internal::truncated_normal(rng, m.size_mean, m.size_sd, m.size_min);
  std::uniform_real_distribution<double> u(0.0, m.zpl_weights[0] + m.zpl_weights[1]);
  const int c = u(rng) < m.zpl_weights[0] ? 0 : 1;
  const double centre =
      m.zpl_sds[c] == 0.0
          ? m.zpl_means[c]
          : std::normal_distribution<double>(m.zpl_means[c], m.zpl_sds[c])(rng);
  const double width = internal::truncated_normal(rng, m.sigma_mean, m.sigma_sd, m.sigma_min);
  Nanodiamond nd;
  nd.radius = 0.5 * d;
  nd.n_nv = nv_count(m, d, mean_d3);
  nd.zpl_center = units::angular_from_wavelength(centre);
  nd.zpl_sigma = units::angular_width_from_wavelength(width, centre);
  return nd;
}

inline Nanodiamond sample_nanodiamond(const PopulationModel& m, std::uint64_t seed) {
  m.validate();
  std::mt19937_64 rng = make_rng(seed, 0);
  return sample_nanodiamond(m, rng);
}

/// The crystal at the centre of every distribution.
inline Nanodiamond mean_nanodiamond(const PopulationModel& m) {
  m.validate();
  const double centre = m.zpl_center_mean();
  Nanodiamond nd;
  nd.radius = 0.5 * m.size_mean;
  nd.n_nv = m.nv_law == NvLaw::mean_normalised
                ? std::max<long>(1, std::lround(m.nv_anchor))
                : nv_count(m, m.size_mean);
  nd.zpl_center = units::angular_from_wavelength(centre);
  nd.zpl_sigma = units::angular_width_from_wavelength(m.sigma_mean, centre);
  return nd;
}

/// Type-7 (linear interpolation) quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  detail::require(!sorted.empty(), "quantile_sorted: empty sample");
  detail::require(p >= 0.0 && p <= 1.0, "quantile_sorted: p must lie in [0, 1]");
  const double h = (sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

/// Table spec covering the Rabi frequencies of a wavelength sweep.
inline collective::TableSpec table_spec_for(const NVPhotophysics& phys,
                                            const BeamConfig& beam,
                                            const std::vector<double>& wavelengths,
                                            double delta_max = units::angular_rate(40.0 * units::THz)) {
  detail::require(!wavelengths.empty(), "table_spec_for: empty wavelength grid");
  collective::TableSpec spec;
  spec.delta_max = delta_max;
  spec.rabi_min = std::numeric_limits<double>::infinity();
  spec.rabi_max = 0.0;
  const double d = quantum::zpl_dipole_moment(phys);
  for (double l : wavelengths) {
    const double r = quantum::rabi_frequency(d, trap::drive_field(beam.at(l)));
    spec.rabi_min = std::min(spec.rabi_min, r);
    spec.rabi_max = std::max(spec.rabi_max, r);
  }
  return spec;
}

struct MCConfig {
  std::vector<double> wavelengths = trap::default_wavelength_grid();
  double lambda_ref = 639.13 * units::nm;
  double grain_width = units::angular_rate(100.0 * units::GHz);
  trap::QuantumMode mode = trap::QuantumMode::collective;
  int n_trials = 1000;
  std::uint64_t seed = 1;
  int workers = 1;
  double max_failure_rate = 0.01;
  /// Surrogate for collective solves; required for collective mode.
  const collective::StiffnessTable* table = nullptr;
  trap::SweepOptions sweep;
  /// Symmetric Gaussian noise added to each sample, e.g. for controls.
  double sample_noise_sd = 0.0;
};

struct MCResult {
  std::vector<double> wavelengths;
  std::vector<double> mean, lo90, hi90, skewness;
  /// samples[t][i]: Xi of trial t at wavelength i (failed trials removed).
  std::vector<std::vector<double>> samples;
  int n_trials = 0;
  int n_failed = 0;
  std::uint64_t seed = 0;
  double grain_width = 0.0;
};

/// Ratio of kappa_tot over the grid for one crystal.
inline std::vector<double> ratio_for(const Nanodiamond& nd, const NVPhotophysics& phys,
                                     const BeamConfig& beam, const MCConfig& cfg) {
  trap::SweepOptions so = cfg.sweep;
  so.table = cfg.table;
  so.workers = 1;
  return trap::ratio_curve(trap::total_stiffness_curve(nd, phys, beam, cfg.wavelengths,
                                                       cfg.mode, cfg.grain_width, so),
                           cfg.lambda_ref)
      .ratios;
}

/// Classical-only ratio, the low-NV baseline; independent of the radius.
inline std::vector<double> baseline_ratio(const NVPhotophysics& phys,
                                          const BeamConfig& beam, const MCConfig& cfg) {
  Nanodiamond ref{84.0 * units::nm, 1, phys.omega0, 0.0};
  MCConfig c = cfg;
  c.mode = trap::QuantumMode::none;
  return ratio_for(ref, phys, beam, c);
}

/// Aggregates per-trial Xi curves; empty entries are failed trials. More
/// than cfg.max_failure_rate failures abort with NumericalError.
inline MCResult summarize_trials(std::vector<std::optional<std::vector<double>>> trials,
                                 const MCConfig& cfg) {
  MCResult out;
  out.wavelengths = cfg.wavelengths;
  out.n_trials = static_cast<int>(trials.size());
  out.seed = cfg.seed;
  out.grain_width = cfg.grain_width;
  const std::size_t nl = cfg.wavelengths.size();
  for (auto& t : trials) {
    if (!t) {
      ++out.n_failed;
    } else {
      detail::require(t->size() == nl, "summarize_trials: curve length mismatch");
      out.samples.push_back(std::move(*t));
    }
  }
  if (out.n_failed > cfg.max_failure_rate * out.n_trials || out.samples.empty()) {
    throw NumericalError("run_mc: " + std::to_string(out.n_failed) + " of " +
                         std::to_string(out.n_trials) + " trials failed");
  }
  std::vector<double> column(out.samples.size());
  for (std::size_t i = 0; i < nl; ++i) {
    for (std::size_t t = 0; t < out.samples.size(); ++t) column[t] = out.samples[t][i];
    const auto stats = analysis::distribution_stats(column);
    std::sort(column.begin(), column.end());
    out.mean.push_back(stats.mean);
    out.skewness.push_back(stats.skewness);
    out.lo90.push_back(quantile_sorted(column, 0.05));
    out.hi90.push_back(quantile_sorted(column, 0.95));
  }
  return out;
}

/// Xi(lambda) samples over n_trials crystals and their summary.
inline MCResult run_mc(const PopulationModel& model, const NVPhotophysics& phys,
                       const BeamConfig& beam, const MCConfig& cfg) {
  model.validate();
  phys.validate();
  detail::require(cfg.n_trials >= 100, "run_mc: n_trials must be >= 100");
  detail::require(cfg.grain_width > 0.0, "run_mc: grain_width must be > 0");
  detail::require(cfg.sample_noise_sd >= 0.0, "run_mc: sample_noise_sd must be >= 0");
  detail::require(cfg.mode != trap::QuantumMode::collective || cfg.table != nullptr,
                  "run_mc: collective mode needs a stiffness table");
  const std::vector<double> base = baseline_ratio(phys, beam, cfg);
  const double mean_d3 = mean_cubed_diameter(model);
  const std::size_t nl = cfg.wavelengths.size();

  std::vector<std::optional<std::vector<double>>> trial(
      static_cast<std::size_t>(cfg.n_trials));
  parallel_for(trial.size(), cfg.workers, [&](std::size_t t) {
    std::mt19937_64 rng = make_rng(cfg.seed, t);
    try {
      const Nanodiamond nd = sample_nanodiamond(model, rng, mean_d3);
      std::vector<double> r = ratio_for(nd, phys, beam, cfg);
      std::normal_distribution<double> noise(0.0, 1.0);
      for (std::size_t i = 0; i < nl; ++i) {
        r[i] -= base[i];
        if (cfg.sample_noise_sd > 0.0) r[i] += cfg.sample_noise_sd * noise(rng);
        if (!std::isfinite(r[i])) throw NumericalError("run_mc: non-finite Xi");
      }
      trial[t] = std::move(r);
    } catch (const NumericalError&) {
      trial[t].reset();
    }
  });
  return summarize_trials(std::move(trial), cfg);
}

/// Xi of the mean crystal, no sampling.
inline std::vector<double> mean_xi_curve(const PopulationModel& model,
                                         const NVPhotophysics& phys,
                                         const BeamConfig& beam, const MCConfig& cfg) {
  const std::vector<double> base = baseline_ratio(phys, beam, cfg);
  std::vector<double> r = ratio_for(mean_nanodiamond(model), phys, beam, cfg);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= base[i];
  return r;
}

struct GrainFit {
  double best_width = 0.0;
  std::vector<std::pair<double, double>> objective;  ///< (width, SSE)
};

/// Least-squares scan of the grain width against a target Xi curve sampled
/// on cfg.wavelengths, using the mean crystal of `model`.
inline GrainFit fit_grain_width(const std::vector<double>& target,
                                const std::vector<double>& candidates,
                                const PopulationModel& model,
                                const NVPhotophysics& phys, const BeamConfig& beam,
                                const MCConfig& cfg) {
  detail::require(!candidates.empty(), "fit_grain_width: no candidate widths");
  detail::require(target.size() == cfg.wavelengths.size(),
                  "fit_grain_width: target does not match the wavelength grid");
  GrainFit out;
  out.objective.resize(candidates.size());
  parallel_for(candidates.size(), cfg.workers, [&](std::size_t c) {
    detail::require(candidates[c] > 0.0, "fit_grain_width: widths must be > 0");
    MCConfig local = cfg;
    local.grain_width = candidates[c];
    local.workers = 1;
    const std::vector<double> xi = mean_xi_curve(model, phys, beam, local);
    double sse = 0.0;
    for (std::size_t i = 0; i < xi.size(); ++i) sse += (xi[i] - target[i]) * (xi[i] - target[i]);
    out.objective[c] = {candidates[c], sse};
  });
  std::size_t best = 0;
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    if (out.objective[c].second < out.objective[best].second) best = c;
  }
  out.best_width = out.objective[best].first;
  return out;
}

}  // namespace nvtrap::mc

#endif  // NVTRAP_ENSEMBLE_MC_HPP
