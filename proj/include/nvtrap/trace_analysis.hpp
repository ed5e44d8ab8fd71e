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

#ifndef NVTRAP_TRACE_ANALYSIS_HPP
#define NVTRAP_TRACE_ANALYSIS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "nvtrap/brownian_sim.hpp"
#include "nvtrap/error.hpp"
#include "nvtrap/units.hpp"

/// Corner-frequency measurement: PSD estimation, Lorentzian fits, segment
/// ratios, outlier screening and distribution statistics.
namespace nvtrap::analysis {

using brownian::SegmentedAcquisition;

struct WelchOptions {
  std::size_t segment_length = std::size_t{1} << 14;
  double overlap = 0.5;

  void validate() const {
    detail::require(segment_length >= 16 && (segment_length & (segment_length - 1)) == 0,
                    "WelchOptions: segment_length must be a power of two >= 16");
    detail::require(overlap >= 0.0 && overlap < 1.0,
                    "WelchOptions: overlap must lie in [0, 1)");
  }
};

struct PowerSpectrum {
  std::vector<double> frequency;  ///< Hz, 0 .. Nyquist
  std::vector<double> power;      ///< one-sided, units^2 / Hz
  double df = 0.0;
  std::size_t segments = 0;
};

/// One-sided Welch periodogram with a periodic Hann window. The global mean
/// is removed first. Sum(power) * df estimates the variance.
inline PowerSpectrum power_spectrum(std::span<const double> samples, double dt,
                                    const WelchOptions& opts = {}) {
  opts.validate();
  detail::require(dt > 0.0, "power_spectrum: dt must be > 0");
  const std::size_t len = opts.segment_length;
  detail::require(samples.size() >= len,
                  "power_spectrum: need at least " + std::to_string(len) + " samples");
  const std::size_t step = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(len * (1.0 - opts.overlap))));
  const std::size_t nseg = (samples.size() - len) / step + 1;

  const double mean =
      std::accumulate(samples.begin(), samples.end(), 0.0) / samples.size();
  std::vector<double> window(len);
  double wsum2 = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    window[i] = 0.5 * (1.0 - std::cos(units::two_pi * i / len));
    wsum2 += window[i] * window[i];
  }

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buf(len);
  std::vector<std::complex<double>> spec;
  const std::size_t nbins = len / 2 + 1;
  PowerSpectrum out;
  out.power.assign(nbins, 0.0);
  for (std::size_t s = 0; s < nseg; ++s) {
    const double* x = samples.data() + s * step;
    for (std::size_t i = 0; i < len; ++i) buf[i] = (x[i] - mean) * window[i];
    fft.fwd(spec, buf);
    for (std::size_t k = 0; k < nbins; ++k) out.power[k] += std::norm(spec[k]);
  }
  const double fs = 1.0 / dt;
  const double scale = 1.0 / (fs * wsum2 * nseg);
  out.df = fs / len;
  out.frequency.resize(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    const double one_sided = (k == 0 || k == nbins - 1) ? 1.0 : 2.0;
    out.power[k] *= one_sided * scale;
    out.frequency[k] = k * out.df;
  }
  out.segments = nseg;
  return out;
}

struct FitWindow {
  std::size_t skip_low_bins = 3;
  double max_fraction_of_nyquist = 0.25;
  int max_iterations = 200;
};

struct PSDFit {
  double f_c = 0.0;
  double amplitude = 0.0;     ///< A in P(f) = A / (f^2 + f_c^2)
  double fit_residual = 0.0;  ///< rms residual of log power
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();  ///< over (A, f_c)
  int iterations = 0;
  std::size_t bins = 0;
};

namespace internal {

// Residuals log P_i - log(A / (f_i^2 + f_c^2)) over x = (log A, log f_c^2).
struct LogLorentzian : Eigen::DenseFunctor<double> {
  LogLorentzian(const std::vector<double>& f2, const std::vector<double>& logp)
      : Eigen::DenseFunctor<double>(2, static_cast<int>(f2.size())), f2_(f2), logp_(logp) {}

  int operator()(const InputType& x, ValueType& r) const {
    const double fc2 = std::exp(x[1]);
    for (std::size_t i = 0; i < f2_.size(); ++i) {
      r[i] = logp_[i] - x[0] + std::log(f2_[i] + fc2);
    }
    return 0;
  }

  int df(const InputType& x, JacobianType& j) const {
    const double fc2 = std::exp(x[1]);
    for (std::size_t i = 0; i < f2_.size(); ++i) {
      j(i, 0) = -1.0;
      j(i, 1) = fc2 / (f2_[i] + fc2);
    }
    return 0;
  }

  const std::vector<double>& f2_;
  const std::vector<double>& logp_;
};

}  // namespace internal

/// Least-squares fit of A / (f^2 + f_c^2) in log power. The start value of
/// f_c is the first half-power crossing of the smoothed spectrum.
inline PSDFit fit_lorentzian(const PowerSpectrum& psd, const FitWindow& win = {}) {
  detail::require(psd.frequency.size() == psd.power.size() && psd.frequency.size() > 8,
                  "fit_lorentzian: malformed spectrum");
  const double f_max = win.max_fraction_of_nyquist * psd.frequency.back();
  std::vector<double> f, p;
  for (std::size_t k = win.skip_low_bins; k < psd.frequency.size(); ++k) {
    if (psd.frequency[k] > f_max) break;
    if (!(psd.power[k] > 0.0) || !std::isfinite(psd.power[k])) {
      throw NumericalError("fit_lorentzian: non-positive power in the fit window");
    }
    f.push_back(psd.frequency[k]);
    p.push_back(psd.power[k]);
  }
  const std::size_t m = f.size();
  if (m < 8) throw NumericalError("fit_lorentzian: fewer than 8 bins in the fit window");

  // Half-power start value on a moving average.
  const std::size_t half_width = std::max<std::size_t>(2, m / 100);
  auto smoothed = [&](std::size_t i) {
    const std::size_t lo = i >= half_width ? i - half_width : 0;
    const std::size_t hi = std::min(m - 1, i + half_width);
    double acc = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) acc += p[k];
    return acc / static_cast<double>(hi - lo + 1);
  };
  const double plateau = smoothed(0);
  double fc0 = 0.0;
  for (std::size_t i = 1; i < m; ++i) {
    if (smoothed(i) <= 0.5 * plateau) {
      fc0 = f[i];
      break;
    }
  }
  if (fc0 <= 0.0) {
    throw NumericalError("fit_lorentzian: no half-power point in the fit window");
  }

  std::vector<double> f2(m), logp(m);
  for (std::size_t i = 0; i < m; ++i) {
    f2[i] = f[i] * f[i];
    logp[i] = std::log(p[i]);
  }
  internal::LogLorentzian fn(f2, logp);
  Eigen::VectorXd x(2);
  x[1] = 2.0 * std::log(fc0);
  x[0] = std::log(plateau * (f2[0] + fc0 * fc0));
  Eigen::LevenbergMarquardt<internal::LogLorentzian> lm(fn);
  lm.setMaxfev(win.max_iterations);
  lm.setXtol(1e-14);
  lm.setFtol(1e-14);
  const auto status = lm.minimize(x);
  using Eigen::LevenbergMarquardtSpace::Status;
  if (status == Status::TooManyFunctionEvaluation) {
    throw NumericalError("fit_lorentzian: no convergence within " +
                         std::to_string(win.max_iterations) + " iterations");
  }
  if (status == Status::ImproperInputParameters || !x.allFinite()) {
    throw NumericalError("fit_lorentzian: solver failure");
  }

  PSDFit out;
  out.amplitude = std::exp(x[0]);
  out.f_c = std::exp(0.5 * x[1]);
  out.iterations = static_cast<int>(lm.iterations());
  out.bins = m;
  if (!(out.f_c >= f.front() && out.f_c <= f.back())) {
    throw NumericalError("fit_lorentzian: corner frequency outside the fit window");
  }
  Eigen::VectorXd r(m);
  fn(x, r);
  const double ss = r.squaredNorm();
  out.fit_residual = std::sqrt(ss / m);
  Eigen::MatrixXd j(m, 2);
  fn.df(x, j);
  const Eigen::Matrix2d jtj = j.transpose() * j;
  const Eigen::Matrix2d cov_log = (ss / std::max<double>(1.0, m - 2.0)) * jtj.inverse();
  // d(A, f_c) / d(log A, log f_c^2)
  Eigen::Matrix2d t = Eigen::Matrix2d::Zero();
  t(0, 0) = out.amplitude;
  t(1, 1) = 0.5 * out.f_c;
  out.covariance = t * cov_log * t.transpose();
  if (!std::isfinite(out.fit_residual)) {
    throw NumericalError("fit_lorentzian: non-finite residual");
  }
  return out;
}

/// Relative change |f_end - f_start| / f_start must stay below 10%.
inline bool ten_percent_rule(double f_start, double f_end, double threshold = 0.10) {
  detail::require(f_start > 0.0, "ten_percent_rule: f_start must be > 0");
  return std::abs(f_end - f_start) / f_start < threshold;
}

enum class Rejection { none, fit_failure, ten_percent, degenerate_reference };

inline const char* to_string(Rejection r) {
  switch (r) {
    case Rejection::none: return "";
    case Rejection::fit_failure: return "fit_failure";
    case Rejection::ten_percent: return "ten_percent_rule";
    case Rejection::degenerate_reference: return "degenerate_reference";
  }
  return "";
}

struct SegmentFrequencies {
  double start = 0.0, blue = 0.0, ref = 0.0, red = 0.0, end = 0.0;
};

struct RatioSample {
  double r_blue = std::numeric_limits<double>::quiet_NaN();
  double r_red = std::numeric_limits<double>::quiet_NaN();
  double f660_start = 0.0;
  double f660_end = 0.0;
  SegmentFrequencies f;
  bool accepted = false;
  Rejection reason = Rejection::none;
  std::string message;
};

/// Ratios from the five corner frequencies: with f660 the mean of the
/// first and last segments, r_x = (f_x - f660) / (f_ref - f660).
inline RatioSample extract_ratios(const SegmentFrequencies& f,
                                  double threshold = 0.10) {
  RatioSample s;
  s.f = f;
  s.f660_start = f.start;
  s.f660_end = f.end;
  const double f660 = 0.5 * (f.start + f.end);
  const double denom = f.ref - f660;
  if (denom != 0.0) {
    s.r_blue = (f.blue - f660) / denom;
    s.r_red = (f.red - f660) / denom;
  }
  if (!ten_percent_rule(f.start, f.end, threshold)) {
    s.reason = Rejection::ten_percent;
    s.message = "660-only corner frequency drifted by " +
                std::to_string(100.0 * std::abs(f.end - f.start) / f.start) + "%";
  } else if (denom == 0.0) {
    s.reason = Rejection::degenerate_reference;
    s.message = "reference segment equals the 660-only baseline";
  }
  s.accepted = s.reason == Rejection::none;
  return s;
}

struct AnalysisOptions {
  WelchOptions welch;
  FitWindow window;
  double ten_percent_threshold = 0.10;
};

/// Fits the five labelled segments of one acquisition.
inline RatioSample extract_ratios(const SegmentedAcquisition& acq,
                                  const AnalysisOptions& opts = {}) {
  std::array<double, 5> fc{};
  for (std::size_t s = 0; s < 5; ++s) {
    const auto it = std::find_if(acq.segments.begin(), acq.segments.end(),
                                 [&](const auto& seg) {
                                   return seg.label == brownian::kSegmentLabels[s];
                                 });
    detail::require(it != acq.segments.end(),
                    "extract_ratios: missing segment '" +
                        std::string(brownian::kSegmentLabels[s]) + "'");
    const std::span<const double> data(acq.samples.data() + it->begin,
                                       it->end - it->begin);
    try {
      fc[s] = fit_lorentzian(power_spectrum(data, acq.dt, opts.welch), opts.window).f_c;
    } catch (const std::exception& e) {
      RatioSample bad;
      bad.reason = Rejection::fit_failure;
      bad.message = std::string(brownian::kSegmentLabels[s]) + ": " + e.what();
      return bad;
    }
  }
  return extract_ratios(SegmentFrequencies{fc[0], fc[1], fc[2], fc[3], fc[4]},
                        opts.ten_percent_threshold);
}

struct LofResult {
  std::vector<double> scores;
  std::vector<bool> removed;
  std::size_t n_removed = 0;
};

namespace internal {

struct Neighbourhood {
  double k_distance = 0.0;
  std::vector<std::size_t> members;
  std::vector<double> distances;
};

}  // namespace internal

/// Local Outlier Factor on 2D points, each axis standardised to unit
/// variance first. Neighbourhoods include every point tied at the k-distance.
/// A point is removed iff its LOF exceeds the threshold.
inline LofResult lof_filter(const std::vector<std::array<double, 2>>& raw,
                            int k = 6, double threshold = 5.7) {
  detail::require(k >= 1, "lof_filter: k must be >= 1");
  const std::size_t n = raw.size();
  detail::require(n >= static_cast<std::size_t>(k) + 1,
                  "lof_filter: need at least k + 1 points");

  std::vector<std::array<double, 2>> pts(raw);
  for (int a = 0; a < 2; ++a) {
    double mean = 0.0;
    for (const auto& p : pts) mean += p[a];
    mean /= n;
    double var = 0.0;
    for (const auto& p : pts) var += (p[a] - mean) * (p[a] - mean);
    const double sd = std::sqrt(var / n);
    for (auto& p : pts) p[a] = sd > 0.0 ? (p[a] - mean) / sd : 0.0;
  }
  // Sweep along the axis with more distinct values.
  auto distinct = [&](int a) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = pts[i][a];
    std::sort(v.begin(), v.end());
    return std::unique(v.begin(), v.end()) - v.begin();
  };
  const int ax = distinct(0) >= distinct(1) ? 0 : 1;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return pts[i][ax] < pts[j][ax] || (pts[i][ax] == pts[j][ax] && i < j);
  });
  std::vector<std::size_t> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;
  auto dist = [&](std::size_t i, std::size_t j) {
    return std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
  };

  std::vector<internal::Neighbourhood> nb(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::priority_queue<double> best;  // k smallest distances
    const std::size_t r0 = rank[i];
    std::size_t lo = r0, hi = r0;
    bool lo_done = r0 == 0, hi_done = r0 + 1 >= n;
    auto bound = [&] {
      return best.size() < static_cast<std::size_t>(k)
                 ? std::numeric_limits<double>::infinity()
                 : best.top();
    };
    while (!lo_done || !hi_done) {
      for (int side = 0; side < 2; ++side) {
        if (side == 0 && !lo_done) {
          --lo;
          const std::size_t j = order[lo];
          if (pts[i][ax] - pts[j][ax] > bound()) {
            lo_done = true;
          } else {
            const double d = dist(i, j);
            if (d < bound() || best.size() < static_cast<std::size_t>(k)) {
              best.push(d);
              if (best.size() > static_cast<std::size_t>(k)) best.pop();
            }
            if (lo == 0) lo_done = true;
          }
        } else if (side == 1 && !hi_done) {
          ++hi;
          const std::size_t j = order[hi];
          if (pts[j][ax] - pts[i][ax] > bound()) {
            hi_done = true;
          } else {
            const double d = dist(i, j);
            if (d < bound() || best.size() < static_cast<std::size_t>(k)) {
              best.push(d);
              if (best.size() > static_cast<std::size_t>(k)) best.pop();
            }
            if (hi + 1 >= n) hi_done = true;
          }
        }
      }
    }
    const double kd = best.top();
    internal::Neighbourhood& h = nb[i];
    h.k_distance = kd;
    for (std::size_t r = r0; r-- > 0;) {
      const std::size_t j = order[r];
      if (pts[i][ax] - pts[j][ax] > kd) break;
      const double d = dist(i, j);
      if (d <= kd) {
        h.members.push_back(j);
        h.distances.push_back(d);
      }
    }
    for (std::size_t r = r0 + 1; r < n; ++r) {
      const std::size_t j = order[r];
      if (pts[j][ax] - pts[i][ax] > kd) break;
      const double d = dist(i, j);
      if (d <= kd) {
        h.members.push_back(j);
        h.distances.push_back(d);
      }
    }
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> lrd(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t a = 0; a < nb[i].members.size(); ++a) {
      acc += std::max(nb[nb[i].members[a]].k_distance, nb[i].distances[a]);
    }
    const double mean_reach = acc / nb[i].members.size();
    lrd[i] = mean_reach > 0.0 ? 1.0 / mean_reach : inf;
  }
  LofResult out;
  out.scores.resize(n);
  out.removed.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j : nb[i].members) {
      if (std::isinf(lrd[i])) {
        acc += std::isinf(lrd[j]) ? 1.0 : 0.0;
      } else {
        acc += lrd[j] / lrd[i];
      }
    }
    out.scores[i] = acc / nb[i].members.size();
    if (out.scores[i] > threshold) {
      out.removed[i] = true;
      ++out.n_removed;
    }
  }
  return out;
}

struct DistributionStats {
  double mean = 0.0;
  double se = 0.0;
  double skewness = 0.0;
  std::size_t n = 0;
};

/// Mean, standard error s / sqrt(n) and the adjusted Fisher-Pearson
/// skewness G1 = g1 sqrt(n (n - 1)) / (n - 2). Zero spread gives G1 = 0.
inline DistributionStats distribution_stats(std::span<const double> x) {
  detail::require(!x.empty(), "distribution_stats: empty sample");
  DistributionStats s;
  s.n = x.size();
  const double n = static_cast<double>(x.size());
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) {
    s.mean = *lo;
    return s;
  }
  double m2 = 0.0, m3 = 0.0;
  for (double v : x) {
    const double d = v - s.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  if (x.size() >= 2) s.se = std::sqrt(m2 / (n - 1.0)) / std::sqrt(n);
  m2 /= n;
  m3 /= n;
  const double scale = std::abs(s.mean) + std::sqrt(m2);
  if (x.size() >= 3 && m2 > 1e-28 * scale * scale) {
    const double g1 = m3 / std::pow(m2, 1.5);
    s.skewness = g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
  }
  return s;
}

/// One ratio observation tagged with its wavelength.
struct TaggedRatio {
  double lambda = 0.0;  ///< m
  double value = 0.0;
  bool rejected_10pct = false;
};

struct WavelengthStatistics {
  double lambda = 0.0;  ///< m
  DistributionStats stats;
  std::size_t n_kept = 0;
  std::size_t n_rejected_10pct = 0;
  std::size_t n_rejected_lof = 0;
};

struct LofOptions {
  bool enabled = true;
  int k = 6;
  double threshold = 5.7;
};

/// Drops 10%-rule rejects, runs LOF on (value, wavelength index) over the
/// survivors and summarises each wavelength.
inline std::vector<WavelengthStatistics> summarize_by_wavelength(
    const std::vector<TaggedRatio>& data, const LofOptions& lof = {}) {
  std::map<double, std::size_t> index;
  for (const auto& d : data) index.emplace(d.lambda, 0);
  std::size_t next = 0;
  for (auto& [lambda, idx] : index) idx = next++;

  std::vector<WavelengthStatistics> out(index.size());
  for (const auto& [lambda, idx] : index) out[idx].lambda = lambda;
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].rejected_10pct) {
      ++out[index[data[i].lambda]].n_rejected_10pct;
    } else {
      live.push_back(i);
    }
  }
  std::vector<bool> removed(live.size(), false);
  if (lof.enabled && live.size() >= static_cast<std::size_t>(lof.k) + 1) {
    std::vector<std::array<double, 2>> pts;
    pts.reserve(live.size());
    for (std::size_t i : live) {
      pts.push_back({data[i].value, static_cast<double>(index[data[i].lambda])});
    }
    removed = lof_filter(pts, lof.k, lof.threshold).removed;
  }
  std::vector<std::vector<double>> kept(out.size());
  for (std::size_t a = 0; a < live.size(); ++a) {
    const TaggedRatio& d = data[live[a]];
    const std::size_t idx = index[d.lambda];
    if (removed[a]) {
      ++out[idx].n_rejected_lof;
    } else {
      kept[idx].push_back(d.value);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].n_kept = kept[i].size();
    if (!kept[i].empty()) out[i].stats = distribution_stats(kept[i]);
  }
  return out;
}

}  // namespace nvtrap::analysis

#endif  // NVTRAP_TRACE_ANALYSIS_HPP
