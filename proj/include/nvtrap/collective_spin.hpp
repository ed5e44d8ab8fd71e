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

#ifndef NVTRAP_COLLECTIVE_SPIN_HPP
#define NVTRAP_COLLECTIVE_SPIN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nvtrap/error.hpp"
#include "nvtrap/liouvillian.hpp"
#include "nvtrap/parallel.hpp"
#include "nvtrap/quantum_core.hpp"
#include "nvtrap/units.hpp"

/// Cooperative (Dicke) dipole stiffness of an NV ensemble split into
/// spectral sub-domains.
namespace nvtrap::collective {

using quantum::DriveField;
using quantum::NVPhotophysics;

struct Nanodiamond {
  double radius = 0.0;      ///< m
  long n_nv = 1;            ///< total NV count
  double zpl_center = 0.0;  ///< crystal-mean ZPL angular frequency
  double zpl_sigma = 0.0;   ///< intra-crystal Gaussian spread, angular

  void validate() const {
    detail::require(radius > 0.0, "Nanodiamond: radius must be > 0");
    detail::require(n_nv >= 1, "Nanodiamond: n_nv must be >= 1");
    detail::require(zpl_center > 0.0, "Nanodiamond: zpl_center must be > 0");
    detail::require(zpl_sigma >= 0.0, "Nanodiamond: zpl_sigma must be >= 0");
  }
};

struct CollectiveDomain {
  double omega_i = 0.0;  ///< domain transition frequency
  double n_coop = 0.0;   ///< (fractional) number of cooperating NVs
  int index = 0;
};

/// Splits the Gaussian ZPL distribution into bins of width `grain_width`
/// centred on omega0 + i * grain_width, keeping the bins whose centre lies
/// within four standard deviations. Occupancies are the Gaussian mass of
/// each bin.
inline std::vector<CollectiveDomain> coarse_grain(const Nanodiamond& nd,
                                                  double grain_width) {
  nd.validate();
  detail::require(grain_width > 0.0 && std::isfinite(grain_width),
                  "coarse_grain: grain_width must be > 0");
  const double n = static_cast<double>(nd.n_nv);
  if (nd.zpl_sigma == 0.0) {
    return {CollectiveDomain{nd.zpl_center, n, 0}};
  }
  const int imax = static_cast<int>(std::floor(4.0 * nd.zpl_sigma / grain_width));
  const double inv = 1.0 / (std::sqrt(2.0) * nd.zpl_sigma);
  // Mass of [a, b] (offsets from the centre); the tail form keeps relative
  // precision far from the centre.
  auto mass = [&](double a, double b) {
    if (a >= 0.0) return 0.5 * (std::erfc(a * inv) - std::erfc(b * inv));
    if (b <= 0.0) return 0.5 * (std::erfc(-b * inv) - std::erfc(-a * inv));
    return 0.5 * (std::erf(b * inv) - std::erf(a * inv));
  };
  std::vector<CollectiveDomain> out;
  out.reserve(static_cast<std::size_t>(2 * imax + 1));
  for (int i = -imax; i <= imax; ++i) {
    const double lo = (i - 0.5) * grain_width;
    const double hi = (i + 0.5) * grain_width;
    out.push_back({nd.zpl_center + i * grain_width, n * mass(lo, hi), i});
  }
  return out;
}

/// Mean size of the domains holding at least `threshold` NVs.
inline double mean_occupied_size(const std::vector<CollectiveDomain>& domains,
                                 double threshold = 0.5) {
  double sum = 0.0;
  int count = 0;
  for (const auto& d : domains) {
    if (d.n_coop >= threshold) {
      sum += d.n_coop;
      ++count;
    }
  }
  detail::require(count > 0, "mean_occupied_size: no occupied domain");
  return sum / count;
}

/// Least-squares polynomial in n, fitted in the scaled variable n / n_scale.
class PolynomialFit {
 public:
  PolynomialFit() = default;
  PolynomialFit(const std::vector<std::pair<double, double>>& samples,
                int degree) {
    detail::require(degree >= 0, "extrapolate_stiffness: degree must be >= 0");
    std::set<double> distinct;
    for (const auto& s : samples) {
      detail::require(std::isfinite(s.first) && std::isfinite(s.second),
                      "extrapolate_stiffness: non-finite sample");
      distinct.insert(s.first);
    }
    const std::size_t need = std::max<std::size_t>(4, degree + 1);
    detail::require(distinct.size() >= need,
                    "extrapolate_stiffness: need at least " +
                        std::to_string(need) + " distinct sample sizes");
    scale_ = *distinct.rbegin();
    if (scale_ <= 0.0) scale_ = 1.0;
    const Eigen::Index rows = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd v(rows, degree + 1);
    Eigen::VectorXd y(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double t = samples[r].first / scale_;
      double p = 1.0;
      for (int k = 0; k <= degree; ++k) {
        v(r, k) = p;
        p *= t;
      }
      y(r) = samples[r].second;
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v);
    if (qr.rank() != degree + 1) {
      throw InvalidArgument("extrapolate_stiffness: degenerate samples");
    }
    coeffs_ = qr.solve(y);
  }

  double operator()(double n) const {
    const double t = n / scale_;
    double acc = 0.0;
    for (Eigen::Index k = coeffs_.size() - 1; k >= 0; --k) {
      acc = acc * t + coeffs_(k);
    }
    return acc;
  }

 private:
  Eigen::VectorXd coeffs_;
  double scale_ = 1.0;
};

/// Least-squares polynomial fit of stiffness against domain size, evaluated
/// at `target_n`.
inline double extrapolate_stiffness(
    const std::vector<std::pair<double, double>>& samples, double target_n,
    int degree = 1) {
  detail::require(target_n > 0.0, "extrapolate_stiffness: target_n must be > 0");
  return PolynomialFit(samples, degree)(target_n);
}

struct CollectiveOptions {
  int n_exact = 80;  ///< largest domain solved directly
  std::vector<int> sample_grid{1, 2, 4, 8, 16, 24, 32, 48, 64, 80};
  int fit_degree = 1;
  int fit_min_n = 32;  ///< only grid points >= this enter the tail fit
  /// gamma_collective = dephasing_factor * gamma_c. The collective Sz
  /// dephasing damps a single-spin coherence at gamma_collective / 2, so 2
  /// reproduces the single-emitter linewidth gamma at n = 1.
  double dephasing_factor = 2.0;
  int max_n = kDefaultMaxSpins;

  void validate() const {
    detail::require(n_exact >= 1 && n_exact <= max_n,
                    "CollectiveOptions: n_exact out of range");
    detail::require(fit_degree >= 0, "CollectiveOptions: fit_degree < 0");
    detail::require(dephasing_factor >= 0.0,
                    "CollectiveOptions: dephasing_factor < 0");
    for (int n : sample_grid) {
      detail::require(n >= 1 && n <= n_exact,
                      "CollectiveOptions: sample grid outside [1, n_exact]");
    }
  }

  std::vector<int> tail_grid() const {
    std::vector<int> out;
    for (int n : sample_grid) {
      if (n >= fit_min_n) out.push_back(n);
    }
    return out;
  }
};

/// Re Tr[S+ rho_ss] of an n-spin Dicke domain.
inline double sigma_plus_real(int n, double detuning, double rabi,
                              const NVPhotophysics& phys,
                              const CollectiveOptions& opts = {}) {
  const Liouvillian a({n, detuning, rabi, phys.gamma_total(),
                       opts.dephasing_factor * phys.gamma_c},
                      opts.max_n);
  return steady_state(a).sigma_plus_expect.real();
}

/// kappa = -hbar Omega''(0) Re<S+> with Omega'' = -2 Omega(0) / w0^2.
inline double stiffness_prefactor(double rabi_center, double w0) {
  return 2.0 * units::hbar * rabi_center / (w0 * w0);
}

/// Re<S+> as a function of a real domain size: exact up to n_exact, then
/// the tail fit over the sample grid; fractional sizes are interpolated
/// linearly between the bracketing integers, with zero at n = 0.
template <class Solve>
double interpolate_in_size(double n_coop, const CollectiveOptions& opts,
                           Solve&& solve_int) {
  detail::require(n_coop >= 0.0 && std::isfinite(n_coop),
                  "domain size must be finite and >= 0");
  if (n_coop == 0.0) return 0.0;
  const double lo_d = std::floor(n_coop);
  const int lo = static_cast<int>(lo_d);
  const double frac = n_coop - lo_d;

  PolynomialFit tail;
  bool have_tail = false;
  auto value = [&](int n) -> double {
    if (n == 0) return 0.0;
    if (n <= opts.n_exact) return solve_int(n);
    if (!have_tail) {
      std::vector<std::pair<double, double>> samples;
      for (int g : opts.tail_grid()) samples.emplace_back(g, solve_int(g));
      tail = PolynomialFit(samples, opts.fit_degree);
      have_tail = true;
    }
    return tail(n);
  };
  const double v_lo = value(lo);
  if (frac == 0.0) return v_lo;
  return v_lo + frac * (value(lo + 1) - v_lo);
}

/// Stiffness (N/m) of one cooperative domain at the beam centre.
inline double domain_stiffness(const CollectiveDomain& domain,
                               const NVPhotophysics& phys,
                               const DriveField& field,
                               const CollectiveOptions& opts = {}) {
  phys.validate();
  opts.validate();
  DriveField centre = field;
  centre.x = 0.0;
  const double rabi =
      quantum::rabi_frequency(quantum::zpl_dipole_moment(phys), centre);
  const double delta = field.omega - domain.omega_i;
  const double re_sp = interpolate_in_size(domain.n_coop, opts, [&](int n) {
    return sigma_plus_real(n, delta, rabi, phys, opts);
  });
  return stiffness_prefactor(rabi, field.w0) * re_sp;
}

/// Sum of the domain stiffnesses of one nanodiamond.
inline double ensemble_quantum_stiffness(const Nanodiamond& nd,
                                         const NVPhotophysics& phys,
                                         const DriveField& field,
                                         double grain_width,
                                         const CollectiveOptions& opts = {},
                                         int workers = 1) {
  const auto domains = coarse_grain(nd, grain_width);
  std::vector<double> kappa(domains.size(), 0.0);
  parallel_for(domains.size(), workers, [&](std::size_t i) {
    kappa[i] = domain_stiffness(domains[i], phys, field, opts);
  });
  double total = 0.0;
  for (double k : kappa) total += k;
  return total;
}

}  // namespace nvtrap::collective

#endif  // NVTRAP_COLLECTIVE_SPIN_HPP
