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

#ifndef NVTRAP_STIFFNESS_TABLE_HPP
#define NVTRAP_STIFFNESS_TABLE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/interpolators/pchip.hpp>

#include "nvtrap/collective_spin.hpp"
#include "nvtrap/error.hpp"
#include "nvtrap/parallel.hpp"

namespace nvtrap::collective {

struct TableSpec {
  std::vector<int> n_nodes{1,  2,  3,  4,  5,  6,  8,  10, 12,
                           16, 20, 24, 32, 40, 48, 64, 80};
  double delta_max = 0.0;    ///< largest |detuning| covered, rad/s
  double delta_scale = 0.0;  ///< asinh mapping scale; 0 means gamma
  double du = 0.05;          ///< node spacing in asinh(delta / scale)
  double rabi_min = 0.0;
  double rabi_max = 0.0;
  int rabi_nodes = 3;
};

/// Tabulated Re<S+>(n, detuning, rabi) for fast repeated domain sums.
///
/// Detuning is sampled uniformly in u = asinh(delta / scale) on a symmetric
/// grid filled by the odd symmetry of Re<S+> and interpolated with a cubic
/// B-spline; the Rabi frequency by Lagrange interpolation over equispaced
/// nodes; integer sizes between nodes by PCHIP. Size handling (fractional
/// sizes, the tail fit above n_exact) is identical to the direct path.
/// Queries outside the tabulated detuning or Rabi range fall back to
/// direct solves.
class StiffnessTable {
 public:
  StiffnessTable(const NVPhotophysics& phys, TableSpec spec,
                 const CollectiveOptions& opts = {}, int workers = 1)
      : phys_(phys), spec_(std::move(spec)), opts_(opts) {
    phys_.validate();
    opts_.validate();
    detail::require(spec_.delta_max > 0.0, "StiffnessTable: delta_max must be > 0");
    detail::require(spec_.du > 0.0, "StiffnessTable: du must be > 0");
    detail::require(spec_.rabi_min > 0.0 && spec_.rabi_max >= spec_.rabi_min,
                    "StiffnessTable: invalid Rabi range");
    detail::require(spec_.rabi_nodes >= 1 && spec_.rabi_nodes <= 7,
                    "StiffnessTable: rabi_nodes must lie in [1, 7]");
    if (spec_.delta_scale <= 0.0) spec_.delta_scale = phys_.gamma();

    std::vector<int> nodes = spec_.n_nodes;
    for (int g : opts_.tail_grid()) nodes.push_back(g);
    nodes.erase(std::remove_if(nodes.begin(), nodes.end(),
                               [&](int n) { return n < 1 || n > opts_.n_exact; }),
                nodes.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    detail::require(nodes.size() >= 3, "StiffnessTable: too few size nodes");
    nodes_ = nodes;

    if (spec_.rabi_max == spec_.rabi_min) spec_.rabi_nodes = 1;
    for (int k = 0; k < spec_.rabi_nodes; ++k) {
      rabi_.push_back(spec_.rabi_nodes == 1
                          ? spec_.rabi_min
                          : spec_.rabi_min + (spec_.rabi_max - spec_.rabi_min) *
                                                 k / (spec_.rabi_nodes - 1));
    }

    half_ = static_cast<int>(
        std::ceil(std::asinh(spec_.delta_max / spec_.delta_scale) / spec_.du));
    const std::size_t nu = static_cast<std::size_t>(half_) + 1;
    const std::size_t nn = nodes_.size();
    const std::size_t nr = rabi_.size();
    std::vector<double> raw(nr * nn * nu, 0.0);
    // Largest sizes first so the slow solves do not trail at the end.
    parallel_for(raw.size(), workers, [&](std::size_t t) {
      const std::size_t in = nn - 1 - (t / (nr * nu));
      const std::size_t rest = t % (nr * nu);
      const std::size_t ir = rest / nu;
      const std::size_t j = rest % nu;
      if (j == 0) return;
      const double delta = spec_.delta_scale * std::sinh(j * spec_.du);
      raw[(ir * nn + in) * nu + j] =
          sigma_plus_real(nodes_[in], delta, rabi_[ir], phys_, opts_);
    });

    splines_.reserve(nr * nn);
    std::vector<double> full(2 * nu - 1);
    for (std::size_t ir = 0; ir < nr; ++ir) {
      for (std::size_t in = 0; in < nn; ++in) {
        const double* v = &raw[(ir * nn + in) * nu];
        for (std::size_t j = 0; j < nu; ++j) {
          full[half_ + j] = v[j];
          full[half_ - j] = -v[j];
        }
        splines_.emplace_back(full.data(), full.size(), -half_ * spec_.du,
                              spec_.du);
      }
    }
  }

  const std::vector<int>& size_nodes() const { return nodes_; }
  const CollectiveOptions& options() const { return opts_; }
  const NVPhotophysics& photophysics() const { return phys_; }

  bool covers(double delta, double rabi) const {
    const double tol = 1e-9 * spec_.rabi_max;
    return std::abs(delta) <= spec_.delta_max && rabi >= spec_.rabi_min - tol &&
           rabi <= spec_.rabi_max + tol;
  }

  /// Re<S+> for a (possibly fractional) domain size.
  double sigma_plus(double n_coop, double delta, double rabi) const {
    if (!covers(delta, rabi)) {
      return interpolate_in_size(n_coop, opts_, [&](int n) {
        return sigma_plus_real(n, delta, rabi, phys_, opts_);
      });
    }
    // Evaluated at |delta| so the odd symmetry is exact.
    const double u = std::asinh(std::abs(delta) / spec_.delta_scale);
    const double sign = delta < 0.0 ? -1.0 : 1.0;
    std::vector<double> at_nodes(nodes_.size());
    for (std::size_t in = 0; in < nodes_.size(); ++in) {
      at_nodes[in] = sign * interpolate_rabi(in, u, rabi);
    }
    std::optional<boost::math::interpolators::pchip<std::vector<double>>> pchip;
    auto value = [&](int n) {
      const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), n);
      if (it != nodes_.end() && *it == n) return at_nodes[it - nodes_.begin()];
      if (!pchip) {
        std::vector<double> xs{0.0};
        std::vector<double> ys{0.0};
        for (std::size_t in = 0; in < nodes_.size(); ++in) {
          xs.push_back(nodes_[in]);
          ys.push_back(at_nodes[in]);
        }
        pchip.emplace(std::move(xs), std::move(ys));
      }
      return (*pchip)(static_cast<double>(n));
    };
    return interpolate_in_size(n_coop, opts_, value);
  }

  double domain_stiffness(const CollectiveDomain& domain,
                          const DriveField& field) const {
    DriveField centre = field;
    centre.x = 0.0;
    const double rabi =
        quantum::rabi_frequency(quantum::zpl_dipole_moment(phys_), centre);
    return stiffness_prefactor(rabi, field.w0) *
           sigma_plus(domain.n_coop, field.omega - domain.omega_i, rabi);
  }

  double ensemble_quantum_stiffness(const Nanodiamond& nd,
                                    const DriveField& field,
                                    double grain_width) const {
    double total = 0.0;
    for (const auto& d : coarse_grain(nd, grain_width)) {
      total += domain_stiffness(d, field);
    }
    return total;
  }

 private:
  double interpolate_rabi(std::size_t in, double u, double rabi) const {
    const std::size_t nn = nodes_.size();
    if (rabi_.size() == 1) return splines_[in](u);
    double acc = 0.0;
    for (std::size_t a = 0; a < rabi_.size(); ++a) {
      double w = 1.0;
      for (std::size_t b = 0; b < rabi_.size(); ++b) {
        if (b != a) w *= (rabi - rabi_[b]) / (rabi_[a] - rabi_[b]);
      }
      acc += w * splines_[a * nn + in](u);
    }
    return acc;
  }

  NVPhotophysics phys_;
  TableSpec spec_;
  CollectiveOptions opts_;
  std::vector<int> nodes_;
  std::vector<double> rabi_;
  int half_ = 0;
  std::vector<boost::math::interpolators::cardinal_cubic_b_spline<double>>
      splines_;
};

}  // namespace nvtrap::collective

#endif  // NVTRAP_STIFFNESS_TABLE_HPP
