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

#ifndef NVTRAP_LIOUVILLIAN_HPP
#define NVTRAP_LIOUVILLIAN_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "nvtrap/error.hpp"

namespace nvtrap::collective {

using cplx = std::complex<double>;

/// Driven, collectively decaying and collectively dephased Dicke ensemble
/// of `n` two-level emitters in the maximal-J sector.
///
/// Basis index k = 0..n counts excitations (k = J + M), so k = 0 is the
/// ground state |J,-J>. The density operator is vectorised by stacking its
/// rows: element rho(r, c) sits at r * (n + 1) + c. In that basis
///
///   A = i dw (Sz x 1 - 1 x Sz) + i (W/2) (X x 1 - 1 x X)
///       - (G/2) (S+S- x 1 + 1 x S+S- - 2 S- x S-)
///       - (g/2) (Sz^2 x 1 + 1 x Sz^2 - 2 Sz x Sz),       X = S+ + S-,
///
/// with dw the laser detuning from the domain transition, W the Rabi
/// frequency, G the single-spin decay rate and g the collective dephasing
/// rate. With this sign of the drive term the stiffness is
/// -hbar d2W/dx2 Re<S+>, which traps for red detuning.
struct LiouvillianParams {
  int n = 1;
  double detuning = 0.0;
  double rabi = 0.0;
  double gamma_bare = 0.0;
  double gamma_collective = 0.0;
};

/// Hard cap on n guarding memory; (n+1)^2 unknowns.
inline constexpr int kDefaultMaxSpins = 200;

class Liouvillian {
 public:
  struct Coupling {
    cplx coefficient;
    int row;  ///< bra index of the source element
    int col;  ///< ket index of the source element
  };

  explicit Liouvillian(const LiouvillianParams& p, int max_n = kDefaultMaxSpins)
      : p_(p) {
    detail::require(p.n >= 1, "build_liouvillian: n must be >= 1");
    detail::require(p.n <= max_n, "build_liouvillian: n = " +
                                      std::to_string(p.n) +
                                      " exceeds the hard cap " +
                                      std::to_string(max_n));
    detail::require(p.rabi >= 0.0 && p.gamma_bare >= 0.0 &&
                        p.gamma_collective >= 0.0,
                    "build_liouvillian: rates must be >= 0");
    detail::require(std::isfinite(p.detuning), "build_liouvillian: detuning");
  }

  const LiouvillianParams& params() const { return p_; }
  int spins() const { return p_.n; }
  int levels() const { return p_.n + 1; }
  Eigen::Index dimension() const {
    return static_cast<Eigen::Index>(levels()) * levels();
  }
  Eigen::Index index(int r, int c) const {
    return static_cast<Eigen::Index>(r) * levels() + c;
  }

  /// <k+1| S+ |k> = sqrt((n - k)(k + 1)).
  double ladder(int k) const {
    const int n = p_.n;
    if (k < 0 || k >= n) return 0.0;
    return std::sqrt(static_cast<double>(n - k) * (k + 1));
  }

  /// The (at most six) source elements feeding d rho(r, c) / dt.
  int couplings(int r, int c, std::array<Coupling, 6>& out) const {
    const int n = p_.n;
    const double half_w = 0.5 * p_.rabi;
    const double dq = static_cast<double>(r - c);
    const double decay_r = static_cast<double>(r) * (n - r + 1);
    const double decay_c = static_cast<double>(c) * (n - c + 1);
    int count = 0;
    out[count++] = {cplx(-0.5 * p_.gamma_bare * (decay_r + decay_c) -
                             0.5 * p_.gamma_collective * dq * dq,
                         p_.detuning * dq),
                    r, c};
    if (r < n && c < n && p_.gamma_bare != 0.0) {
      out[count++] = {cplx(p_.gamma_bare * ladder(r) * ladder(c), 0.0), r + 1,
                      c + 1};
    }
    if (p_.rabi != 0.0) {
      if (r > 0) out[count++] = {cplx(0.0, half_w * ladder(r - 1)), r - 1, c};
      if (r < n) out[count++] = {cplx(0.0, half_w * ladder(r)), r + 1, c};
      if (c > 0) out[count++] = {cplx(0.0, -half_w * ladder(c - 1)), r, c - 1};
      if (c < n) out[count++] = {cplx(0.0, -half_w * ladder(c)), r, c + 1};
    }
    return count;
  }

  Eigen::SparseMatrix<cplx> sparse() const {
    std::vector<Eigen::Triplet<cplx>> triplets;
    triplets.reserve(static_cast<std::size_t>(dimension()) * 6);
    std::array<Coupling, 6> buf;
    for (int r = 0; r <= p_.n; ++r) {
      for (int c = 0; c <= p_.n; ++c) {
        const int m = couplings(r, c, buf);
        for (int i = 0; i < m; ++i) {
          triplets.emplace_back(index(r, c), index(buf[i].row, buf[i].col),
                                buf[i].coefficient);
        }
      }
    }
    Eigen::SparseMatrix<cplx> a(dimension(), dimension());
    a.setFromTriplets(triplets.begin(), triplets.end());
    return a;
  }

  Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(sparse()); }

  /// d rho / dt for a full density operator.
  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(levels(), levels());
    std::array<Coupling, 6> buf;
    for (int r = 0; r <= p_.n; ++r) {
      for (int c = 0; c <= p_.n; ++c) {
        const int m = couplings(r, c, buf);
        cplx acc = 0.0;
        for (int i = 0; i < m; ++i) {
          acc += buf[i].coefficient * rho(buf[i].row, buf[i].col);
        }
        out(r, c) = acc;
      }
    }
    return out;
  }

  double frobenius_norm() const {
    double acc = 0.0;
    std::array<Coupling, 6> buf;
    for (int r = 0; r <= p_.n; ++r) {
      for (int c = 0; c <= p_.n; ++c) {
        const int m = couplings(r, c, buf);
        for (int i = 0; i < m; ++i) acc += std::norm(buf[i].coefficient);
      }
    }
    return std::sqrt(acc);
  }

 private:
  LiouvillianParams p_;
};

inline Liouvillian build_liouvillian(int n, double detuning, double rabi,
                                     double gamma_bare,
                                     double gamma_collective,
                                     int max_n = kDefaultMaxSpins) {
  return Liouvillian({n, detuning, rabi, gamma_bare, gamma_collective}, max_n);
}

struct CollectiveSteadyState {
  cplx sigma_plus_expect{0.0, 0.0};   ///< Tr[S+ rho]
  std::vector<double> populations;    ///< over the Dicke ladder, k = J + M
  Eigen::MatrixXcd density;           ///< full steady-state density operator
  double residual = 0.0;              ///< |A rho| / |A|
  double min_eigenvalue = 0.0;
  double hermiticity_defect = 0.0;    ///< max |rho - rho^dagger| before symmetrising
};

struct SteadyStateOptions {
  double residual_tolerance = 1e-9;
  double positivity_tolerance = 1e-9;
  double rcond_floor = 1e-13;
  bool check_positivity = true;
};

namespace internal {

inline CollectiveSteadyState finish_steady_state(
    const Liouvillian& a, Eigen::MatrixXcd rho,
    const SteadyStateOptions& opts) {
  const int levels = a.levels();
  const cplx trace = rho.trace();
  if (!(std::abs(trace) > 0.0) || !std::isfinite(trace.real())) {
    throw NumericalError("steady_state: zero or non-finite trace");
  }
  rho /= trace;
  CollectiveSteadyState out;
  out.hermiticity_defect = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  rho = 0.5 * (rho + rho.adjoint()).eval();

  out.residual = a.apply(rho).norm() / std::max(a.frobenius_norm(), 1e-300);
  if (!(out.residual < opts.residual_tolerance)) {
    throw NumericalError("steady_state: residual " +
                         std::to_string(out.residual) + " above tolerance");
  }
  out.populations.resize(static_cast<std::size_t>(levels));
  for (int k = 0; k < levels; ++k) out.populations[k] = rho(k, k).real();
  cplx sp = 0.0;
  for (int k = 0; k + 1 < levels; ++k) sp += a.ladder(k) * rho(k, k + 1);
  out.sigma_plus_expect = sp;
  if (opts.check_positivity) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(
        rho, Eigen::EigenvaluesOnly);
    out.min_eigenvalue = eig.eigenvalues().minCoeff();
    if (out.min_eigenvalue < -opts.positivity_tolerance) {
      throw NumericalError("steady_state: density operator not positive (" +
                           std::to_string(out.min_eigenvalue) + ")");
    }
  }
  out.density = std::move(rho);
  return out;
}

}  // namespace internal

/// Unique trace-one element of ker(A), from the structure of the Dicke
/// Liouvillian.
///
/// Elements rho(c + q, c) with equal coherence order q form block q. The
/// drive only couples neighbouring orders and decay and dephasing stay
/// inside an order, so stationarity is a block-tridiagonal system over
/// q = 0..n. For q >= 1 every source element lies on or below the diagonal,
/// so those blocks are complex-linear; conjugates rho(c, c + 1) only enter
/// the real population equations. Orders are eliminated from q = n
/// downwards; the population block then has a one-dimensional kernel, fixed
/// by pinning rho(0, 0) and dropping its (redundant) equation, which is the
/// augmented trace condition up to normalisation.
inline CollectiveSteadyState steady_state(const Liouvillian& a,
                                          const SteadyStateOptions& opts = {}) {
  const int n = a.spins();
  auto size = [n](int q) { return n + 1 - q; };

  struct Blocks {
    Eigen::MatrixXcd lower, diag, upper;
    Eigen::MatrixXcd upper_conj;  // q = 0 only: coefficients of conj(rho)
  };
  auto assemble = [&](int q) {
    const int m = size(q);
    Blocks b;
    b.diag = Eigen::MatrixXcd::Zero(m, m);
    if (q > 0) b.lower = Eigen::MatrixXcd::Zero(m, size(q - 1));
    if (q < n) b.upper = Eigen::MatrixXcd::Zero(m, size(q + 1));
    if (q == 0) b.upper_conj = Eigen::MatrixXcd::Zero(m, size(1));
    std::array<Liouvillian::Coupling, 6> buf;
    for (int c = 0; c < m; ++c) {
      const int count = a.couplings(c + q, c, buf);
      for (int i = 0; i < count; ++i) {
        const int src_q = buf[i].row - buf[i].col;
        if (src_q == q) {
          b.diag(c, buf[i].col) += buf[i].coefficient;
        } else if (q == 0 && src_q == -1) {
          b.upper_conj(c, buf[i].row) += buf[i].coefficient;
        } else if (src_q == q - 1) {
          b.lower(c, buf[i].col) += buf[i].coefficient;
        } else if (src_q == q + 1) {
          b.upper(c, buf[i].col) += buf[i].coefficient;
        } else {
          throw NumericalError("steady_state: coupling outside the band");
        }
      }
    }
    return b;
  };

  // Forward elimination, top order first. gains[q] = S_q^{-1} L_q.
  std::vector<Eigen::MatrixXcd> gains(static_cast<std::size_t>(n + 1));
  Blocks current = assemble(n);
  Eigen::MatrixXcd schur = current.diag;
  Eigen::MatrixXd pop_block;
  for (int q = n; q >= 1; --q) {
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(schur);
    if (!(lu.rcond() > opts.rcond_floor)) {
      throw NumericalError("steady_state: singular coherence block q = " +
                           std::to_string(q));
    }
    gains[q] = lu.solve(current.lower);
    Blocks below = assemble(q - 1);
    const Eigen::SparseMatrix<cplx, Eigen::RowMajor> upper =
        below.upper.sparseView();
    if (q > 1) {
      schur = below.diag - upper * gains[q];
    } else {
      const Eigen::SparseMatrix<cplx, Eigen::RowMajor> upper_conj =
          below.upper_conj.sparseView();
      pop_block = (below.diag - upper * gains[1] -
                   upper_conj * gains[1].conjugate())
                      .real();
    }
    current = std::move(below);
  }

  // Population block: pin rho(0,0) = 1 and drop its equation.
  Eigen::VectorXd pops(n + 1);
  pops(0) = 1.0;
  {
    const Eigen::MatrixXd reduced = pop_block.bottomRightCorner(n, n);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(reduced);
    if (!(lu.rcond() > opts.rcond_floor)) {
      throw NumericalError(
          "steady_state: null space of A is not one-dimensional");
    }
    pops.tail(n) = lu.solve(-pop_block.col(0).tail(n));
  }

  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n + 1, n + 1);
  for (int k = 0; k <= n; ++k) rho(k, k) = pops(k);
  Eigen::VectorXcd prev = pops.cast<cplx>();
  for (int q = 1; q <= n; ++q) {
    const Eigen::VectorXcd x = -gains[q] * prev;
    for (int c = 0; c < size(q); ++c) {
      rho(c + q, c) = x(c);
      rho(c, c + q) = std::conj(x(c));
    }
    prev = x;
  }
  return internal::finish_steady_state(a, std::move(rho), opts);
}

/// Generic route for an explicit matrix: least-squares solution of the
/// augmented system [A; trace row] rho = [0; 1], with a rank check that the
/// kernel of A is one-dimensional. Dense; intended for small n.
inline CollectiveSteadyState steady_state_dense(
    const Liouvillian& a, const SteadyStateOptions& opts = {}) {
  const Eigen::MatrixXcd m = a.dense();
  const Eigen::Index d = m.rows();
  const int levels = a.levels();

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr_a(m);
  const auto diag = qr_a.matrixQR().diagonal().cwiseAbs();
  const double scale = diag.maxCoeff();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (diag(i) > 1e-11 * scale) ++rank;
  }
  if (rank != d - 1) {
    throw NumericalError("steady_state: numerical null space has dimension " +
                         std::to_string(d - rank));
  }

  Eigen::MatrixXcd aug = Eigen::MatrixXcd::Zero(d + 1, d);
  aug.topRows(d) = m / scale;
  for (int k = 0; k < levels; ++k) aug(d, a.index(k, k)) = 1.0;
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(d + 1);
  rhs(d) = 1.0;
  const Eigen::VectorXcd x = aug.colPivHouseholderQr().solve(rhs);

  Eigen::MatrixXcd rho(levels, levels);
  for (int r = 0; r < levels; ++r) {
    for (int c = 0; c < levels; ++c) rho(r, c) = x(a.index(r, c));
  }
  return internal::finish_steady_state(a, std::move(rho), opts);
}

}  // namespace nvtrap::collective

#endif  // NVTRAP_LIOUVILLIAN_HPP
