#pragma once

// Pointwise (spatially homogeneous) time integration of the morphology
// equations with BDF2 (BDF1 startup) and a full Newton solve per step.
// Used for parameter studies and as the reference path for the PDE solver.

#include <functional>

#include "dense.hpp"
#include "morphology.hpp"

namespace logmorph {

template <int D> using KinematicsFn = std::function<KinematicsSample<D>(real)>;

struct OdeStats {
  int total_newton = 0;
  int max_newton = 0;
  bool converged = true;
};

namespace detail {

template <int D> inline SymTensor<D> unit_comp_tensor(int c) {
  SymTensor<D> t;
  t[c] = 1.0;
  return t;
}

// One implicit step of d(state)/dt + src(state) = 0 with leading BDF weight
// c0/dt and explicit history sum hist (= (c1 y_n + c2 y_nm1)/dt).
template <int D, class SrcFn, class JacFn>
inline bool bdf_newton_step(SymTensor<D>& y, real c0_dt, const SymTensor<D>& hist, SrcFn src, JacFn jac,
                            real tol, int maxit, int& iters) {
  constexpr int n = sym_comps<D>;
  for (iters = 0; iters < maxit; ++iters) {
    const SymTensor<D> r = c0_dt * y + hist + src(y);
    if (frob_norm(r) <= tol) return true;
    std::array<std::array<real, n>, n> a{};
    std::array<real, n> b{};
    for (int c = 0; c < n; ++c) {
      const SymTensor<D> col = jac(y, unit_comp_tensor<D>(c));
      for (int rr = 0; rr < n; ++rr) a[rr][c] = (rr == c ? c0_dt : 0.0) + col[rr];
    }
    for (int rr = 0; rr < n; ++rr) b[rr] = -r[rr];
    const auto dx = solve_dense<n>(a, b);
    for (int rr = 0; rr < n; ++rr) y[rr] += dx[rr];
  }
  const SymTensor<D> r = c0_dt * y + hist + src(y);
  return frob_norm(r) <= tol;
}

}  // namespace detail

// Integrates the log-form equation from psi0 over nsteps steps of size dt.
template <int D>
inline SymTensor<D> integrate_logmorph_0d(SymTensor<D> psi0, const KinematicsFn<D>& kin_fn, real dt, int nsteps,
                                          const ModelParams& p, OdeStats* stats = nullptr, real tol = 1e-12,
                                          int maxit = 30, const GuardThresholds& g = {}) {
  SymTensor<D> prev = psi0, prev2 = psi0;
  for (int i = 0; i < nsteps; ++i) {
    const KinematicsSample<D> kin = kin_fn((i + 1) * dt);
    const bool first = (i == 0);
    const real c0_dt = (first ? 1.0 : 1.5) / dt;
    const SymTensor<D> hist = first ? (-1.0 / dt) * prev : (-2.0 / dt) * prev + (0.5 / dt) * prev2;
    SymTensor<D> y = prev;
    auto src = [&](const SymTensor<D>& psi) {
      return residual_logmorph(eig_sym(psi), SymTensor<D>{}, SymTensor<D>{}, kin, p);
    };
    auto jac = [&](const SymTensor<D>& psi, const SymTensor<D>& dpsi) {
      return jacobian_source(eig_sym(psi), dpsi, kin, p, g);
    };
    int it = 0;
    const bool ok = detail::bdf_newton_step<D>(y, c0_dt, hist, src, jac, tol, maxit, it);
    if (stats) {
      stats->total_newton += it;
      stats->max_newton = std::max(stats->max_newton, it);
      stats->converged = stats->converged && ok;
    }
    prev2 = prev;
    prev = y;
  }
  return prev;
}

// Same driver for the untransformed shape-tensor equation.
template <int D>
inline SymTensor<D> integrate_morph_0d(SymTensor<D> s0, const KinematicsFn<D>& kin_fn, real dt, int nsteps,
                                       const ModelParams& p, OdeStats* stats = nullptr, real tol = 1e-12,
                                       int maxit = 30) {
  SymTensor<D> prev = s0, prev2 = s0;
  for (int i = 0; i < nsteps; ++i) {
    const KinematicsSample<D> kin = kin_fn((i + 1) * dt);
    const bool first = (i == 0);
    const real c0_dt = (first ? 1.0 : 1.5) / dt;
    const SymTensor<D> hist = first ? (-1.0 / dt) * prev : (-2.0 / dt) * prev + (0.5 / dt) * prev2;
    SymTensor<D> y = prev;
    auto src = [&](const SymTensor<D>& s) {
      return residual_morph(s, SymTensor<D>{}, SymTensor<D>{}, kin, p);
    };
    auto jac = [&](const SymTensor<D>& s, const SymTensor<D>& ds) {
      return jacobian_source_morph(s, ds, kin, p);
    };
    int it = 0;
    const bool ok = detail::bdf_newton_step<D>(y, c0_dt, hist, src, jac, tol, maxit, it);
    if (stats) {
      stats->total_newton += it;
      stats->max_newton = std::max(stats->max_newton, it);
      stats->converged = stats->converged && ok;
    }
    prev2 = prev;
    prev = y;
  }
  return prev;
}

}  // namespace logmorph
