#pragma once

// Shape-tensor morphology model and its log-transformed counterpart.
//
// S form:    dS/dt + (u.grad)S + a1 (S - g(S) I) - a2 (ES + SE) - a3 (WS - SW) = 0
// Psi form:  dPsi/dt + (u.grad)Psi + a1 (I - g e^-Psi) - a2 F(Psi,E) - a3 (W Psi - Psi W) = 0
//
// g is fixed by volume conservation: the relaxation term must not change
// det(S), which gives g = d / tr(S^-1) = d / tr(exp(-Psi)).  In 3D this is
// the classical 3 III/II; in 2D it reduces to 2 det(S)/tr(S).

#include <stdexcept>

#include "kernels.hpp"

namespace logmorph {

struct ModelParams {
  real alpha1 = 5.0;        // relaxation rate [1/s]
  real alpha2 = 4.2298e-4;  // elongation coupling [-]
  real alpha3 = 4.2298e-4;  // rotation coupling [-]
  real mu = 0.0035;         // plasma viscosity [Pa s]
  real rho = 1054.0;        // density [kg/m^3]
};

template <int D> struct KinematicsSample {
  Vec<D> u{};        // advective velocity (frame-relative inside MRF zones)
  SymTensor<D> E{};  // strain rate
  SkewTensor<D> W{};  // vorticity tensor (absolute)
};

template <int D> inline real g_morph(const SymTensor<D>& s) {
  if constexpr (D == 3) {
    const real ii = invariant_II(s);
    if (std::abs(ii) < 1e-14)
      throw std::domain_error("g_morph: singular shape, II(S) ~ 0");
    return 3.0 * det<3>(s) / ii;
  } else {
    const real t = trace(s);
    if (std::abs(t) < 1e-14)
      throw std::domain_error("g_morph: singular shape, tr(S) ~ 0");
    return 2.0 * det<2>(s) / t;
  }
}

// Directional derivative of g_morph at S along dS.
template <int D> inline real dg_morph(const SymTensor<D>& s, const SymTensor<D>& ds) {
  const real dd = det<D>(s);
  const SymTensor<D> sinv = inverse(s);
  const real ddet = dd * frob_inner(sinv, ds);
  if constexpr (D == 3) {
    const real ii = invariant_II(s);
    real trsds = 0;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) trsds += s(i, k) * ds(k, i);
    const real dii = trace(s) * trace(ds) - trsds;
    return 3.0 * (ddet * ii - dd * dii) / (ii * ii);
  } else {
    const real t = trace(s);
    return 2.0 * (ddet * t - dd * trace(ds)) / (t * t);
  }
}

template <int D> inline real g_log(const SpectralDecomp<D>& d) {
  return real(D) / trace_exp_neg(d);
}

template <int D> inline SymTensor<D> residual_morph(const SymTensor<D>& s, const SymTensor<D>& dsdt,
                                                    const SymTensor<D>& advs, const KinematicsSample<D>& kin,
                                                    const ModelParams& p) {
  SymTensor<D> r = dsdt + advs;
  r += p.alpha1 * (s - g_morph(s) * sym_identity<D>());
  r -= p.alpha2 * sym_anticomm(kin.E, s);
  r -= p.alpha3 * skew_comm(kin.W, s);
  return r;
}

template <int D> inline SymTensor<D> residual_logmorph(const SpectralDecomp<D>& d, const SymTensor<D>& dpsidt,
                                                       const SymTensor<D>& advpsi, const KinematicsSample<D>& kin,
                                                       const ModelParams& p) {
  const SymTensor<D> psi = reconstruct(d);
  SymTensor<D> r = dpsidt + advpsi;
  r += p.alpha1 * (sym_identity<D>() - g_log(d) * mat_exp_neg(d));
  r -= p.alpha2 * big_f(d, kin.E);
  r -= p.alpha3 * skew_comm(kin.W, psi);
  return r;
}

// Source part of the Newton operator: derivative of the non-transport terms
// of the Psi residual along dPsi,
//   -d a1 L_alpha1(Psi,dPsi) - a2 L_alpha2(Psi,dPsi,E) - a3 (W dPsi - dPsi W).
template <int D> inline SymTensor<D> jacobian_source(const SpectralDecomp<D>& d, const SymTensor<D>& dpsi,
                                                     const KinematicsSample<D>& kin, const ModelParams& p,
                                                     const GuardThresholds& g = {}) {
  SymTensor<D> r = (-real(D) * p.alpha1) * l_alpha1(d, dpsi);
  r -= p.alpha2 * l_alpha2(d, dpsi, kin.E, g);
  r -= p.alpha3 * skew_comm(kin.W, dpsi);
  return r;
}

// Same for the untransformed S equation (used by the GLS baseline):
//   a1 (dS - dg[dS] I) - a2 (E dS + dS E) - a3 (W dS - dS W).
template <int D> inline SymTensor<D> jacobian_source_morph(const SymTensor<D>& s, const SymTensor<D>& ds,
                                                           const KinematicsSample<D>& kin, const ModelParams& p) {
  SymTensor<D> r = p.alpha1 * (ds - dg_morph(s, ds) * sym_identity<D>());
  r -= p.alpha2 * sym_anticomm(kin.E, ds);
  r -= p.alpha3 * skew_comm(kin.W, ds);
  return r;
}

namespace detail {

// Coordinates of a packed symmetric tensor in the orthonormal tensor basis
// (unit diagonals, off-diagonals scaled by sqrt(2)); the Frobenius norm of
// the tensor equals the 2-norm of the coordinate vector.
template <int D> inline void ortho_coords(const SymTensor<D>& a, real* v) {
  int c = 0;
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j, ++c)
      v[c] = (i == j) ? a(i, j) : std::sqrt(2.0) * a(i, j);
}

template <int D> inline SymTensor<D> ortho_basis_tensor(int c) {
  SymTensor<D> b;
  int k = 0;
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j, ++k)
      if (k == c) b.at(i, j) = (i == j) ? 1.0 : 1.0 / std::sqrt(2.0);
  return b;
}

// Largest singular value of an n x n matrix: cyclic Jacobi on M^T M (power
// iteration stalls when the top singular values nearly coincide, which the
// rotation-coupled source operator routinely produces).
template <int N> inline real spectral_norm(const real m[N][N]) {
  real a[N][N];
  real scale = 0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      a[i][j] = 0;
      for (int k = 0; k < N; ++k) a[i][j] += m[k][i] * m[k][j];
      scale = std::max(scale, std::abs(a[i][j]));
    }
  if (scale == 0) return 0;
  for (int sweep = 0; sweep < 60; ++sweep) {
    real off = 0;
    for (int p = 0; p < N - 1; ++p)
      for (int q = p + 1; q < N; ++q) off = std::max(off, std::abs(a[p][q]));
    if (off <= 1e-15 * scale) break;
    for (int p = 0; p < N - 1; ++p)
      for (int q = p + 1; q < N; ++q) {
        if (std::abs(a[p][q]) <= 1e-300) continue;
        const real theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
        const real t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const real c = 1.0 / std::sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < N; ++k) {
          const real akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < N; ++k) {
          const real apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }
  real lam = 0;
  for (int i = 0; i < N; ++i) lam = std::max(lam, a[i][i]);
  return std::sqrt(std::max(lam, 0.0));
}

}  // namespace detail

// Spectral norm of the linearized source operator dPsi -> jacobian_source,
// represented in the orthonormal tensor basis.
template <int D> inline real source_operator_norm(const SpectralDecomp<D>& d, const KinematicsSample<D>& kin,
                                                  const ModelParams& p, const GuardThresholds& g = {}) {
  constexpr int n = sym_comps<D>;
  real m[n][n];
  for (int c = 0; c < n; ++c) {
    const SymTensor<D> ln = jacobian_source(d, detail::ortho_basis_tensor<D>(c), kin, p, g);
    real col[n];
    detail::ortho_coords(ln, col);
    for (int r = 0; r < n; ++r) m[r][c] = col[r];
  }
  return detail::spectral_norm<n>(m);
}

template <int D> inline real source_operator_norm_morph(const SymTensor<D>& s, const KinematicsSample<D>& kin,
                                                        const ModelParams& p) {
  constexpr int n = sym_comps<D>;
  real m[n][n];
  for (int c = 0; c < n; ++c) {
    const SymTensor<D> ln = jacobian_source_morph(s, detail::ortho_basis_tensor<D>(c), kin, p);
    real col[n];
    detail::ortho_coords(ln, col);
    for (int r = 0; r < n; ++r) m[r][c] = col[r];
  }
  return detail::spectral_norm<n>(m);
}

// Distortion D = (L - B)/(L + B) from the extreme semi-axes L,B = sqrt of
// the extreme eigenvalues of S.
template <int D> inline real distortion(const SpectralDecomp<D>& sd) {
  if (sd.lam[0] <= 0)
    throw std::domain_error("distortion: shape tensor not positive definite");
  const real bax = std::sqrt(sd.lam[0]);
  const real lax = std::sqrt(sd.lam[D - 1]);
  return (lax - bax) / (lax + bax);
}

// Scalar fluid shear stress 2 mu sqrt(-II(E)); tiny positive II from roundoff
// is clamped to zero.
template <int D> inline real sigma_f(const SymTensor<D>& e, real mu) {
  const real r = -invariant_II(e);
  return 2.0 * mu * std::sqrt(r > 0 ? r : 0);
}

// Effective cell shear stress from the distortion, 2 mu a1 D / ((1-D^2) a2).
inline real sigma_eff(real dist, const ModelParams& p) {
  if (!(std::abs(dist) < 1.0))
    throw std::domain_error("sigma_eff: distortion outside (-1,1)");
  return 2.0 * p.mu * p.alpha1 * dist / ((1.0 - dist * dist) * p.alpha2);
}

}  // namespace logmorph
