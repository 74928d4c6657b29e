#pragma once

// Spectral matrix-function kernels.  All operators are evaluated in the
// eigenbasis of Psi: with projectors P_i = q_i q_i^T a sandwich sum
// sum_{ij} c_ij P_i A P_j has eigenbasis coordinates c_ij * A~_ij, where
// A~ = Q^T A Q.  Results rotate back at the end.
//
// Derivative conventions (tau-free form):
//   K(Psi,R)              = d/de exp(-(Psi + e R))            at e=0
//   L_alpha1(Psi,R)       = d/de [exp(-(Psi+eR))/tr(...)]     at e=0
//   L_alpha2(Psi,R,E)     = d/de F(Psi + e R, E)              at e=0
//   dK_direction          = d/de K(Psi + e dPsi, R + e Jhat)  with J = directional
//   dL_alpha2_direction     image of the residual (chain rule through R).

#include "eig.hpp"
#include "guards.hpp"
#include "tensor.hpp"

namespace logmorph {

template <int D> inline real trace_exp_neg(const SpectralDecomp<D>& d) {
  real t = 0;
  for (int i = 0; i < D; ++i) t += std::exp(-d.lam[i]);
  return t;
}

template <int D> inline SymTensor<D> mat_exp_neg(const SpectralDecomp<D>& d) {
  SymTensor<D> r;
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j) {
      real s = 0;
      for (int k = 0; k < D; ++k) s += std::exp(-d.lam[k]) * d.Q(i, k) * d.Q(j, k);
      r.at(i, j) = s;
    }
  return r;
}

// F(Psi,E) = sum_{ij} f(l_i - l_j) P_i E P_j with f(x) = x/tanh(x/2).
template <int D> inline SymTensor<D> big_f(const SpectralDecomp<D>& d, const SymTensor<D>& e) {
  const Mat<D> et = to_eigen_coords(d, e);
  Mat<D> m;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) m(i, j) = func_f(d.lam[i] - d.lam[j]) * et(i, j);
  return from_eigen_coords(d, m);
}

// K(Psi,R) = sum_{ij} dd_exp(l_i,l_j) P_i R P_j  (first divided differences
// of exp(-lambda); equals -exp(-l) on the diagonal).
template <int D> inline SymTensor<D> kernel_K(const SpectralDecomp<D>& d, const SymTensor<D>& r) {
  const Mat<D> rt = to_eigen_coords(d, r);
  Mat<D> m;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) m(i, j) = dd_exp(d.lam[i], d.lam[j]) * rt(i, j);
  return from_eigen_coords(d, m);
}

// L_alpha1(Psi,R) = K/tr(exp(-Psi)) - exp(-Psi) tr(K)/tr(exp(-Psi))^2.
// Traceless by construction.
template <int D> inline SymTensor<D> l_alpha1(const SpectralDecomp<D>& d, const SymTensor<D>& r) {
  const SymTensor<D> k = kernel_K(d, r);
  const SymTensor<D> en = mat_exp_neg(d);
  const real t = trace_exp_neg(d);
  const real trk = trace(k);
  return (1.0 / t) * k - (trk / (t * t)) * en;
}

// L_alpha2(Psi,R,E) = sum_{ijk} q(i,j,k) [P_i R P_j E P_k + P_k E P_j R P_i],
// q = (f(l_i-l_k) - f(l_j-l_k))/(l_i-l_j).
template <int D> inline SymTensor<D> l_alpha2(const SpectralDecomp<D>& d, const SymTensor<D>& r,
                                              const SymTensor<D>& e, const GuardThresholds& g) {
  const Mat<D> rt = to_eigen_coords(d, r);
  const Mat<D> et = to_eigen_coords(d, e);
  Mat<D> m;
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) {
      real s = 0;
      for (int j = 0; j < D; ++j) {
        s += q_prefactor(d.lam[a], d.lam[j], d.lam[b], g) * rt(a, j) * et(j, b);
        s += q_prefactor(d.lam[b], d.lam[j], d.lam[a], g) * et(a, j) * rt(j, b);
      }
      m(a, b) = s;
    }
  return from_eigen_coords(d, m);
}

// Directional derivative of K(Psi, R(Psi)) along dPsi, with J the directional
// image of R.  Three-index part uses second divided differences of exp(-l).
template <int D> inline SymTensor<D> dK_direction(const SpectralDecomp<D>& d, const SymTensor<D>& r,
                                                  const SymTensor<D>& dpsi, const SymTensor<D>& j,
                                                  const GuardThresholds& g) {
  const Mat<D> rt = to_eigen_coords(d, r);
  const Mat<D> dt = to_eigen_coords(d, dpsi);
  const Mat<D> jt = to_eigen_coords(d, j);
  Mat<D> m;
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) {
      real s = dd_exp(d.lam[a], d.lam[b]) * jt(a, b);
      for (int p = 0; p < D; ++p) {
        const real c = dd2_exp(d.lam[a], d.lam[p], d.lam[b], g);
        s += c * (rt(a, p) * dt(p, b) + dt(a, p) * rt(p, b));
      }
      m(a, b) = s;
    }
  return from_eigen_coords(d, m);
}

// Full chain-rule derivative of L_alpha1(Psi, R(Psi)) along dPsi.
template <int D> inline SymTensor<D> dL_alpha1_direction(const SpectralDecomp<D>& d, const SymTensor<D>& r,
                                                         const SymTensor<D>& dpsi, const SymTensor<D>& j,
                                                         const GuardThresholds& g) {
  const real t = trace_exp_neg(d);
  const SymTensor<D> en = mat_exp_neg(d);
  const SymTensor<D> kr = kernel_K(d, r);
  const SymTensor<D> kd = kernel_K(d, dpsi);
  const SymTensor<D> dk = dK_direction(d, r, dpsi, j, g);
  const real trkr = trace(kr), trkd = trace(kd), trdk = trace(dk);
  const real t2 = t * t;
  SymTensor<D> out = (1.0 / t) * dk;
  out -= (trkd / t2) * kr;
  out -= (trkr / t2) * kd;
  out -= (trdk / t2) * en;
  out += (2.0 * trkr * trkd / (t2 * t)) * en;
  return out;
}

// Directional derivative of L_alpha2(Psi, R(Psi), E) along dPsi.
// Three sums: the q-prefactor sum with J, a four-index sum with the second
// divided difference of f expressed through coth difference quotients, and a
// four-index sum with the mixed double difference quotient of f.
template <int D> inline SymTensor<D> dL_alpha2_direction(const SpectralDecomp<D>& d, const SymTensor<D>& r,
                                                         const SymTensor<D>& dpsi, const SymTensor<D>& e,
                                                         const SymTensor<D>& j, const GuardThresholds& g) {
  const Mat<D> rt = to_eigen_coords(d, r);
  const Mat<D> dt = to_eigen_coords(d, dpsi);
  const Mat<D> et = to_eigen_coords(d, e);
  const Mat<D> jt = to_eigen_coords(d, j);
  const auto& l = d.lam;

  real p2[D][D][D][D], p3[D][D][D][D];
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b)
      for (int c = 0; c < D; ++c)
        for (int f = 0; f < D; ++f) {
          p2[a][b][c][f] = p2_prefactor(l[a], l[b], l[c], l[f], g);
          p3[a][b][c][f] = p3_prefactor(l[a], l[b], l[c], l[f], g);
        }

  Mat<D> m;  // q-sum with J in the R slot
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) {
      real s = 0;
      for (int p = 0; p < D; ++p) {
        s += q_prefactor(l[a], l[p], l[b], g) * jt(a, p) * et(p, b);
        s += q_prefactor(l[b], l[p], l[a], g) * et(a, p) * jt(p, b);
      }
      m(a, b) = s;
    }

  // half of the symmetric four-index sums; the transpose is added below
  Mat<D> h;
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) {
      real s = 0;
      for (int p = 0; p < D; ++p)
        for (int k = 0; k < D; ++k) {
          s += p2[a][p][k][b] * (dt(a, p) * rt(p, k) + rt(a, p) * dt(p, k)) * et(k, b);
          s += p3[a][p][k][b] * rt(a, p) * et(p, k) * dt(k, b);
        }
      h(a, b) = s;
    }

  Mat<D> tot;
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) tot(a, b) = m(a, b) + h(a, b) + h(b, a);
  return from_eigen_coords(d, tot);
}

}  // namespace logmorph
