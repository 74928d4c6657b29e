#pragma once

// Symmetric eigendecomposition via cyclic Jacobi rotations.  Closed-form
// 2x2/3x3 eigenvalue formulas lose accuracy near degenerate pairs, which is
// exactly where the guarded divided differences downstream need reliable
// input, so we iterate instead.

#include <cmath>
#include <algorithm>

#include "tensor.hpp"

namespace logmorph {

template <int D> struct SpectralDecomp {
  std::array<real, D> lam{};  // ascending
  Mat<D> Q;                   // columns are the eigenvectors, A = Q diag(lam) Q^T
};

template <int D> inline SpectralDecomp<D> eig_sym(const SymTensor<D>& s) {
  Mat<D> a = to_full(s);
  Mat<D> v = mat_identity<D>();

  real scale = 0;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) scale = std::max(scale, std::abs(a(i, j)));
  const real tol = (scale > 0 ? scale : 1.0) * 1e-15;

  for (int sweep = 0; sweep < 50; ++sweep) {
    real off = 0;
    for (int p = 0; p < D; ++p)
      for (int q = p + 1; q < D; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= tol) break;

    for (int p = 0; p < D; ++p) {
      for (int q = p + 1; q < D; ++q) {
        const real apq = a(p, q);
        if (std::abs(apq) <= tol * 1e-2) continue;
        const real theta = (a(q, q) - a(p, p)) / (2 * apq);
        real t;
        if (std::abs(theta) > 1e10) {
          t = 1 / (2 * theta);
        } else {
          t = 1 / (std::abs(theta) + std::sqrt(1 + theta * theta));
          if (theta < 0) t = -t;
        }
        const real c = 1 / std::sqrt(1 + t * t);
        const real sn = t * c;

        for (int k = 0; k < D; ++k) {
          const real akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (int k = 0; k < D; ++k) {
          const real apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (int k = 0; k < D; ++k) {
          const real vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  SpectralDecomp<D> d;
  std::array<int, D> perm;
  for (int i = 0; i < D; ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(),
            [&](int i, int j) { return a(i, i) < a(j, j); });
  for (int k = 0; k < D; ++k) {
    d.lam[k] = a(perm[k], perm[k]);
    for (int i = 0; i < D; ++i) d.Q(i, k) = v(i, perm[k]);
  }
  return d;
}

// Coordinates of a symmetric tensor in the eigenbasis: Q^T A Q.
template <int D> inline Mat<D> to_eigen_coords(const SpectralDecomp<D>& d, const SymTensor<D>& a) {
  const Mat<D> af = to_full(a);
  Mat<D> r;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) {
      real s = 0;
      for (int k = 0; k < D; ++k)
        for (int l = 0; l < D; ++l) s += d.Q(k, i) * af(k, l) * d.Q(l, j);
      r(i, j) = s;
    }
  return r;
}

// Back-rotation Q M Q^T of a (numerically symmetric) eigenbasis matrix.
template <int D> inline SymTensor<D> from_eigen_coords(const SpectralDecomp<D>& d, const Mat<D>& m) {
  SymTensor<D> r;
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j) {
      real s = 0;
      for (int k = 0; k < D; ++k)
        for (int l = 0; l < D; ++l)
          s += d.Q(i, k) * 0.5 * (m(k, l) + m(l, k)) * d.Q(j, l);
      r.at(i, j) = s;
    }
  return r;
}

template <int D> inline SymTensor<D> reconstruct(const SpectralDecomp<D>& d) {
  Mat<D> lamm;
  for (int i = 0; i < D; ++i) lamm(i, i) = d.lam[i];
  return from_eigen_coords(d, lamm);
}

}  // namespace logmorph
