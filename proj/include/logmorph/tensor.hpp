#pragma once

// Small fixed-dimension tensor types used throughout the library.
// Symmetric tensors are stored packed, row-major upper triangle:
//   2D: [xx, xy, yy]   3D: [xx, xy, xz, yy, yz, zz]
// Skew tensors store the strict upper triangle in the same order.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace logmorph {

using real = double;

template <int D> inline constexpr int sym_comps = D * (D + 1) / 2;
template <int D> inline constexpr int skew_comps = D * (D - 1) / 2;

template <int D> struct Vec {
  std::array<real, D> x{};
  real& operator[](int i) { return x[i]; }
  real operator[](int i) const { return x[i]; }
};

template <int D> inline Vec<D> operator+(Vec<D> a, const Vec<D>& b) {
  for (int i = 0; i < D; ++i) a[i] += b[i];
  return a;
}
template <int D> inline Vec<D> operator-(Vec<D> a, const Vec<D>& b) {
  for (int i = 0; i < D; ++i) a[i] -= b[i];
  return a;
}
template <int D> inline Vec<D> operator*(real s, Vec<D> a) {
  for (int i = 0; i < D; ++i) a[i] *= s;
  return a;
}
template <int D> inline Vec<D>& operator+=(Vec<D>& a, const Vec<D>& b) {
  for (int i = 0; i < D; ++i) a[i] += b[i];
  return a;
}
template <int D> inline real dot(const Vec<D>& a, const Vec<D>& b) {
  real s = 0;
  for (int i = 0; i < D; ++i) s += a[i] * b[i];
  return s;
}
template <int D> inline real norm(const Vec<D>& a) { return std::sqrt(dot(a, a)); }

// Full (unsymmetric) d x d matrix, row major.  Used for velocity gradients
// and eigenvector frames.
template <int D> struct Mat {
  std::array<real, D * D> a{};
  real& operator()(int i, int j) { return a[i * D + j]; }
  real operator()(int i, int j) const { return a[i * D + j]; }
};

template <int D> inline Mat<D> mat_identity() {
  Mat<D> m;
  for (int i = 0; i < D; ++i) m(i, i) = 1;
  return m;
}

template <int D> inline Mat<D> operator*(const Mat<D>& a, const Mat<D>& b) {
  Mat<D> c;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) {
      real s = 0;
      for (int k = 0; k < D; ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

template <int D> inline Mat<D> operator+(Mat<D> a, const Mat<D>& b) {
  for (int i = 0; i < D * D; ++i) a.a[i] += b.a[i];
  return a;
}
template <int D> inline Mat<D> operator-(Mat<D> a, const Mat<D>& b) {
  for (int i = 0; i < D * D; ++i) a.a[i] -= b.a[i];
  return a;
}
template <int D> inline Mat<D> operator*(real s, Mat<D> a) {
  for (int i = 0; i < D * D; ++i) a.a[i] *= s;
  return a;
}
template <int D> inline Mat<D> transpose(const Mat<D>& a) {
  Mat<D> t;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) t(i, j) = a(j, i);
  return t;
}

template <int D> inline Vec<D> operator*(const Mat<D>& a, const Vec<D>& v) {
  Vec<D> r;
  for (int i = 0; i < D; ++i) {
    real s = 0;
    for (int k = 0; k < D; ++k) s += a(i, k) * v[k];
    r[i] = s;
  }
  return r;
}

// Packed index of entry (i,j), i<=j, in the upper-triangle ordering.
template <int D> inline constexpr int sym_index(int i, int j) {
  if (i > j) { const int t = i; i = j; j = t; }
  // row i contributes D-i entries starting at offset i*D - i*(i-1)/2
  return i * D - i * (i - 1) / 2 + (j - i);
}

template <int D> struct SymTensor {
  std::array<real, sym_comps<D>> a{};
  real& operator[](int c) { return a[c]; }
  real operator[](int c) const { return a[c]; }
  real operator()(int i, int j) const { return a[sym_index<D>(i, j)]; }
  real& at(int i, int j) { return a[sym_index<D>(i, j)]; }
};

template <int D> struct SkewTensor {
  // w[sym-like order of strict upper triangle]; entry (i,j), i<j is +w, (j,i) is -w
  std::array<real, skew_comps<D>> w{};
  real& operator[](int c) { return w[c]; }
  real operator[](int c) const { return w[c]; }
  real operator()(int i, int j) const {
    if (i == j) return 0;
    const bool flip = i > j;
    if (flip) { const int t = i; i = j; j = t; }
    // strict upper triangle packing: row i starts at i*D - i*(i+1)/2 - i ... derive directly
    int c = 0;
    for (int r = 0; r < i; ++r) c += D - 1 - r;
    c += j - i - 1;
    return flip ? -w[c] : w[c];
  }
  real& at(int i, int j) {  // i < j required
    int c = 0;
    for (int r = 0; r < i; ++r) c += D - 1 - r;
    return w[c + j - i - 1];
  }
};

template <int D> inline SymTensor<D> operator+(SymTensor<D> a, const SymTensor<D>& b) {
  for (int c = 0; c < sym_comps<D>; ++c) a[c] += b[c];
  return a;
}
template <int D> inline SymTensor<D> operator-(SymTensor<D> a, const SymTensor<D>& b) {
  for (int c = 0; c < sym_comps<D>; ++c) a[c] -= b[c];
  return a;
}
template <int D> inline SymTensor<D> operator*(real s, SymTensor<D> a) {
  for (int c = 0; c < sym_comps<D>; ++c) a[c] *= s;
  return a;
}
template <int D> inline SymTensor<D>& operator+=(SymTensor<D>& a, const SymTensor<D>& b) {
  for (int c = 0; c < sym_comps<D>; ++c) a[c] += b[c];
  return a;
}
template <int D> inline SymTensor<D>& operator-=(SymTensor<D>& a, const SymTensor<D>& b) {
  for (int c = 0; c < sym_comps<D>; ++c) a[c] -= b[c];
  return a;
}

// Tensor with a single packed component set to 1 (both mirror entries for
// off-diagonal components).
template <int D> inline SymTensor<D> sym_unit(int c) {
  SymTensor<D> t;
  t[c] = 1;
  return t;
}

template <int D> inline SymTensor<D> sym_identity() {
  SymTensor<D> s;
  for (int i = 0; i < D; ++i) s.at(i, i) = 1;
  return s;
}

template <int D> inline Mat<D> to_full(const SymTensor<D>& s) {
  Mat<D> m;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) m(i, j) = s(i, j);
  return m;
}

template <int D> inline Mat<D> to_full(const SkewTensor<D>& s) {
  Mat<D> m;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) m(i, j) = s(i, j);
  return m;
}

// Symmetric part of a full matrix, packed.
template <int D> inline SymTensor<D> sym_part(const Mat<D>& m) {
  SymTensor<D> s;
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j) s.at(i, j) = 0.5 * (m(i, j) + m(j, i));
  return s;
}

template <int D> inline SkewTensor<D> skew_part(const Mat<D>& m) {
  SkewTensor<D> s;
  int c = 0;
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j) s.w[c++] = 0.5 * (m(i, j) - m(j, i));
  return s;
}

template <int D> inline real trace(const SymTensor<D>& s) {
  real t = 0;
  for (int i = 0; i < D; ++i) t += s(i, i);
  return t;
}

template <int D> inline real det(const SymTensor<D>& s);
template <> inline real det<2>(const SymTensor<2>& s) {
  return s[0] * s[2] - s[1] * s[1];
}
template <> inline real det<3>(const SymTensor<3>& s) {
  return s(0, 0) * (s(1, 1) * s(2, 2) - s(1, 2) * s(1, 2))
       - s(0, 1) * (s(0, 1) * s(2, 2) - s(1, 2) * s(0, 2))
       + s(0, 2) * (s(0, 1) * s(1, 2) - s(1, 1) * s(0, 2));
}

// Second principal invariant (tr(S)^2 - tr(S^2))/2.
template <int D> inline real invariant_II(const SymTensor<D>& s) {
  const real t = trace(s);
  real t2 = 0;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) t2 += s(i, j) * s(j, i);
  return 0.5 * (t * t - t2);
}

// Frobenius inner product; off-diagonal packed entries count twice.
template <int D> inline real frob_inner(const SymTensor<D>& a, const SymTensor<D>& b) {
  real s = 0;
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j) {
      const real w = (i == j) ? 1.0 : 2.0;
      s += w * a(i, j) * b(i, j);
    }
  return s;
}
template <int D> inline real frob_norm(const SymTensor<D>& a) {
  return std::sqrt(frob_inner(a, a));
}

// Contraction multiplicity of packed component c (1 on diagonal, 2 off).
template <int D> inline real comp_weight(int c) {
  int k = 0;
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j, ++k)
      if (k == c) return (i == j) ? 1.0 : 2.0;
  return 1.0;
}

// E*S + S*E for symmetric E, S (result symmetric).
template <int D> inline SymTensor<D> sym_anticomm(const SymTensor<D>& e, const SymTensor<D>& s) {
  SymTensor<D> r;
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j) {
      real v = 0;
      for (int k = 0; k < D; ++k) v += e(i, k) * s(k, j) + s(i, k) * e(k, j);
      r.at(i, j) = v;
    }
  return r;
}

// W*S - S*W for skew W and symmetric S (result symmetric).
template <int D> inline SymTensor<D> skew_comm(const SkewTensor<D>& w, const SymTensor<D>& s) {
  SymTensor<D> r;
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j) {
      real v = 0;
      for (int k = 0; k < D; ++k) v += w(i, k) * s(k, j) - s(i, k) * w(k, j);
      r.at(i, j) = v;
    }
  return r;
}

template <int D> inline SymTensor<D> inverse(const SymTensor<D>& s) {
  const real d = det<D>(s);
  if (std::abs(d) < 1e-300)
    throw std::domain_error("singular symmetric tensor inversion");
  SymTensor<D> r;
  if constexpr (D == 2) {
    r[0] = s[2] / d;
    r[1] = -s[1] / d;
    r[2] = s[0] / d;
  } else {
    r.at(0, 0) = (s(1, 1) * s(2, 2) - s(1, 2) * s(1, 2)) / d;
    r.at(0, 1) = (s(0, 2) * s(1, 2) - s(0, 1) * s(2, 2)) / d;
    r.at(0, 2) = (s(0, 1) * s(1, 2) - s(0, 2) * s(1, 1)) / d;
    r.at(1, 1) = (s(0, 0) * s(2, 2) - s(0, 2) * s(0, 2)) / d;
    r.at(1, 2) = (s(0, 1) * s(0, 2) - s(0, 0) * s(1, 2)) / d;
    r.at(2, 2) = (s(0, 0) * s(1, 1) - s(0, 1) * s(0, 1)) / d;
  }
  return r;
}

}  // namespace logmorph
