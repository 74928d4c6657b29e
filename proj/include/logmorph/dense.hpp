#pragma once

// Tiny fixed-size dense linear algebra used by the pointwise Newton solves
// and element geometry (nothing here is performance critical).

#include <array>
#include <cmath>
#include <stdexcept>

#include "tensor.hpp"

namespace logmorph {

template <int D> inline real mat_det(const Mat<D>& m) {
  if constexpr (D == 2) {
    return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  } else {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
  }
}

template <int D> inline Mat<D> mat_inverse(const Mat<D>& m) {
  const real d = mat_det<D>(m);
  if (std::abs(d) < 1e-300) throw std::domain_error("mat_inverse: singular matrix");
  Mat<D> r;
  if constexpr (D == 2) {
    r(0, 0) = m(1, 1) / d;
    r(0, 1) = -m(0, 1) / d;
    r(1, 0) = -m(1, 0) / d;
    r(1, 1) = m(0, 0) / d;
  } else {
    r(0, 0) = (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) / d;
    r(0, 1) = (m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2)) / d;
    r(0, 2) = (m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1)) / d;
    r(1, 0) = (m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2)) / d;
    r(1, 1) = (m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0)) / d;
    r(1, 2) = (m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2)) / d;
    r(2, 0) = (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0)) / d;
    r(2, 1) = (m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1)) / d;
    r(2, 2) = (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) / d;
  }
  return r;
}

// In-place LU solve with partial pivoting for a small N x N system.
template <int N> inline std::array<real, N> solve_dense(std::array<std::array<real, N>, N> a,
                                                        std::array<real, N> b) {
  for (int k = 0; k < N; ++k) {
    int piv = k;
    for (int i = k + 1; i < N; ++i)
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    if (std::abs(a[piv][k]) < 1e-300) throw std::domain_error("solve_dense: singular matrix");
    if (piv != k) {
      std::swap(a[piv], a[k]);
      std::swap(b[piv], b[k]);
    }
    for (int i = k + 1; i < N; ++i) {
      const real f = a[i][k] / a[k][k];
      a[i][k] = 0;
      for (int j = k + 1; j < N; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  std::array<real, N> x{};
  for (int i = N - 1; i >= 0; --i) {
    real s = b[i];
    for (int j = i + 1; j < N; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

}  // namespace logmorph
