#pragma once

// Linear Lagrange simplex elements: geometry, shape functions, quadrature,
// and the element metric used by the stabilization parameter.

#include <stdexcept>
#include <vector>

#include "dense.hpp"
#include "mesh.hpp"

namespace logmorph {

template <int D> struct ElementGeometry {
  Mat<D> B;     // edge matrix, column v = x_{v+1} - x_0
  Mat<D> Binv;
  real vol;     // physical measure
  real jac;     // |det B| = vol * d!
  std::array<Vec<D>, D + 1> grad;  // physical basis gradients (constant)
  Mat<D> G;     // covariant metric of the map from the equilateral element
  Vec<D> x0;
};

// Metric reference: mapping from the equilateral (regular) simplex rather
// than the right unit simplex, so that G is isotropic for well-shaped
// elements.  A^T A has unit diagonal and 1/2 off-diagonals.
template <int D> inline ElementGeometry<D> element_metric(const Mesh<D>& m, int e) {
  ElementGeometry<D> g;
  const auto& conn = m.elems[e];
  g.x0 = m.nodes[conn[0]];
  for (int v = 0; v < D; ++v) {
    const Vec<D> d = m.nodes[conn[v + 1]] - g.x0;
    for (int i = 0; i < D; ++i) g.B(i, v) = d[i];
  }
  const real det = mat_det<D>(g.B);
  if (std::abs(det) < 1e-300) throw std::domain_error("element_metric: degenerate element");
  g.Binv = mat_inverse<D>(g.B);
  real fact = 1;
  for (int k = 2; k <= D; ++k) fact *= k;
  g.jac = std::abs(det);
  g.vol = g.jac / fact;
  for (int i = 1; i <= D; ++i)
    for (int j = 0; j < D; ++j) g.grad[i][j] = g.Binv(i - 1, j);
  for (int j = 0; j < D; ++j) {
    real s = 0;
    for (int i = 1; i <= D; ++i) s += g.grad[i][j];
    g.grad[0][j] = -s;
  }
  Mat<D> ata;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) ata(i, j) = (i == j) ? 1.0 : 0.5;
  const Mat<D> t = ata * g.Binv;  // A^T A B^-1
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) {
      real s = 0;
      for (int k = 0; k < D; ++k) s += g.Binv(k, i) * t(k, j);
      g.G(i, j) = s;
    }
  return g;
}

template <int D> struct QuadRule {
  std::vector<std::array<real, D>> xi;  // reference coordinates
  std::vector<real> w;                  // weights, sum = reference volume
};

template <int D> inline QuadRule<D> quadrature(int order) {
  QuadRule<D> q;
  if constexpr (D == 2) {
    if (order == 1) {
      q.xi = {{1.0 / 3, 1.0 / 3}};
      q.w = {0.5};
    } else if (order == 2) {
      q.xi = {{0.5, 0.0}, {0.5, 0.5}, {0.0, 0.5}};
      q.w = {1.0 / 6, 1.0 / 6, 1.0 / 6};
    } else if (order == 3) {
      // 6-point symmetric rule with positive weights (exact through degree 4)
      const real a = 0.445948490915965, b = 1 - 2 * a, wa = 0.223381589678011 / 2;
      const real c = 0.091576213509771, d = 1 - 2 * c, wc = 0.109951743655322 / 2;
      q.xi = {{a, a}, {a, b}, {b, a}, {c, c}, {c, d}, {d, c}};
      q.w = {wa, wa, wa, wc, wc, wc};
    } else {
      throw std::invalid_argument("quadrature: unsupported order " + std::to_string(order));
    }
  } else {
    if (order == 1) {
      q.xi = {{0.25, 0.25, 0.25}};
      q.w = {1.0 / 6};
    } else if (order == 2) {
      const real a = 0.13819660112501051, b = 1 - 3 * a;
      q.xi = {{b, a, a}, {a, b, a}, {a, a, b}, {a, a, a}};
      q.w = {1.0 / 24, 1.0 / 24, 1.0 / 24, 1.0 / 24};
    } else {
      throw std::invalid_argument("quadrature: unsupported order " + std::to_string(order) +
                                  " for tetrahedra");
    }
  }
  return q;
}

template <int D> inline std::array<real, D + 1> shape_values(const std::array<real, D>& xi) {
  std::array<real, D + 1> n;
  real s = 0;
  for (int i = 0; i < D; ++i) {
    n[i + 1] = xi[i];
    s += xi[i];
  }
  n[0] = 1 - s;
  return n;
}

template <int D> struct ShapeEval {
  std::array<real, D + 1> n;
  const std::array<Vec<D>, D + 1>* grad;  // physical gradients (element constant)
};

template <int D> inline ShapeEval<D> shape_eval(const ElementGeometry<D>& g, const std::array<real, D>& xi) {
  return {shape_values<D>(xi), &g.grad};
}

template <int D> inline Vec<D> map_to_physical(const ElementGeometry<D>& g, const std::array<real, D>& xi) {
  Vec<D> x = g.x0;
  for (int i = 0; i < D; ++i)
    for (int v = 0; v < D; ++v) x[i] += g.B(i, v) * xi[v];
  return x;
}

}  // namespace logmorph
