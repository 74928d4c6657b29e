#pragma once

// Right-preconditioned restarted GMRES.  Right preconditioning keeps the
// monitored residual equal to the true residual of the original system, so
// the stopping test needs no back-substitution.

#include <functional>
#include <vector>

#include "sparse.hpp"

namespace logmorph {

struct GmresConfig {
  int restart = 10;
  real rtol = 1e-3;
  int max_iters = 400;  // total matvec budget across restarts
};

struct GmresResult {
  int iters = 0;
  real rel_residual = 1.0;
  bool converged = false;
};

template <class MatVec, class Precond>
inline GmresResult gmres_solve(int n, MatVec&& amul, Precond&& pre, const std::vector<real>& b,
                               std::vector<real>& x, const GmresConfig& cfg = {}) {
  GmresResult res;
  const real bnorm = norm2(b);
  if (bnorm == 0) {
    x.assign(n, 0.0);
    res.converged = true;
    res.rel_residual = 0.0;
    return res;
  }
  if (int(x.size()) != n) x.assign(n, 0.0);

  const int m = cfg.restart;
  std::vector<std::vector<real>> v(m + 1, std::vector<real>(n));
  std::vector<std::vector<real>> h(m + 1, std::vector<real>(m, 0.0));
  std::vector<real> cs(m), sn(m), g(m + 1), z(n), t(n);

  while (res.iters < cfg.max_iters) {
    // r = b - A x
    amul(x, t);
    for (int i = 0; i < n; ++i) v[0][i] = b[i] - t[i];
    real beta = norm2(v[0]);
    res.rel_residual = beta / bnorm;
    if (res.rel_residual <= cfg.rtol) {
      res.converged = true;
      return res;
    }
    for (int i = 0; i < n; ++i) v[0][i] /= beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;

    int k = 0;
    for (; k < m && res.iters < cfg.max_iters; ++k) {
      ++res.iters;
      pre(v[k], z);
      amul(z, v[k + 1]);
      // modified Gram-Schmidt
      for (int j = 0; j <= k; ++j) {
        real hj = 0;
        for (int i = 0; i < n; ++i) hj += v[k + 1][i] * v[j][i];
        h[j][k] = hj;
        for (int i = 0; i < n; ++i) v[k + 1][i] -= hj * v[j][i];
      }
      real hk1 = norm2(v[k + 1]);
      h[k + 1][k] = hk1;
      if (hk1 > 0)
        for (int i = 0; i < n; ++i) v[k + 1][i] /= hk1;

      // apply stored rotations, then the new one
      for (int j = 0; j < k; ++j) {
        const real tmp = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
        h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
        h[j][k] = tmp;
      }
      const real denom = std::sqrt(h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]);
      if (denom == 0) {
        cs[k] = 1;
        sn[k] = 0;
      } else {
        cs[k] = h[k][k] / denom;
        sn[k] = h[k + 1][k] / denom;
      }
      h[k][k] = cs[k] * h[k][k] + sn[k] * h[k + 1][k];
      h[k + 1][k] = 0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];

      if (std::abs(g[k + 1]) / bnorm <= cfg.rtol) {
        ++k;
        break;
      }
    }

    // y from the k x k triangular system, then x += M^-1 (V y)
    std::vector<real> y(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
      real s = g[i];
      for (int j = i + 1; j < k; ++j) s -= h[i][j] * y[j];
      y[i] = (h[i][i] != 0) ? s / h[i][i] : 0.0;
    }
    std::fill(t.begin(), t.end(), 0.0);
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < n; ++i) t[i] += y[j] * v[j][i];
    pre(t, z);
    for (int i = 0; i < n; ++i) x[i] += z[i];

    if (k == 0) break;  // stagnated with no progress possible
  }

  amul(x, t);
  real rn = 0;
  for (int i = 0; i < n; ++i) {
    const real d = b[i] - t[i];
    rn += d * d;
  }
  res.rel_residual = std::sqrt(rn) / bnorm;
  res.converged = res.rel_residual <= cfg.rtol;
  return res;
}

}  // namespace logmorph
