#pragma once

// Incomplete LU with dual thresholding (per-row fill cap and relative drop
// tolerance), preceded by row/column max equilibration.  Zero or tiny pivots
// are floored sign-preservingly and counted instead of aborting.

#include <cmath>
#include <cstdint>

#include "sparse.hpp"

namespace logmorph {

struct IlutConfig {
  int fill = 20;      // extra entries kept per row in each of L and U
  real droptol = 1e-4;
  real pivot_floor = 1e-12;  // relative to the row max of U candidates
};

struct IlutPrecond {
  int n = 0;
  std::vector<real> rscale, cscale;     // equilibration of the input matrix
  std::vector<std::vector<int>> lcol, ucol;
  std::vector<std::vector<real>> lval, uval;  // L unit-diagonal (diag not stored)
  std::vector<real> udiag;
  int floored_pivots = 0;

  // y = M^-1 v
  void apply(const std::vector<real>& v, std::vector<real>& y) const {
    y.resize(n);
    for (int i = 0; i < n; ++i) y[i] = v[i] * rscale[i];
    for (int i = 0; i < n; ++i) {
      real s = y[i];
      const auto& jc = lcol[i];
      const auto& jv = lval[i];
      for (size_t k = 0; k < jc.size(); ++k) s -= jv[k] * y[jc[k]];
      y[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
      real s = y[i];
      const auto& jc = ucol[i];
      const auto& jv = uval[i];
      for (size_t k = 0; k < jc.size(); ++k) s -= jv[k] * y[jc[k]];
      y[i] = s / udiag[i];
    }
    for (int i = 0; i < n; ++i) y[i] *= cscale[i];
  }
};

inline IlutPrecond ilut_factor(const CsrMatrix& a, const IlutConfig& cfg = {}) {
  IlutPrecond m;
  const int n = a.n;
  m.n = n;

  // max-norm equilibration: rows of A, then columns of the row-scaled matrix
  m.rscale.assign(n, 1.0);
  m.cscale.assign(n, 1.0);
  for (int i = 0; i < n; ++i) {
    real mx = 0;
    for (int k = a.ptr[i]; k < a.ptr[i + 1]; ++k) mx = std::max(mx, std::abs(a.val[k]));
    if (mx > 0) m.rscale[i] = 1.0 / mx;
  }
  std::vector<real> cmax(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = a.ptr[i]; k < a.ptr[i + 1]; ++k)
      cmax[a.col[k]] = std::max(cmax[a.col[k]], std::abs(a.val[k]) * m.rscale[i]);
  for (int j = 0; j < n; ++j)
    if (cmax[j] > 0) m.cscale[j] = 1.0 / cmax[j];

  m.lcol.resize(n);
  m.lval.resize(n);
  m.ucol.resize(n);
  m.uval.resize(n);
  m.udiag.assign(n, 1.0);

  std::vector<real> w(n, 0.0);     // dense work row
  std::vector<int> nz;             // its nonzero positions
  std::vector<char> marked(n, 0);

  for (int i = 0; i < n; ++i) {
    nz.clear();
    real rownorm = 0;
    for (int k = a.ptr[i]; k < a.ptr[i + 1]; ++k) {
      const int j = a.col[k];
      const real v = a.val[k] * m.rscale[i] * m.cscale[j];
      w[j] = v;
      marked[j] = 1;
      nz.push_back(j);
      rownorm += v * v;
    }
    rownorm = std::sqrt(rownorm);
    const real drop = cfg.droptol * rownorm;

    // eliminate against previous rows in column order
    std::sort(nz.begin(), nz.end());
    for (size_t p = 0; p < nz.size(); ++p) {
      const int k = nz[p];
      if (k >= i) break;
      real lik = w[k] / m.udiag[k];
      if (std::abs(lik) < drop) {
        w[k] = 0;
        continue;
      }
      w[k] = lik;
      const auto& jc = m.ucol[k];
      const auto& jv = m.uval[k];
      for (size_t q = 0; q < jc.size(); ++q) {
        const int j = jc[q];
        const real upd = lik * jv[q];
        if (!marked[j]) {
          if (std::abs(upd) < drop) continue;  // do not create tiny fill
          marked[j] = 1;
          // keep nz sorted past the current position
          nz.insert(std::upper_bound(nz.begin() + p + 1, nz.end(), j), j);
          w[j] = 0;
        }
        w[j] -= upd;
      }
    }

    // split, drop, and cap fill
    std::vector<std::pair<real, int>> lpart, upart;
    real diag = 0;
    for (int j : nz) {
      const real v = w[j];
      if (j < i) {
        if (std::abs(v) >= drop) lpart.push_back({std::abs(v), j});
      } else if (j == i) {
        diag = v;
      } else {
        if (std::abs(v) >= drop) upart.push_back({std::abs(v), j});
      }
    }
    auto keep_largest = [](std::vector<std::pair<real, int>>& part, int cap) {
      if (int(part.size()) > cap) {
        std::nth_element(part.begin(), part.begin() + cap, part.end(),
                         [](const auto& x, const auto& y) { return x.first > y.first; });
        part.resize(cap);
      }
      std::sort(part.begin(), part.end(),
                [](const auto& x, const auto& y) { return x.second < y.second; });
    };
    keep_largest(lpart, cfg.fill);
    keep_largest(upart, cfg.fill);

    for (auto& [av, j] : lpart) {
      m.lcol[i].push_back(j);
      m.lval[i].push_back(w[j]);
    }
    for (auto& [av, j] : upart) {
      m.ucol[i].push_back(j);
      m.uval[i].push_back(w[j]);
    }
    real floor_ref = std::abs(diag);
    for (auto& [av, j] : upart) floor_ref = std::max(floor_ref, av);
    const real floor_val = cfg.pivot_floor * (floor_ref > 0 ? floor_ref : 1.0);
    if (std::abs(diag) < floor_val) {
      diag = (diag < 0 ? -floor_val : floor_val);
      ++m.floored_pivots;
    }
    m.udiag[i] = diag;

    for (int j : nz) {
      w[j] = 0;
      marked[j] = 0;
    }
  }
  return m;
}

}  // namespace logmorph
