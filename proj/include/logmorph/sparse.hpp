#pragma once

// Compressed sparse row matrices over the node-major dof layout
// (dof = node * comps + comp), with a per-element scatter index cache so
// repeated assemblies avoid the column search.

#include <algorithm>
#include <vector>

#include "mesh.hpp"

namespace logmorph {

struct CsrMatrix {
  int n = 0;
  std::vector<int> ptr;  // size n+1
  std::vector<int> col;
  std::vector<real> val;

  void zero() { std::fill(val.begin(), val.end(), 0.0); }

  int find(int i, int j) const {
    const int lo = ptr[i], hi = ptr[i + 1];
    const auto it = std::lower_bound(col.begin() + lo, col.begin() + hi, j);
    if (it == col.begin() + hi || *it != j) return -1;
    return int(it - col.begin());
  }
};

inline void matvec(const CsrMatrix& a, const std::vector<real>& x, std::vector<real>& y) {
  y.assign(a.n, 0.0);
  for (int i = 0; i < a.n; ++i) {
    real s = 0;
    for (int k = a.ptr[i]; k < a.ptr[i + 1]; ++k) s += a.val[k] * x[a.col[k]];
    y[i] = s;
  }
}

// CSR pattern from mesh connectivity: nodes couple within every shared
// element, each coupling a dense comps x comps block.
template <int D> inline CsrMatrix build_pattern(const Mesh<D>& m, int comps) {
  const int nn = int(m.n_nodes());
  std::vector<std::vector<int>> adj(nn);
  for (const auto& el : m.elems)
    for (int a = 0; a <= D; ++a)
      for (int b = 0; b <= D; ++b) adj[el[a]].push_back(el[b]);
  for (int i = 0; i < nn; ++i) {
    adj[i].push_back(i);
    std::sort(adj[i].begin(), adj[i].end());
    adj[i].erase(std::unique(adj[i].begin(), adj[i].end()), adj[i].end());
  }
  CsrMatrix a;
  a.n = nn * comps;
  a.ptr.assign(a.n + 1, 0);
  for (int i = 0; i < nn; ++i)
    for (int c = 0; c < comps; ++c) a.ptr[i * comps + c + 1] = int(adj[i].size()) * comps;
  for (int r = 0; r < a.n; ++r) a.ptr[r + 1] += a.ptr[r];
  a.col.resize(a.ptr[a.n]);
  a.val.assign(a.ptr[a.n], 0.0);
  for (int i = 0; i < nn; ++i)
    for (int c = 0; c < comps; ++c) {
      int k = a.ptr[i * comps + c];
      for (int j : adj[i])
        for (int cc = 0; cc < comps; ++cc) a.col[k++] = j * comps + cc;
    }
  return a;
}

// entry indices for one element's dense block, row-major over
// (node a, comp c, node b, comp cc)
template <int D> inline std::vector<int> element_scatter(const CsrMatrix& a, const Mesh<D>& m, int e,
                                                         int comps) {
  const int nn = D + 1;
  std::vector<int> map(size_t(nn) * comps * nn * comps);
  size_t k = 0;
  for (int av = 0; av < nn; ++av)
    for (int c = 0; c < comps; ++c)
      for (int bv = 0; bv < nn; ++bv)
        for (int cc = 0; cc < comps; ++cc) {
          const int idx = a.find(m.elems[e][av] * comps + c, m.elems[e][bv] * comps + cc);
          if (idx < 0) throw std::logic_error("element_scatter: pattern missing an element coupling");
          map[k++] = idx;
        }
  return map;
}

inline real norm2(const std::vector<real>& v) {
  real s = 0;
  for (real x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace logmorph
