#pragma once

// Simplex meshes (triangles in 2D, tetrahedra in 3D) with boundary facet
// tags and per-element rotating-zone flags, plus a plain-text file format.
//
//   morphmesh 1
//   dim 2
//   nodes <N>
//   <id> <x> <y>            one line per node, ids 0..N-1 in order
//   elems <M>
//   <id> <n0> <n1> <n2>     vertex indices
//   bfacets <K>
//   <id> <n0> <n1> <tag>    boundary facets with integer tags
//   mrf <M>                 optional section, one flag per element
//   <id> <0|1>
//
// Numbers are written with %.17g so a save/load round trip is bitwise exact.

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace logmorph {

template <int D> struct Mesh {
  std::vector<Vec<D>> nodes;
  std::vector<std::array<int, D + 1>> elems;
  std::vector<std::array<int, D>> bfacets;
  std::vector<int> bfacet_tag;
  std::vector<unsigned char> elem_mrf;  // empty means all zero

  int n_nodes() const { return int(nodes.size()); }
  int n_elems() const { return int(elems.size()); }
  bool mrf(int e) const { return !elem_mrf.empty() && elem_mrf[e] != 0; }
};

namespace detail {

inline std::string fmt_real(real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct LineReader {
  std::istream& in;
  int lineno = 0;
  std::string cur;
  bool next() {
    while (std::getline(in, cur)) {
      ++lineno;
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      if (!cur.empty()) return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("mesh parse error at line " + std::to_string(lineno) + ": " + what);
  }
};

}  // namespace detail

template <int D> inline void save_mesh(const std::string& path, const Mesh<D>& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "morphmesh 1\n";
  out << "dim " << D << "\n";
  out << "nodes " << m.nodes.size() << "\n";
  for (size_t i = 0; i < m.nodes.size(); ++i) {
    out << i;
    for (int d = 0; d < D; ++d) out << ' ' << detail::fmt_real(m.nodes[i][d]);
    out << "\n";
  }
  out << "elems " << m.elems.size() << "\n";
  for (size_t e = 0; e < m.elems.size(); ++e) {
    out << e;
    for (int v = 0; v <= D; ++v) out << ' ' << m.elems[e][v];
    out << "\n";
  }
  out << "bfacets " << m.bfacets.size() << "\n";
  for (size_t f = 0; f < m.bfacets.size(); ++f) {
    out << f;
    for (int v = 0; v < D; ++v) out << ' ' << m.bfacets[f][v];
    out << ' ' << m.bfacet_tag[f] << "\n";
  }
  if (!m.elem_mrf.empty()) {
    out << "mrf " << m.elem_mrf.size() << "\n";
    for (size_t e = 0; e < m.elem_mrf.size(); ++e) out << e << ' ' << int(m.elem_mrf[e]) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

template <int D> inline Mesh<D> load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path);
  detail::LineReader rd{in};
  if (!rd.next() || rd.cur != "morphmesh 1") {
    if (rd.lineno == 0) rd.lineno = 1;
    rd.fail("bad magic, expected 'morphmesh 1'");
  }
  Mesh<D> m;
  auto expect_count = [&](const char* key) -> long {
    if (!rd.next()) rd.fail(std::string("unexpected end of file, expected '") + key + "'");
    std::istringstream ss(rd.cur);
    std::string k;
    long n = -1;
    if (!(ss >> k >> n) || k != key || n < 0) rd.fail(std::string("expected '") + key + " <count>'");
    return n;
  };
  {
    const long d = expect_count("dim");
    if (d != D) rd.fail("dimension mismatch: file has " + std::to_string(d) + ", expected " + std::to_string(D));
  }
  const long nn = expect_count("nodes");
  m.nodes.resize(nn);
  for (long i = 0; i < nn; ++i) {
    if (!rd.next()) rd.fail("unexpected end of file in nodes");
    std::istringstream ss(rd.cur);
    long id;
    Vec<D> x;
    if (!(ss >> id) || id != i) rd.fail("bad node id, expected " + std::to_string(i));
    for (int d = 0; d < D; ++d)
      if (!(ss >> x[d])) rd.fail("bad node coordinates");
    m.nodes[i] = x;
  }
  const long ne = expect_count("elems");
  m.elems.resize(ne);
  for (long e = 0; e < ne; ++e) {
    if (!rd.next()) rd.fail("unexpected end of file in elems");
    std::istringstream ss(rd.cur);
    long id;
    if (!(ss >> id) || id != e) rd.fail("bad element id, expected " + std::to_string(e));
    for (int v = 0; v <= D; ++v) {
      long n;
      if (!(ss >> n) || n < 0 || n >= nn) rd.fail("bad element connectivity");
      m.elems[e][v] = int(n);
    }
  }
  const long nf = expect_count("bfacets");
  m.bfacets.resize(nf);
  m.bfacet_tag.resize(nf);
  for (long f = 0; f < nf; ++f) {
    if (!rd.next()) rd.fail("unexpected end of file in bfacets");
    std::istringstream ss(rd.cur);
    long id, tag;
    if (!(ss >> id) || id != f) rd.fail("bad facet id, expected " + std::to_string(f));
    for (int v = 0; v < D; ++v) {
      long n;
      if (!(ss >> n) || n < 0 || n >= nn) rd.fail("bad facet connectivity");
      m.bfacets[f][v] = int(n);
    }
    if (!(ss >> tag)) rd.fail("missing facet tag");
    m.bfacet_tag[f] = int(tag);
  }
  if (rd.next()) {
    std::istringstream ss(rd.cur);
    std::string k;
    long n;
    if (!(ss >> k >> n) || k != "mrf" || n != ne) rd.fail("expected 'mrf <elem count>'");
    m.elem_mrf.resize(ne);
    for (long e = 0; e < ne; ++e) {
      if (!rd.next()) rd.fail("unexpected end of file in mrf flags");
      std::istringstream ls(rd.cur);
      long id, flag;
      if (!(ls >> id >> flag) || id != e || (flag != 0 && flag != 1)) rd.fail("bad mrf flag line");
      m.elem_mrf[e] = (unsigned char)flag;
    }
  }
  return m;
}

// Structured square mesh of [-0.5,0.5]^2 with an axis-aligned beam cut-out
// around the center and rotating-zone flags inside r_interface: a small
// stand-in for the stirred-vessel geometry.  n is the node count per side;
// cells whose center lies in the beam rectangle are removed, so the beam
// boundary is approximated by grid-aligned tagged facets (tag 2, outer
// boundary tag 1).
inline Mesh<2> gen_mini_stirrer(int n = 45, real r_interface = 0.375, real beam_halfw = 0.05,
                                real beam_halfl = 0.25) {
  if (n < 4) throw std::invalid_argument("gen_mini_stirrer: n too small");
  const int nc = n - 1;  // cells per side
  const real h = 1.0 / nc;
  auto coord = [&](int i) { return -0.5 + i * h; };
  auto nid = [&](int i, int j) { return j * n + i; };

  std::vector<char> cell_keep(nc * nc, 1);
  for (int j = 0; j < nc; ++j)
    for (int i = 0; i < nc; ++i) {
      const real cx = coord(i) + 0.5 * h, cy = coord(j) + 0.5 * h;
      if (std::abs(cx) < beam_halfw && std::abs(cy) < beam_halfl) cell_keep[j * nc + i] = 0;
    }

  Mesh<2> m;
  std::vector<int> remap(n * n, -1);
  std::vector<std::array<int, 3>> tris;
  for (int j = 0; j < nc; ++j)
    for (int i = 0; i < nc; ++i) {
      if (!cell_keep[j * nc + i]) continue;
      const int a = nid(i, j), b = nid(i + 1, j), c = nid(i + 1, j + 1), d = nid(i, j + 1);
      if ((i + j) % 2 == 0) {
        tris.push_back({a, b, c});
        tris.push_back({a, c, d});
      } else {
        tris.push_back({a, b, d});
        tris.push_back({b, c, d});
      }
    }
  for (const auto& t : tris)
    for (int v : t)
      if (remap[v] < 0) {
        remap[v] = int(m.nodes.size());
        Vec<2> p;
        p[0] = coord(v % n);
        p[1] = coord(v / n);
        m.nodes.push_back(p);
      }
  m.elems.reserve(tris.size());
  for (auto t : tris) m.elems.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});

  // boundary facets: edges referenced by exactly one triangle
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : m.elems)
    for (int v = 0; v < 3; ++v) {
      int p = t[v], q = t[(v + 1) % 3];
      if (p > q) std::swap(p, q);
      ++edge_count[{p, q}];
    }
  for (const auto& [e, cnt] : edge_count) {
    if (cnt != 1) continue;
    auto on_outer = [&](int v) {
      const auto& x = m.nodes[v];
      return std::abs(std::abs(x[0]) - 0.5) < 1e-12 || std::abs(std::abs(x[1]) - 0.5) < 1e-12;
    };
    m.bfacets.push_back({e.first, e.second});
    m.bfacet_tag.push_back(on_outer(e.first) && on_outer(e.second) ? 1 : 2);
  }

  m.elem_mrf.resize(m.elems.size());
  for (size_t e = 0; e < m.elems.size(); ++e) {
    Vec<2> c{};
    for (int v = 0; v < 3; ++v) c += m.nodes[m.elems[e][v]];
    c = (1.0 / 3.0) * c;
    m.elem_mrf[e] = (norm(c) < r_interface) ? 1 : 0;
  }
  return m;
}

}  // namespace logmorph
