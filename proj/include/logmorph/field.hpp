#pragma once

// Nodal fields over a mesh, CSV input/output, and line sampling.
// Field CSV schema: header row, then one row per node,
//   node_id,x,y[,z],<component columns>
// with packed tensor component order (xx,xy,yy in 2D).  Values are written
// with %.17g so round trips are bitwise exact.

#include <fstream>
#include <sstream>

#include "fem.hpp"

namespace logmorph {

// Node-major packed storage: comps values per node.
struct Field {
  int comps = 1;
  std::vector<real> v;

  int n_nodes() const { return comps ? int(v.size()) / comps : 0; }
  real* node(int i) { return &v[size_t(i) * comps]; }
  const real* node(int i) const { return &v[size_t(i) * comps]; }
};

template <int D> inline Field make_sym_field(int n_nodes) {
  Field f;
  f.comps = sym_comps<D>;
  f.v.assign(size_t(n_nodes) * f.comps, 0.0);
  return f;
}

template <int D> inline SymTensor<D> get_sym(const Field& f, int node) {
  SymTensor<D> t;
  for (int c = 0; c < sym_comps<D>; ++c) t[c] = f.node(node)[c];
  return t;
}

template <int D> inline void set_sym(Field& f, int node, const SymTensor<D>& t) {
  for (int c = 0; c < sym_comps<D>; ++c) f.node(node)[c] = t[c];
}

template <int D> inline std::string sym_comp_names() {
  if constexpr (D == 2) return "xx,xy,yy";
  else return "xx,xy,xz,yy,yz,zz";
}

template <int D> inline void save_field(const std::string& path, const Mesh<D>& m, const Field& f,
                                        const std::string& comp_names = "") {
  if (f.n_nodes() != m.n_nodes()) throw std::runtime_error("save_field: field/mesh node count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  std::string names = comp_names;
  if (names.empty()) {
    if (f.comps == 1) names = "value";
    else if (f.comps == sym_comps<D>) names = sym_comp_names<D>();
    else {
      for (int c = 0; c < f.comps; ++c) names += (c ? ",c" : "c") + std::to_string(c);
    }
  }
  out << "node_id,x,y" << (D == 3 ? ",z" : "") << ',' << names << "\n";
  for (int i = 0; i < m.n_nodes(); ++i) {
    out << i;
    for (int d = 0; d < D; ++d) out << ',' << detail::fmt_real(m.nodes[i][d]);
    for (int c = 0; c < f.comps; ++c) out << ',' << detail::fmt_real(f.node(i)[c]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

template <int D> inline Field load_field(const std::string& path, const Mesh<D>& m) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open field file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("field file empty: " + path);
  int ncols = 1;
  for (char ch : line)
    if (ch == ',') ++ncols;
  const int comps = ncols - 1 - D;  // columns minus id and coordinates
  if (comps < 1) throw std::runtime_error("field file has too few columns: " + path);
  Field f;
  f.comps = comps;
  f.v.assign(size_t(m.n_nodes()) * comps, 0.0);
  int lineno = 1;
  for (int i = 0; i < m.n_nodes(); ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("field file truncated at line " + std::to_string(lineno + 1));
    ++lineno;
    std::istringstream ss(line);
    std::string tok;
    auto next = [&]() {
      if (!std::getline(ss, tok, ',')) throw std::runtime_error("field parse error at line " + std::to_string(lineno));
      return tok;
    };
    if (std::stol(next()) != i) throw std::runtime_error("field node id mismatch at line " + std::to_string(lineno));
    for (int d = 0; d < D; ++d) next();  // coordinates re-derivable from the mesh
    for (int c = 0; c < comps; ++c) f.node(i)[c] = std::stod(next());
  }
  return f;
}

template <int D> using RefCoords = std::array<real, std::size_t(D)>;

// Locates the element containing x (barycentric tolerance tol); returns
// element id and fills the reference coordinates.
template <int D> inline int find_element(const Mesh<D>& m, const Vec<D>& x, RefCoords<D>& xi,
                                         real tol = 1e-10) {
  int best = -1;
  real best_viol = 1e300;
  for (int e = 0; e < m.n_elems(); ++e) {
    const ElementGeometry<D> g = element_metric(m, e);
    const Vec<D> d = x - g.x0;
    std::array<real, D> r;
    real s = 0, viol = 0;
    for (int i = 0; i < D; ++i) {
      r[i] = 0;
      for (int j = 0; j < D; ++j) r[i] += g.Binv(i, j) * d[j];
      s += r[i];
      viol = std::max(viol, -r[i]);
    }
    viol = std::max(viol, s - 1);
    if (viol <= tol) {
      xi = r;
      return e;
    }
    if (viol < best_viol) {
      best_viol = viol;
      best = e;
      xi = r;
    }
  }
  if (best_viol <= 1e-6) return best;  // on a facet up to roundoff
  std::ostringstream os;
  os << "point outside mesh: (";
  for (int d = 0; d < D; ++d) os << (d ? "," : "") << x[d];
  os << ")";
  throw std::runtime_error(os.str());
}

// n+1 equally spaced samples of a nodal field on the segment p0..p1, linear
// interpolation within elements.  Rows are (arclength, components...).
template <int D> inline std::vector<std::vector<real>> line_sample(const Mesh<D>& m, const Field& f,
                                                                   const Vec<D>& p0, const Vec<D>& p1, int n) {
  if (n < 1) throw std::invalid_argument("line_sample: need n >= 1");
  std::vector<std::vector<real>> rows;
  const Vec<D> dx = p1 - p0;
  const real len = norm(dx);
  for (int k = 0; k <= n; ++k) {
    const real t = real(k) / n;
    const Vec<D> x = p0 + t * dx;
    std::array<real, D> xi;
    const int e = find_element(m, x, xi);
    const auto nv = shape_values<D>(xi);
    std::vector<real> row(1 + f.comps, 0.0);
    row[0] = t * len;
    for (int v = 0; v <= D; ++v) {
      const real* nd = f.node(m.elems[e][v]);
      for (int c = 0; c < f.comps; ++c) row[1 + c] += nv[v] * nd[c];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void save_csv(const std::string& path, const std::string& header,
                     const std::vector<std::vector<real>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << header << "\n";
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << detail::fmt_real(r[i]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace logmorph
