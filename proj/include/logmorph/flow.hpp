#pragma once

// Ambient velocity fields: analytic definitions (quiescent, simple shear,
// rigid rotation, a stirrer-like swirl) and file-backed nodal fields, with
// multiple-reference-frame (MRF) handling.
//
// MRF contract: inside a rotating zone the advective velocity is the
// frame-relative u - omega x r, while E and W keep the absolute-field
// values; a rigidly rotating zone is then exactly steady for an isotropic
// shape state.  The zone is decided per sample point for the analytic
// stirrer (r <= r_interface, so the advective jump sits on the circle and
// has no normal component), by element flag for file-backed fields, and is
// the whole domain when frame == rotating.  A staircase zone boundary made
// of flagged elements would give the jump a nonzero normal flux and feed a
// growing interface mode.

#include "field.hpp"
#include "morphology.hpp"

namespace logmorph {

enum class FlowKind { quiescent, simple_shear, rigid_rotation, mrf_stirrer, file };
enum class Frame { inertial, rotating };

template <int D> struct FlowSpec {
  FlowKind kind = FlowKind::quiescent;
  Frame frame = Frame::inertial;
  real gammadot = 0;         // simple_shear
  real omega = 0;            // rotation kinds and MRF zone spin [rad/s]
  Vec<D> center{};           // rotation center
  real r_interface = 0.375;  // mrf_stirrer rigid-zone radius
  real r_outer = 0.5;        // mrf_stirrer swirl decay radius
  std::string path;          // file kind
};

namespace detail {

// velocity and gradient (grad(i,j) = du_i/dx_j) of the analytic kinds
template <int D> inline void analytic_flow(const FlowSpec<D>& spec, const Vec<D>& x, Vec<D>& u, Mat<D>& grad) {
  u = Vec<D>{};
  grad = Mat<D>{};
  switch (spec.kind) {
    case FlowKind::quiescent:
      return;
    case FlowKind::simple_shear:
      u[0] = spec.gammadot * x[1];
      grad(0, 1) = spec.gammadot;
      return;
    case FlowKind::rigid_rotation: {
      const real rx = x[0] - spec.center[0], ry = x[1] - spec.center[1];
      u[0] = -spec.omega * ry;
      u[1] = spec.omega * rx;
      grad(0, 1) = -spec.omega;
      grad(1, 0) = spec.omega;
      return;
    }
    case FlowKind::mrf_stirrer: {
      if constexpr (D != 2) {
        throw std::invalid_argument("mrf_stirrer flow is 2D");
      } else {
        const real rx = x[0] - spec.center[0], ry = x[1] - spec.center[1];
        const real r = std::sqrt(rx * rx + ry * ry);
        const real ri = spec.r_interface, ro = spec.r_outer;
        if (r <= ri) {
          u[0] = -spec.omega * ry;
          u[1] = spec.omega * rx;
          grad(0, 1) = -spec.omega;
          grad(1, 0) = spec.omega;
          return;
        }
        if (r >= ro) return;
        // swirl u_theta = omega ri h(s), h = (1-s)^2 (1+as): C^1 match to the
        // rigid zone at s=0 (needs a = 2 + (ro-ri)/ri) and to rest at s=1
        const real a = 2.0 + (ro - ri) / ri;
        const real s = (r - ri) / (ro - ri);
        const real h = (1 - s) * (1 - s) * (1 + a * s);
        const real hp = -2 * (1 - s) * (1 + a * s) + (1 - s) * (1 - s) * a;
        const real ut = spec.omega * ri * h;
        const real utp = spec.omega * ri * hp / (ro - ri);
        const real what = ut / r;  // local angular rate
        const real whatp = (utp * r - ut) / (r * r);
        u[0] = -what * ry;
        u[1] = what * rx;
        grad(0, 0) = -whatp * rx * ry / r;
        grad(0, 1) = -what - whatp * ry * ry / r;
        grad(1, 0) = what + whatp * rx * rx / r;
        grad(1, 1) = whatp * rx * ry / r;
        return;
      }
    }
    case FlowKind::file:
      throw std::invalid_argument("file-backed flow needs an AmbientFlow with ingested data");
  }
}

template <int D> inline KinematicsSample<D> kinematics_from(const FlowSpec<D>& spec, const Vec<D>& x,
                                                            const Vec<D>& u, const Mat<D>& grad, bool mrf_flag,
                                                            real omega_scale) {
  KinematicsSample<D> k;
  k.u = u;
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j) k.E.at(i, j) = 0.5 * (grad(i, j) + grad(j, i));
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j) k.W.at(i, j) = 0.5 * (grad(i, j) - grad(j, i));
  const real rx = x[0] - spec.center[0], ry = x[1] - spec.center[1];
  bool in_zone = mrf_flag;
  if (spec.kind == FlowKind::mrf_stirrer)
    in_zone = rx * rx + ry * ry <= spec.r_interface * spec.r_interface;
  if ((in_zone || spec.frame == Frame::rotating) && spec.omega != 0) {
    const real w = omega_scale * spec.omega;
    k.u[0] += w * ry;
    k.u[1] -= w * rx;
  }
  return k;
}

}  // namespace detail

// Kinematics of an analytic flow at a point.
template <int D> inline KinematicsSample<D> sample(const FlowSpec<D>& spec, const Vec<D>& x, bool mrf_flag,
                                                   real omega_scale = 1.0) {
  Vec<D> u;
  Mat<D> grad;
  detail::analytic_flow(spec, x, u, grad);
  u = omega_scale * u;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) grad(i, j) *= omega_scale;
  return detail::kinematics_from(spec, x, u, grad, mrf_flag, omega_scale);
}

// File-backed nodal velocity with element-constant gradients (exact for the
// linear interpolant).
template <int D> struct FileFlow {
  std::vector<Vec<D>> u;
  std::vector<Mat<D>> grad;
  real max_div = 0;  // data-quality report: max |tr grad| over elements
};

template <int D> inline FileFlow<D> ingest_flow(const std::string& path, const Mesh<D>& m) {
  const Field f = load_field<D>(path, m);
  if (f.comps != D) throw std::runtime_error("flow file must have " + std::to_string(D) + " velocity columns");
  FileFlow<D> ff;
  ff.u.resize(m.n_nodes());
  for (int i = 0; i < m.n_nodes(); ++i)
    for (int d = 0; d < D; ++d) ff.u[i][d] = f.node(i)[d];
  ff.grad.resize(m.n_elems());
  for (int e = 0; e < m.n_elems(); ++e) {
    const ElementGeometry<D> g = element_metric(m, e);
    Mat<D> gr{};
    for (int v = 0; v <= D; ++v) {
      const Vec<D>& uv = ff.u[m.elems[e][v]];
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) gr(i, j) += uv[i] * g.grad[v][j];
    }
    ff.grad[e] = gr;
    real div = 0;
    for (int i = 0; i < D; ++i) div += gr(i, i);
    ff.max_div = std::max(ff.max_div, std::abs(div));
  }
  return ff;
}

// Unified handle used by assembly; omega_scale carries the startup ramp.
template <int D> struct AmbientFlow {
  FlowSpec<D> spec;
  const Mesh<D>* mesh = nullptr;  // required for file kind
  FileFlow<D> file;
  real omega_scale = 1.0;

  KinematicsSample<D> at_element(int e, const std::array<real, D + 1>& n, const Vec<D>& x,
                                 bool mrf_flag) const {
    if (spec.kind != FlowKind::file) return sample(spec, x, mrf_flag, omega_scale);
    Vec<D> u{};
    for (int v = 0; v <= D; ++v) u += n[v] * file.u[mesh->elems[e][v]];
    Mat<D> grad = file.grad[e];
    u = omega_scale * u;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) grad(i, j) *= omega_scale;
    return detail::kinematics_from(spec, x, u, grad, mrf_flag, omega_scale);
  }
};

}  // namespace logmorph
