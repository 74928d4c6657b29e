#pragma once

// Global semi-discrete system and its time integrator: BDF2 (BDF1 on the
// first step), each step solved by damped Newton-Raphson with restarted
// GMRES on the ILUT-preconditioned assembled Jacobian.

#include <cstdio>
#include <functional>
#include <ostream>
#include <string>

#include "flow.hpp"
#include "gmres.hpp"
#include "ilut.hpp"
#include "sparse.hpp"
#include "stabilization.hpp"

namespace logmorph {

struct SolverConfig {
  real dt = 0.01;
  real t_end = 1.0;
  int bdf_order = 2;
  real nr_tol = 1e-10;
  int nr_max = 12;
  int krylov_dim = 10;
  real gmres_rtol = 1e-3;
  int gmres_max = 400;
  IlutConfig ilut;
  int ramp_steps = 0;   // rotation ramped over this many steps, 0 = off
  bool strict = false;  // stop the run on an unconverged step
};

inline void validate(const SolverConfig& c) {
  if (!(c.dt > 0)) throw std::invalid_argument("solver: dt must be > 0");
  if (!(c.t_end >= 0)) throw std::invalid_argument("solver: t_end must be >= 0");
  if (!(c.nr_tol > 0)) throw std::invalid_argument("solver: nr_tol must be > 0");
  if (c.nr_max < 1) throw std::invalid_argument("solver: nr_max must be >= 1");
  if (c.krylov_dim < 1) throw std::invalid_argument("solver: krylov_dim must be >= 1");
  if (c.bdf_order < 1 || c.bdf_order > 2) throw std::invalid_argument("solver: bdf_order must be 1 or 2");
}

// C1 startup profile: 0 at i=0, full speed at i=1
inline real ramp_scale(real i) {
  if (i <= 0) return 0;
  if (i >= 1) return 1;
  return i * i * (3 - 2 * i);
}

inline real ramp_omega(real i, real omega_full) { return omega_full * ramp_scale(i); }

struct StepStats {
  int newton_iters = 0;
  int gmres_iters = 0;
  real final_residual = 0;
  bool converged = false;
  bool pd_fail = false;
};

struct RunMetrics {
  long n_gmres_total = 0;
  long n_nr_total = 0;
  real eps_det = 0;      // sqrt(sum over nodes of (det S_i - 1)^2), final state
  real max_det_dev = 0;  // max over nodes of |det S_i - 1|, final state
  int n_steps = 0;
  int n_unconverged = 0;
  bool diverged = false;  // positive-definiteness loss or strict-mode stop
  std::vector<unsigned char> step_converged;
};

// det from e^{tr Psi} in the log form, det(S) in the untransformed form;
// fixed summation order so the metric is reproducible bit for bit
template <int D>
inline void det_metrics(const std::vector<real>& y, bool log_form, real& eps_det, real& max_dev) {
  constexpr int nc = sym_comps<D>;
  const int nn = int(y.size()) / nc;
  real acc = 0;
  max_dev = 0;
  for (int i = 0; i < nn; ++i) {
    SymTensor<D> s;
    for (int c = 0; c < nc; ++c) s[c] = y[i * nc + c];
    const real dv = (log_form ? std::exp(trace(s)) : det(s)) - 1.0;
    acc += dv * dv;
    max_dev = std::max(max_dev, std::abs(dv));
  }
  eps_det = std::sqrt(acc);
}

template <int D> struct FEMSystem {
  static constexpr int nc = sym_comps<D>;

  const Mesh<D>* mesh = nullptr;
  AmbientFlow<D> flow;
  StabConfig stab;
  ModelParams p;
  GuardThresholds guards;
  int quad_order = 2;

  QuadRule<D> quad;
  std::vector<ElementGeometry<D>> geom;
  CsrMatrix mat;
  std::vector<std::vector<int>> scatter;
  std::vector<real> tau_e;  // frozen per Newton iteration

  bool log_form() const { return stab.scheme != Scheme::gls_morph; }
  int n_dofs() const { return mesh->n_nodes() * nc; }

  void setup() {
    validate(stab);
    quad = quadrature<D>(quad_order);
    const int ne = mesh->n_elems();
    geom.clear();
    geom.reserve(ne);
    for (int e = 0; e < ne; ++e) geom.push_back(element_metric(*mesh, e));
    mat = build_pattern<D>(*mesh, nc);
    scatter.resize(ne);
    for (int e = 0; e < ne; ++e) scatter[e] = element_scatter<D>(mat, *mesh, e, nc);
    tau_e.assign(ne, 0.0);
    if (flow.spec.kind == FlowKind::file) flow.mesh = mesh;
  }

  void gather(const std::vector<real>& v, int e, std::array<SymTensor<D>, D + 1>& out) const {
    for (int a = 0; a <= D; ++a) {
      const int base = mesh->elems[e][a] * nc;
      for (int c = 0; c < nc; ++c) out[a][c] = v[base + c];
    }
  }

  // per-iteration frozen time scale from the element-mean linearization
  // state and centroid kinematics
  void refresh_tau(const std::vector<real>& ylin, real dt) {
    std::array<real, D + 1> nctr;
    nctr.fill(1.0 / (D + 1));
    ElementInputs<D> in;
    in.p = p;
    in.g = guards;
    for (int e = 0; e < mesh->n_elems(); ++e) {
      in.geom = &geom[e];
      gather(ylin, e, in.ylin);
      Vec<D> xc{};
      for (int v = 0; v <= D; ++v) xc += nctr[v] * mesh->nodes[mesh->elems[e][v]];
      const KinematicsSample<D> kin = flow.at_element(e, nctr, xc, mesh->mrf(e));
      tau_e[e] = log_form() ? element_tau(in, kin, dt, stab.alpha_tau)
                            : element_tau_morph(in, kin, dt, stab.alpha_tau);
    }
  }

  // residual (and Jacobian when a != nullptr) at state y; ylin carries the
  // frozen linearization state, hist the BDF history sum.  Returns false if
  // any element lost positive definiteness (its contribution is zeroed).
  bool assemble(const std::vector<real>& y, const std::vector<real>& ylin,
                const std::vector<real>& hist, real c0_dt, std::vector<real>& r, CsrMatrix* a) {
    r.assign(n_dofs(), 0.0);
    if (a) a->zero();
    bool pd_ok = true;
    ElementInputs<D> in;
    in.quad = &quad;
    in.p = p;
    in.g = guards;
    in.c0_dt = c0_dt;
    in.alpha_dc = stab.alpha_dc;
    in.penalty_eps = stab.penalty_eps;
    in.kin.resize(quad.xi.size());
    for (int e = 0; e < mesh->n_elems(); ++e) {
      in.geom = &geom[e];
      in.tau_e = tau_e[e];
      gather(y, e, in.y);
      gather(ylin, e, in.ylin);
      gather(hist, e, in.hist);
      for (size_t q = 0; q < quad.xi.size(); ++q) {
        const auto n = shape_values<D>(quad.xi[q]);
        const Vec<D> x = map_to_physical<D>(geom[e], quad.xi[q]);
        in.kin[q] = flow.at_element(e, n, x, mesh->mrf(e));
      }
      ElementSystem<D> out;
      switch (stab.scheme) {
        case Scheme::galerkin: assemble_galerkin(in, out); break;
        case Scheme::supg: assemble_supg(in, out); break;
        case Scheme::vms: assemble_vms(in, out); break;
        case Scheme::gls_morph: assemble_gls_morph(in, out); break;
      }
      if (log_form() && stab.alpha_dc > 0) assemble_dc(in, out);
      if (out.pd_fail) pd_ok = false;
      for (int av = 0; av <= D; ++av)
        for (int c = 0; c < nc; ++c)
          if (!std::isfinite(out.r[av][c]))
            throw std::runtime_error("assemble: non-finite residual in element " + std::to_string(e) +
                                     " node " + std::to_string(mesh->elems[e][av]));
      size_t k = 0;
      for (int av = 0; av <= D; ++av)
        for (int c = 0; c < nc; ++c) {
          r[mesh->elems[e][av] * nc + c] += out.r[av][c];
          if (a)
            for (int bv = 0; bv <= D; ++bv)
              for (int cc = 0; cc < nc; ++cc) a->val[scatter[e][k++]] += out.k[av][c][bv][cc];
          else
            k += size_t(D + 1) * nc;
        }
    }
    return pd_ok;
  }
};

// One BDF step: damped Newton with ILUT-preconditioned restarted GMRES.
// tau, nu_DC and the GLS test operator are refrozen at the current iterate
// at the top of every iteration; the line search compares residuals under
// the iteration's freeze.
template <int D>
inline StepStats newton_solve(FEMSystem<D>& sys, std::vector<real>& y, const std::vector<real>& hist,
                              real c0_dt, const SolverConfig& cfg, std::ostream* log = nullptr,
                              int step_idx = 0) {
  StepStats st;
  const int n = sys.n_dofs();
  std::vector<real> r(n), rhs(n), dy(n), ytrial(n), rtrial(n), ylin;
  int it = 0;
  while (true) {
    ylin = y;
    sys.refresh_tau(ylin, cfg.dt);
    if (!sys.assemble(y, ylin, hist, c0_dt, r, &sys.mat)) st.pd_fail = true;
    const real rn = norm2(r);
    if (!std::isfinite(rn))
      throw std::runtime_error("newton: non-finite residual norm at step " + std::to_string(step_idx));
    st.final_residual = rn;
    if (rn <= cfg.nr_tol) {
      st.converged = true;
      break;
    }
    if (it >= cfg.nr_max) break;
    ++it;

    const IlutPrecond pre = ilut_factor(sys.mat, cfg.ilut);
    GmresConfig gc;
    gc.restart = cfg.krylov_dim;
    gc.rtol = cfg.gmres_rtol;
    gc.max_iters = cfg.gmres_max;
    for (int i = 0; i < n; ++i) rhs[i] = -r[i];
    dy.assign(n, 0.0);
    const GmresResult gr =
        gmres_solve(n, [&](const std::vector<real>& xv, std::vector<real>& yv) { matvec(sys.mat, xv, yv); },
                    [&](const std::vector<real>& v, std::vector<real>& z) { pre.apply(v, z); }, rhs, dy, gc);
    st.newton_iters = it;
    st.gmres_iters += gr.iters;
    if (log) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "step %d iter %d res %.6e gmres %d\n", step_idx, it, rn, gr.iters);
      *log << buf;
    }

    // backtracking: accept the first residual decrease, else the last trial
    real lambda = 1.0;
    for (int t = 0;; ++t) {
      for (int i = 0; i < n; ++i) ytrial[i] = y[i] + lambda * dy[i];
      sys.assemble(ytrial, ylin, hist, c0_dt, rtrial, nullptr);
      if (norm2(rtrial) < rn || t == 5) {
        y = ytrial;
        break;
      }
      lambda *= 0.5;
    }
  }
  return st;
}

// Time loop: BDF1 startup then BDF2, optional rotation ramp, unconverged
// steps recorded and (outside strict mode) stepped past.
template <int D>
inline RunMetrics advance_bdf(FEMSystem<D>& sys, std::vector<real>& y, const SolverConfig& cfg,
                              std::ostream* log = nullptr,
                              const std::function<void(int, const std::vector<real>&)>& on_step = {}) {
  validate(cfg);
  const int n = sys.n_dofs();
  const int nsteps = int(std::llround(cfg.t_end / cfg.dt));
  std::vector<real> yn = y, ynm1 = y, hist(n);
  RunMetrics m;
  for (int s = 1; s <= nsteps; ++s) {
    sys.flow.omega_scale = cfg.ramp_steps > 0 ? ramp_scale(real(s) / cfg.ramp_steps) : 1.0;
    real c0_dt;
    if (s == 1 || cfg.bdf_order == 1) {
      c0_dt = 1.0 / cfg.dt;
      for (int i = 0; i < n; ++i) hist[i] = -yn[i] / cfg.dt;
    } else {
      c0_dt = 1.5 / cfg.dt;
      for (int i = 0; i < n; ++i) hist[i] = (-2.0 * yn[i] + 0.5 * ynm1[i]) / cfg.dt;
    }
    const StepStats st = newton_solve(sys, y, hist, c0_dt, cfg, log, s);
    m.n_nr_total += st.newton_iters;
    m.n_gmres_total += st.gmres_iters;
    m.step_converged.push_back(st.converged ? 1 : 0);
    m.n_steps = s;
    if (st.pd_fail) m.diverged = true;
    if (!st.converged) {
      ++m.n_unconverged;
      if (cfg.strict) {
        m.diverged = true;
        break;
      }
    }
    ynm1 = yn;
    yn = y;
    if (on_step) on_step(s, y);
  }
  det_metrics<D>(y, sys.log_form(), m.eps_det, m.max_det_dev);
  return m;
}

}  // namespace logmorph
