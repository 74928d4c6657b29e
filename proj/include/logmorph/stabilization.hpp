#pragma once

// Element-level weak-form assembly: Galerkin, SUPG, VMS (SUPG plus the
// linearized source blocks), discontinuity capturing, and a GLS baseline on
// the untransformed shape-tensor equation.
//
// Freezing contract: tau, nu_DC, and the GLS test operator are computed from
// a separate "lin" nodal state that stays fixed within a Newton iteration,
// while the residual and its exact linearization use the evaluation state.
// This keeps the Newton matrix the exact derivative of the assembled residual
// with respect to the evaluation state.

#include "fem.hpp"
#include "flow.hpp"
#include "morphology.hpp"

namespace logmorph {

enum class Scheme { galerkin, supg, vms, gls_morph };

struct StabConfig {
  Scheme scheme = Scheme::vms;
  real alpha_tau = 1.0;
  real alpha_dc = 0.0;
  real penalty_eps = 1e4;  // gls_morph volume penalty
};

inline void validate(const StabConfig& c) {
  if (!(c.alpha_tau > 0)) throw std::invalid_argument("stabilization: alpha_tau must be > 0");
  if (c.alpha_dc < 0) throw std::invalid_argument("stabilization: alpha_dc must be >= 0");
  if (c.penalty_eps < 0) throw std::invalid_argument("stabilization: penalty_eps must be >= 0");
}

// tau = alpha_tau ((2/dt)^2 + u.Gu + |L|)^{-1/2}; the quiescent branch keeps
// the transient limit alpha_tau dt/2 exact.
template <int D> inline real tau(real dt, const Vec<D>& u, const Mat<D>& G, real normL, real alpha_tau) {
  real ugu = 0;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) ugu += u[i] * G(i, j) * u[j];
  if (ugu <= 0 && normL <= 0) return alpha_tau * dt / 2;
  const real inv_dt2 = (2 / dt) * (2 / dt);
  return alpha_tau / std::sqrt(inv_dt2 + ugu + normL);
}

template <int D> struct ElementInputs {
  const ElementGeometry<D>* geom = nullptr;
  const QuadRule<D>* quad = nullptr;
  std::vector<KinematicsSample<D>> kin;    // one per quadrature point
  real c0_dt = 0;                          // leading BDF weight over dt
  std::array<SymTensor<D>, D + 1> y;       // nodal evaluation state
  std::array<SymTensor<D>, D + 1> ylin;    // nodal frozen state (tau/nu_DC/GLS operator)
  std::array<SymTensor<D>, D + 1> hist;    // nodal BDF history sum, (c1 y_n + c2 y_nm1)/dt
  ModelParams p;
  GuardThresholds g;
  real tau_e = 0;       // stabilization time scale, frozen per iteration
  real alpha_dc = 0;
  real penalty_eps = 0;
};

template <int D> struct ElementSystem {
  static constexpr int nn = D + 1;
  static constexpr int nc = sym_comps<D>;
  std::array<std::array<real, nc>, nn> r{};
  std::array<std::array<std::array<std::array<real, nc>, nn>, nc>, nn> k{};  // [a][c][b][cc]
  bool pd_fail = false;
};

namespace detail {

// strong-residual ingredients of the log form at one quadrature point
template <int D> struct QpState {
  SpectralDecomp<D> d;     // of psi at the point
  SymTensor<D> strong;     // full strong residual
  std::array<real, D + 1> n;
  std::array<real, D + 1> mu;  // c0/dt N_b + u.grad N_b
};

template <int D> inline QpState<D> qp_state(const ElementInputs<D>& in, int q,
                                            const std::array<SymTensor<D>, D + 1>& nodal) {
  QpState<D> s;
  s.n = shape_values<D>(in.quad->xi[q]);
  const auto& kin = in.kin[q];
  SymTensor<D> psi, dt_part, adv;
  for (int v = 0; v <= D; ++v) {
    const real ugn = dot(kin.u, in.geom->grad[v]);
    psi += s.n[v] * nodal[v];
    dt_part += (in.c0_dt * s.n[v]) * nodal[v] + s.n[v] * in.hist[v];
    adv += ugn * nodal[v];
    s.mu[v] = in.c0_dt * s.n[v] + ugn;
  }
  s.d = eig_sym(psi);
  s.strong = residual_logmorph(s.d, dt_part, adv, kin, in.p);
  return s;
}

}  // namespace detail

// plain Galerkin: Phi : R with the full strong residual
template <int D> inline void assemble_galerkin(const ElementInputs<D>& in, ElementSystem<D>& out) {
  constexpr int nc = sym_comps<D>;
  const real jac = in.geom->jac;
  for (size_t q = 0; q < in.quad->xi.size(); ++q) {
    const auto s = detail::qp_state<D>(in, int(q), in.y);
    const real wj = in.quad->w[q] * jac;
    // trial-column ingredients
    std::array<SymTensor<D>, nc> src;  // source derivative along each component
    for (int cc = 0; cc < nc; ++cc)
      src[cc] = jacobian_source(s.d, sym_unit<D>(cc), in.kin[q], in.p, in.g);
    for (int a = 0; a <= D; ++a)
      for (int c = 0; c < nc; ++c) {
        const real w_ac = wj * s.n[a] * comp_weight<D>(c);
        out.r[a][c] += w_ac * s.strong[c];
        for (int b = 0; b <= D; ++b)
          for (int cc = 0; cc < nc; ++cc) {
            real dr = s.n[b] * src[cc][c];
            if (cc == c) dr += s.mu[b];
            out.k[a][c][b][cc] += w_ac * dr;
          }
      }
  }
}

// SUPG: tau (c0/dt Phi + u.grad Phi) : R plus the rotation term
// tau a3 Phi : (W R - R W)
template <int D> inline void assemble_supg(const ElementInputs<D>& in, ElementSystem<D>& out) {
  assemble_galerkin(in, out);
  constexpr int nc = sym_comps<D>;
  const real jac = in.geom->jac;
  for (size_t q = 0; q < in.quad->xi.size(); ++q) {
    const auto s = detail::qp_state<D>(in, int(q), in.y);
    const real wj = in.quad->w[q] * jac * in.tau_e;
    const auto& kin = in.kin[q];
    const SymTensor<D> rot = skew_comm(kin.W, s.strong);
    std::array<SymTensor<D>, nc> src, drot;
    for (int cc = 0; cc < nc; ++cc) {
      src[cc] = jacobian_source(s.d, sym_unit<D>(cc), kin, in.p, in.g);
      // derivative of (W R - R W) along the trial column, split into the
      // mu_b part (direction e_cc) and the N_b part (direction src)
      drot[cc] = skew_comm(kin.W, src[cc]);
    }
    for (int a = 0; a <= D; ++a)
      for (int c = 0; c < nc; ++c) {
        const real cw = comp_weight<D>(c);
        out.r[a][c] += wj * cw * (s.mu[a] * s.strong[c] + in.p.alpha3 * s.n[a] * rot[c]);
        for (int b = 0; b <= D; ++b)
          for (int cc = 0; cc < nc; ++cc) {
            real dr = s.n[b] * src[cc][c];
            if (cc == c) dr += s.mu[b];
            real drotv = s.n[b] * drot[cc][c] + s.mu[b] * skew_comm(kin.W, sym_unit<D>(cc))[c];
            out.k[a][c][b][cc] += wj * cw * (s.mu[a] * dr + in.p.alpha3 * s.n[a] * drotv);
          }
      }
  }
}

// VMS: the SUPG terms plus the linearized source block
// tau Phi : [d a1 L_alpha1(Psi,R) + a2 L_alpha2(Psi,R,E)]; the block and its
// Newton derivative use the spectral directional kernels.
template <int D> inline void assemble_vms(const ElementInputs<D>& in, ElementSystem<D>& out,
                                          bool include_source_blocks = true) {
  assemble_supg(in, out);
  if (!include_source_blocks) return;
  constexpr int nc = sym_comps<D>;
  const real jac = in.geom->jac;
  const real da1 = real(D) * in.p.alpha1;
  for (size_t q = 0; q < in.quad->xi.size(); ++q) {
    const auto s = detail::qp_state<D>(in, int(q), in.y);
    const real wj = in.quad->w[q] * jac * in.tau_e;
    const auto& kin = in.kin[q];
    const SymTensor<D> block = da1 * l_alpha1(s.d, s.strong) + in.p.alpha2 * l_alpha2(s.d, s.strong, kin.E, in.g);
    std::array<SymTensor<D>, nc> xcol, ycol;
    for (int cc = 0; cc < nc; ++cc) {
      const SymTensor<D> e_cc = sym_unit<D>(cc);
      const SymTensor<D> src = jacobian_source(s.d, e_cc, kin, in.p, in.g);
      // column split dV = N_b X + mu_b Y along the trial perturbation
      xcol[cc] = da1 * dL_alpha1_direction(s.d, s.strong, e_cc, src, in.g);
      xcol[cc] += in.p.alpha2 * dL_alpha2_direction(s.d, s.strong, e_cc, kin.E, src, in.g);
      ycol[cc] = da1 * l_alpha1(s.d, e_cc) + in.p.alpha2 * l_alpha2(s.d, e_cc, kin.E, in.g);
    }
    for (int a = 0; a <= D; ++a)
      for (int c = 0; c < nc; ++c) {
        const real w_ac = wj * s.n[a] * comp_weight<D>(c);
        out.r[a][c] += w_ac * block[c];
        for (int b = 0; b <= D; ++b)
          for (int cc = 0; cc < nc; ++cc)
            out.k[a][c][b][cc] += w_ac * (s.n[b] * xcol[cc][c] + s.mu[b] * ycol[cc][c]);
      }
  }
}

// discontinuity capturing: alpha_dc nu_DC grad Phi . Ginv grad Psi with
// nu_DC = sqrt(R:R / (grad Psi . Ginv grad Psi)) evaluated at the frozen
// state (Picard), denominator floored; the diffusion itself is linearized.
template <int D> inline void assemble_dc(const ElementInputs<D>& in, ElementSystem<D>& out) {
  if (in.alpha_dc <= 0) return;
  constexpr int nc = sym_comps<D>;
  const real jac = in.geom->jac;
  const Mat<D> ginv = mat_inverse<D>(in.geom->G);

  // element-constant gradients of the frozen and evaluation states
  std::array<Vec<D>, nc> grad_lin{}, grad_y{};
  for (int v = 0; v <= D; ++v)
    for (int c = 0; c < nc; ++c) {
      grad_lin[c] += in.ylin[v][c] * in.geom->grad[v];
      grad_y[c] += in.y[v][c] * in.geom->grad[v];
    }
  real denom = 0;
  for (int c = 0; c < nc; ++c) {
    real gg = 0;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) gg += grad_lin[c][i] * ginv(i, j) * grad_lin[c][j];
    denom += comp_weight<D>(c) * gg;
  }
  // Ginv-weighted gradient pairings of the basis functions
  std::array<std::array<real, D + 1>, D + 1> gg{};
  for (int a = 0; a <= D; ++a)
    for (int b = 0; b <= D; ++b) {
      real v = 0;
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) v += in.geom->grad[a][i] * ginv(i, j) * in.geom->grad[b][j];
      gg[a][b] = v;
    }

  for (size_t q = 0; q < in.quad->xi.size(); ++q) {
    const auto slin = detail::qp_state<D>(in, int(q), in.ylin);
    const real rr = frob_inner(slin.strong, slin.strong);
    const real nu = std::sqrt(rr / std::max(denom, 1e-30 * (1 + rr)));
    const real wj = in.quad->w[q] * jac * in.alpha_dc * nu;
    for (int a = 0; a <= D; ++a)
      for (int c = 0; c < nc; ++c) {
        const real cw = comp_weight<D>(c);
        real gpsi = 0;
        for (int i = 0; i < D; ++i)
          for (int j = 0; j < D; ++j) gpsi += in.geom->grad[a][i] * ginv(i, j) * grad_y[c][j];
        out.r[a][c] += wj * cw * gpsi;
        for (int b = 0; b <= D; ++b) out.k[a][c][b][c] += wj * cw * gg[a][b];
      }
  }
}

// GLS baseline on the untransformed equation: Galerkin plus least-squares
// weighting tau (L Phi) : R_S with the test operator frozen at the lin state,
// plus the volume penalty eps_p (det S - 1)(det S S^-1) : Phi.  Loss of
// positive definiteness flags the element and zeroes its contribution.
template <int D> inline void assemble_gls_morph(const ElementInputs<D>& in, ElementSystem<D>& out) {
  constexpr int nc = sym_comps<D>;
  const real jac = in.geom->jac;
  ElementSystem<D> acc;
  try {
    for (size_t q = 0; q < in.quad->xi.size(); ++q) {
      const auto& kin = in.kin[q];
      const auto n = shape_values<D>(in.quad->xi[q]);
      SymTensor<D> sq, slin, dt_part, adv;
      std::array<real, D + 1> mu;
      for (int v = 0; v <= D; ++v) {
        const real ugn = dot(kin.u, in.geom->grad[v]);
        sq += n[v] * in.y[v];
        slin += n[v] * in.ylin[v];
        dt_part += (in.c0_dt * n[v]) * in.y[v] + n[v] * in.hist[v];
        adv += ugn * in.y[v];
        mu[v] = in.c0_dt * n[v] + ugn;
      }
      const real dets = det(sq);
      if (trace(sq) <= 0 || dets <= 0) throw std::domain_error("shape tensor not positive definite");

      const SymTensor<D> strong = residual_morph(sq, dt_part, adv, kin, in.p);
      std::array<SymTensor<D>, nc> src;
      for (int cc = 0; cc < nc; ++cc) src[cc] = jacobian_source_morph(sq, sym_unit<D>(cc), kin, in.p);

      // frozen least-squares test operator L Phi_{a,c} = mu_a e_c + N_a Jlin e_c
      std::array<SymTensor<D>, nc> src_lin;
      for (int c = 0; c < nc; ++c) src_lin[c] = jacobian_source_morph(slin, sym_unit<D>(c), kin, in.p);

      // penalty ingredients
      const SymTensor<D> sinv = inverse(sq);
      const SymTensor<D> cof = dets * sinv;  // d det / d S
      const real wj = in.quad->w[q] * jac;

      for (int a = 0; a <= D; ++a)
        for (int c = 0; c < nc; ++c) {
          const real cw = comp_weight<D>(c);
          // Galerkin + least squares
          real rv = n[a] * cw * strong[c];
          SymTensor<D> lphi = src_lin[c];  // times N_a, plus mu_a on component c
          rv += in.tau_e * (mu[a] * cw * strong[c] + n[a] * frob_inner(lphi, strong));
          // penalty
          rv += in.penalty_eps * (dets - 1) * n[a] * cw * cof[c];
          acc.r[a][c] += wj * rv;
          for (int b = 0; b <= D; ++b)
            for (int cc = 0; cc < nc; ++cc) {
              real dr_c = n[b] * src[cc][c];
              if (cc == c) dr_c += mu[b];
              real kv = n[a] * cw * dr_c;
              real lphi_dr = frob_inner(lphi, src[cc]) * n[b] + mu[b] * comp_weight<D>(cc) * lphi[cc];
              kv += in.tau_e * (mu[a] * cw * dr_c + n[a] * lphi_dr);
              // full penalty linearization: d det = det tr(Sinv dS),
              // d(Sinv) = -Sinv dS Sinv
              const SymTensor<D> e_cc = sym_unit<D>(cc);
              const real trsd = frob_inner(sinv, e_cc);  // tr(Sinv e_cc)
              const SymTensor<D> sis = sym_part(to_full(sinv) * to_full(e_cc) * to_full(sinv));
              real dpen = dets * trsd * (2 * dets - 1) * sinv[c] - (dets - 1) * dets * sis[c];
              kv += in.penalty_eps * n[a] * cw * n[b] * dpen;
              acc.k[a][c][b][cc] += wj * kv;
            }
        }
    }
  } catch (const std::domain_error&) {
    out.pd_fail = true;
    return;  // contribution zeroed, run will be marked diverged by the caller
  }
  for (int a = 0; a <= D; ++a)
    for (int c = 0; c < nc; ++c) {
      out.r[a][c] += acc.r[a][c];
      for (int b = 0; b <= D; ++b)
        for (int cc = 0; cc < nc; ++cc) out.k[a][c][b][cc] += acc.k[a][c][b][cc];
    }
}

// frozen per-iteration scalars: tau from the element-mean state and centroid
// kinematics
template <int D> inline real element_tau(const ElementInputs<D>& in, const KinematicsSample<D>& kin_c,
                                         real dt, real alpha_tau) {
  SymTensor<D> mean;
  for (int v = 0; v <= D; ++v) mean += (1.0 / (D + 1)) * in.ylin[v];
  const real normL = source_operator_norm(eig_sym(mean), kin_c, in.p, in.g);
  return tau(dt, kin_c.u, in.geom->G, normL, alpha_tau);
}

template <int D> inline real element_tau_morph(const ElementInputs<D>& in, const KinematicsSample<D>& kin_c,
                                               real dt, real alpha_tau) {
  SymTensor<D> mean;
  for (int v = 0; v <= D; ++v) mean += (1.0 / (D + 1)) * in.ylin[v];
  const real normL = source_operator_norm_morph(mean, kin_c, in.p);
  return tau(dt, kin_c.u, in.geom->G, normL, alpha_tau);
}

}  // namespace logmorph
