#include <catch2/catch_amalgamated.hpp>

#include <logmorph/kernels.hpp>

#include "oracles.hpp"

using namespace logmorph;

namespace {

const GuardThresholds kG{};

template <int D> real max_abs_diff(const SymTensor<D>& a, const SymTensor<D>& b) {
  real m = 0;
  for (int c = 0; c < sym_comps<D>; ++c) m = std::max(m, std::abs(a[c] - b[c]));
  return m;
}

}  // namespace

TEST_CASE("scalar relaxation function and its derivative chain", "[kernels]") {
  // f(x) = x/tanh(x/2) against long-double evaluation, including the series
  // branch near zero
  for (real x : {1e-9, 1e-6, 5e-5, 1e-4, 2e-4, 1e-3, 0.05, 0.3, 1.0, 3.0, -2.0, -1e-5}) {
    const real ref = real(oracles::f_ld(x));
    REQUIRE(func_f(x) == Catch::Approx(ref).epsilon(1e-14));
  }
  REQUIRE(func_f(0.0) == 2.0);
  // derivative ladder: each order is the centered difference of the previous
  const real h = 1e-6;
  for (real x : {0.3, 0.7, 1.5, 3.0, -1.2}) {
    const real fd1 = (func_f(x + h) - func_f(x - h)) / (2 * h);
    REQUIRE(f_d1(x, kG.arg_small) == Catch::Approx(fd1).epsilon(1e-8));
    const real fd2 = (f_d1(x + h, kG.arg_small) - f_d1(x - h, kG.arg_small)) / (2 * h);
    REQUIRE(f_d2(x, kG.arg_small) == Catch::Approx(fd2).epsilon(1e-8));
    const real fd3 = (f_d2(x + h, kG.arg_small) - f_d2(x - h, kG.arg_small)) / (2 * h);
    REQUIRE(f_d3(x, kG.arg_small) == Catch::Approx(fd3).margin(5e-8));
    const real h4 = 1e-5;  // the last rung differences a cancellation-prone form
    const real fd4 = (f_d3(x + h4, kG.arg_small) - f_d3(x - h4, kG.arg_small)) / (2 * h4);
    REQUIRE(f_d4(x, kG.arg_small) == Catch::Approx(fd4).margin(1e-6));
  }
}

TEST_CASE("cotangent remainder b(t) and the identity f = 2 + t b(t)", "[kernels]") {
  for (real t : {1e-8, 1e-4, 0.05, 0.15, 0.19, 0.21, 0.5, 2.0, -1.0, -0.1}) {
    REQUIRE(2 + t * func_b(t) == Catch::Approx(func_f(t)).epsilon(1e-13));
  }
  const real h = 1e-6;
  for (real t : {0.3, 0.8, 2.0, -1.5}) {
    const real bd1 = (func_b(t + h) - func_b(t - h)) / (2 * h);
    REQUIRE(b_d1(t, kG.arg_small) == Catch::Approx(bd1).epsilon(1e-8));
    const real bd2 = (b_d1(t + h, kG.arg_small) - b_d1(t - h, kG.arg_small)) / (2 * h);
    REQUIRE(b_d2(t, kG.arg_small) == Catch::Approx(bd2).margin(1e-8));
    const real bd3 = (b_d2(t + h, kG.arg_small) - b_d2(t - h, kG.arg_small)) / (2 * h);
    REQUIRE(b_d3(t, kG.arg_small) == Catch::Approx(bd3).margin(1e-8));
    const real h4 = 1e-5;
    const real bd4 = (b_d3(t + h4, kG.arg_small) - b_d3(t - h4, kG.arg_small)) / (2 * h4);
    REQUIRE(b_d4(t, kG.arg_small) == Catch::Approx(bd4).margin(1e-6));
  }
}

TEST_CASE("divided differences of f and b", "[kernels]") {
  for (auto [x, y] : std::vector<std::pair<real, real>>{
           {0.4, 1.3}, {-0.8, 0.9}, {2.0, 2.5}, {-3.0, -1.0}, {0.2, 0.9}}) {
    REQUIRE(ddf(x, y, kG) == Catch::Approx(real(oracles::ddf_ld(x, y))).epsilon(1e-12));
  }
  // coincident limit -> derivative value
  REQUIRE(ddf(0.7, 0.7 + 1e-9, kG) == Catch::Approx(f_d1(0.7, kG.arg_small)).epsilon(1e-8));
  REQUIRE(ddb(0.7, 0.7, kG) == Catch::Approx(b_d1(0.7, kG.arg_small)).epsilon(1e-12));
  // second divided difference of b: permutation symmetry and the recursive
  // long-double value at separated arguments
  std::mt19937 rng(5);
  std::uniform_real_distribution<real> u(-2.0, 2.0);
  auto b_ld = [](long double t) { return (oracles::f_ld(t) - 2.0L) / t; };
  auto ddb_ld = [&](long double a, long double c) { return (b_ld(a) - b_ld(c)) / (a - c); };
  for (int rep = 0; rep < 50; ++rep) {
    real x = u(rng), y = u(rng), z = u(rng);
    if (std::abs(x - y) < 0.15 || std::abs(y - z) < 0.15 || std::abs(x - z) < 0.15) continue;
    const real v = dd2b(x, y, z, kG);
    REQUIRE(dd2b(z, x, y, kG) == Catch::Approx(v).margin(1e-12));
    REQUIRE(dd2b(y, x, z, kG) == Catch::Approx(v).margin(1e-12));
    const long double ref = (ddb_ld(x, z) - ddb_ld(y, z)) / (x - y);
    REQUIRE(v == Catch::Approx(real(ref)).margin(1e-10));
  }
}

TEST_CASE("exponential divided differences", "[kernels]") {
  // first divided difference: stable product form against direct quotient
  for (auto [x, y] : std::vector<std::pair<real, real>>{
           {0.3, 1.2}, {-1.0, 2.0}, {4.0, 4.5}, {-2.5, -2.0}}) {
    REQUIRE(dd_exp(x, y) == Catch::Approx(real(oracles::exp_dd_ld(x, y))).epsilon(1e-13));
  }
  REQUIRE(dd_exp(0.8, 0.8) == Catch::Approx(-std::exp(-0.8)).epsilon(1e-15));
  // second divided difference: permutation symmetry, triple-point limit,
  // and agreement with the long-double recursion when separated
  std::mt19937 rng(6);
  std::uniform_real_distribution<real> u(-2.0, 2.0);
  for (int rep = 0; rep < 50; ++rep) {
    real x = u(rng), y = u(rng), z = u(rng);
    const real v = dd2_exp(x, y, z, kG);
    REQUIRE(dd2_exp(z, y, x, kG) == Catch::Approx(v).margin(1e-13));
    REQUIRE(dd2_exp(y, z, x, kG) == Catch::Approx(v).margin(1e-13));
    if (std::abs(x - y) > 0.1 && std::abs(y - z) > 0.1 && std::abs(x - z) > 0.1) {
      const long double ref = (oracles::exp_dd_ld(x, z) - oracles::exp_dd_ld(y, z)) / (x - y);
      REQUIRE(v == Catch::Approx(real(ref)).epsilon(1e-11));
    }
  }
  REQUIRE(dd2_exp(0.5, 0.5, 0.5, kG) == Catch::Approx(0.5 * std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("spectral exponential matches Taylor oracle", "[kernels]") {
  std::mt19937 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const auto psi = oracles::random_sym<3>(rng, 1.5);
    const auto lib = mat_exp_neg(eig_sym(psi));
    const auto ref = oracles::sym_exp_neg(psi);
    REQUIRE(max_abs_diff(lib, ref) < 1e-13);
    const auto psi2 = oracles::random_sym<2>(rng, 1.5);
    const auto lib2 = mat_exp_neg(eig_sym(psi2));
    const auto ref2 = oracles::sym_exp_neg(psi2);
    REQUIRE(max_abs_diff(lib2, ref2) < 1e-13);
  }
}

TEST_CASE("F kernel: definition sum, isotropic limit, trace identity", "[kernels]") {
  std::mt19937 rng(12);
  for (int rep = 0; rep < 30; ++rep) {
    const auto psi = oracles::random_sym<3>(rng, 1.2);
    auto e = oracles::random_sym<3>(rng, 1.0);
    e -= (trace(e) / 3) * sym_identity<3>();  // traceless strain
    const auto d = eig_sym(psi);
    const auto lib = big_f(d, e);
    // brute-force projector sum
    SymTensor<3> ref;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        real s = 0;
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) {
            real eab = 0;
            for (int p = 0; p < 3; ++p)
              for (int q = 0; q < 3; ++q) eab += d.Q(p, a) * e(p, q) * d.Q(q, b);
            s += func_f(d.lam[a] - d.lam[b]) * d.Q(i, a) * eab * d.Q(j, b);
          }
        ref.at(i, j) = s;
      }
    REQUIRE(max_abs_diff(lib, ref) < 1e-11);
    REQUIRE(std::abs(trace(lib)) < 1e-12);  // tr F = 2 tr E = 0
  }
  // isotropic state: F(0,E) = 2E
  SymTensor<3> zero;
  const auto d0 = eig_sym(zero);
  std::mt19937 rng2(13);
  const auto e = oracles::random_sym<3>(rng2, 1.0);
  const auto f0 = big_f(d0, e);
  for (int c = 0; c < 6; ++c) REQUIRE(f0[c] == Catch::Approx(2 * e[c]).margin(1e-14));
}

TEST_CASE("K kernel is the directional derivative of the negative exponential", "[kernels]") {
  std::mt19937 rng(14);
  const real eps = 1e-6;
  for (int rep = 0; rep < 30; ++rep) {
    const auto psi = oracles::random_sym<3>(rng, 1.2);
    const auto r = oracles::random_sym<3>(rng, 1.0);
    const auto lib = kernel_K(eig_sym(psi), r);
    // oracle: FD of the Taylor exponential, +R direction
    SymTensor<3> pp = psi, pm = psi;
    for (int c = 0; c < 6; ++c) {
      pp[c] += eps * r[c];
      pm[c] -= eps * r[c];
    }
    const auto fd = (1.0 / (2 * eps)) * (oracles::sym_exp_neg(pp) - oracles::sym_exp_neg(pm));
    REQUIRE(max_abs_diff(lib, fd) < 1e-8);
  }
  // isotropic pin: K(0,R) = -R exactly
  SymTensor<3> zero;
  const auto r = oracles::random_sym<3>(rng, 1.0);
  const auto k0 = kernel_K(eig_sym(zero), r);
  for (int c = 0; c < 6; ++c) REQUIRE(k0[c] == Catch::Approx(-r[c]).margin(1e-14));
}

TEST_CASE("L_alpha1 and L_alpha2: FD consistency and tracelessness", "[kernels]") {
  std::mt19937 rng(15);
  const real eps = 1e-6;
  for (int rep = 0; rep < 30; ++rep) {
    const auto psi = oracles::random_sym<3>(rng, 1.0);
    const auto r = oracles::random_sym<3>(rng, 1.0);
    auto e = oracles::random_sym<3>(rng, 1.0);
    e -= (trace(e) / 3) * sym_identity<3>();

    const auto l1 = l_alpha1(eig_sym(psi), r);
    REQUIRE(std::abs(trace(l1)) < 1e-13);
    auto normalized_exp = [](const SymTensor<3>& p) {
      const auto d = eig_sym(p);
      const auto m = mat_exp_neg(d);
      return (1.0 / trace_exp_neg(d)) * m;
    };
    SymTensor<3> pp = psi, pm = psi;
    for (int c = 0; c < 6; ++c) {
      pp[c] += eps * r[c];
      pm[c] -= eps * r[c];
    }
    const auto fd1 = (1.0 / (2 * eps)) * (normalized_exp(pp) - normalized_exp(pm));
    REQUIRE(max_abs_diff(l1, fd1) < 1e-8);

    const auto l2 = l_alpha2(eig_sym(psi), r, e, kG);
    REQUIRE(std::abs(trace(l2)) < 1e-12);
    const auto fd2 = (1.0 / (2 * eps)) * (big_f(eig_sym(pp), e) - big_f(eig_sym(pm), e));
    REQUIRE(max_abs_diff(l2, fd2) < 2e-8);
  }
  // isotropic pins
  SymTensor<3> zero;
  const auto d0 = eig_sym(zero);
  const auto r = oracles::random_sym<3>(rng, 1.0);
  const auto e = oracles::random_sym<3>(rng, 1.0);
  const auto l10 = l_alpha1(d0, r);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      const real want = -r(i, j) / 3 + (i == j ? trace(r) / 9 : 0.0);
      REQUIRE(l10(i, j) == Catch::Approx(want).margin(1e-14));
    }
  const auto l20 = l_alpha2(d0, r, e, kG);
  for (int c = 0; c < 6; ++c) REQUIRE(l20[c] == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("directional derivatives of K, L_alpha1, L_alpha2", "[kernels]") {
  std::mt19937 rng(16);
  const real eps = 3e-6;
  for (int rep = 0; rep < 25; ++rep) {
    const bool near_degen = rep % 5 == 4;
    SymTensor<3> psi;
    if (near_degen) {
      const real gap = 1e-6;
      psi = oracles::sym_with_eigs<3>(rng, {0.4, 0.4 + gap, -0.3});
    } else {
      psi = oracles::random_sym<3>(rng, 1.0);
    }
    const auto r = oracles::random_sym<3>(rng, 1.0);
    const auto dpsi = oracles::random_sym<3>(rng, 1.0);
    const auto j = oracles::random_sym<3>(rng, 1.0);
    auto e = oracles::random_sym<3>(rng, 1.0);
    e -= (trace(e) / 3) * sym_identity<3>();

    auto perturb = [&](real s) {
      SymTensor<3> p = psi, rr = r;
      for (int c = 0; c < 6; ++c) {
        p[c] += s * dpsi[c];
        rr[c] += s * j[c];
      }
      return std::make_pair(p, rr);
    };

    {
      const auto lib = dK_direction(eig_sym(psi), r, dpsi, j, kG);
      const auto [pp, rp] = perturb(eps);
      const auto [pm, rm] = perturb(-eps);
      const auto fd = (1.0 / (2 * eps)) * (kernel_K(eig_sym(pp), rp) - kernel_K(eig_sym(pm), rm));
      REQUIRE(max_abs_diff(lib, fd) < 1e-7);
    }
    {
      const auto lib = dL_alpha1_direction(eig_sym(psi), r, dpsi, j, kG);
      const auto [pp, rp] = perturb(eps);
      const auto [pm, rm] = perturb(-eps);
      const auto fd =
          (1.0 / (2 * eps)) * (l_alpha1(eig_sym(pp), rp) - l_alpha1(eig_sym(pm), rm));
      REQUIRE(max_abs_diff(lib, fd) < 1e-7);
    }
    {
      const auto lib = dL_alpha2_direction(eig_sym(psi), r, dpsi, e, j, kG);
      const auto [pp, rp] = perturb(eps);
      const auto [pm, rm] = perturb(-eps);
      const auto fd =
          (1.0 / (2 * eps)) * (l_alpha2(eig_sym(pp), rp, e, kG) - l_alpha2(eig_sym(pm), rm, e, kG));
      REQUIRE(max_abs_diff(lib, fd) < 2e-7);
    }
  }
}

TEST_CASE("guard counters record Taylor-branch activations", "[kernels]") {
  reset_guard_counters();
  std::mt19937 rng(17);
  const auto psi = oracles::sym_with_eigs<3>(rng, {0.2, 0.2 + 1e-7, 0.8});
  const auto r = oracles::random_sym<3>(rng, 1.0);
  const auto e = oracles::random_sym<3>(rng, 1.0);
  (void)l_alpha2(eig_sym(psi), r, e, kG);
  (void)dK_direction(eig_sym(psi), r, r, r, kG);
  const auto& gc = guard_counters();
  REQUIRE(gc.dd_taylor + gc.arg_taylor > 0);
  REQUIRE(gc.dd_taylor_newton + gc.arg_taylor_newton > 0);
  reset_guard_counters();
  REQUIRE(guard_counters().dd_taylor == 0);
}
