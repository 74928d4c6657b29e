#include <catch2/catch_amalgamated.hpp>

#include <logmorph/tensor.hpp>

#include "oracles.hpp"

using namespace logmorph;

namespace {

template <int D> Mat<D> full_of(const SymTensor<D>& s) { return to_full(s); }

template <int D> real frob_full(const Mat<D>& a, const Mat<D>& b) {
  real r = 0;
  for (int i = 0; i < D * D; ++i) r += a.a[i] * b.a[i];
  return r;
}

}  // namespace

TEST_CASE("packed symmetric indexing is involutive and mirror-symmetric", "[tensor]") {
  SymTensor<3> s;
  for (int c = 0; c < 6; ++c) s[c] = c + 1;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      REQUIRE(s(i, j) == s(j, i));
      REQUIRE(s(i, j) == s[sym_index<3>(i, j)]);
    }
  REQUIRE(sym_index<2>(0, 0) == 0);
  REQUIRE(sym_index<2>(0, 1) == 1);
  REQUIRE(sym_index<2>(1, 1) == 2);
  REQUIRE(sym_index<3>(2, 2) == 5);
}

TEST_CASE("skew tensor sign convention", "[tensor]") {
  SkewTensor<3> w;
  w[0] = 1;  // (0,1)
  w[1] = 2;  // (0,2)
  w[2] = 3;  // (1,2)
  REQUIRE(w(0, 1) == 1.0);
  REQUIRE(w(1, 0) == -1.0);
  REQUIRE(w(2, 1) == -3.0);
  REQUIRE(w(1, 1) == 0.0);
  SkewTensor<2> v;
  v.at(0, 1) = 4;
  REQUIRE(v(0, 1) == 4.0);
  REQUIRE(v(1, 0) == -4.0);
}

TEST_CASE("trace, determinant and second invariant match full-matrix values", "[tensor]") {
  std::mt19937 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto s = oracles::random_sym<3>(rng, 2.0);
    const Mat<3> m = full_of(s);
    REQUIRE(trace(s) == Catch::Approx(m(0, 0) + m(1, 1) + m(2, 2)).margin(1e-14));
    real tr2 = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) tr2 += m(i, j) * m(j, i);
    const real tr = trace(s);
    REQUIRE(invariant_II(s) == Catch::Approx((tr * tr - tr2) / 2).margin(1e-12));
    const real d = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
                   m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
                   m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    REQUIRE(det<3>(s) == Catch::Approx(d).margin(1e-12));
  }
}

TEST_CASE("weighted packed inner product equals full Frobenius product", "[tensor]") {
  std::mt19937 rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    const auto a = oracles::random_sym<3>(rng, 1.0);
    const auto b = oracles::random_sym<3>(rng, 1.0);
    REQUIRE(frob_inner(a, b) == Catch::Approx(frob_full(full_of(a), full_of(b))).margin(1e-13));
    const auto a2 = oracles::random_sym<2>(rng, 1.0);
    const auto b2 = oracles::random_sym<2>(rng, 1.0);
    REQUIRE(frob_inner(a2, b2) ==
            Catch::Approx(frob_full(full_of(a2), full_of(b2))).margin(1e-13));
  }
  for (int c = 0; c < 6; ++c)
    REQUIRE(comp_weight<3>(c) == ((c == 0 || c == 3 || c == 5) ? 1.0 : 2.0));
}

TEST_CASE("anticommutator and commutator agree with full-matrix algebra", "[tensor]") {
  std::mt19937 rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    const auto e = oracles::random_sym<3>(rng, 1.0);
    const auto s = oracles::random_sym<3>(rng, 1.0);
    SkewTensor<3> w;
    for (int c = 0; c < 3; ++c) w[c] = 0.5 * (c + 1) * (rep % 3 ? 1 : -1);
    const Mat<3> me = full_of(e), ms = full_of(s), mw = to_full(w);
    const Mat<3> anti = me * ms + ms * me;
    const auto lib_anti = sym_anticomm(e, s);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) REQUIRE(lib_anti(i, j) == Catch::Approx(anti(i, j)).margin(1e-13));
    const auto lib_comm = skew_comm(w, s);
    Mat<3> mc;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        real v = 0;
        for (int k = 0; k < 3; ++k) v += mw(i, k) * ms(k, j) - ms(i, k) * mw(k, j);
        mc(i, j) = v;
      }
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) REQUIRE(lib_comm(i, j) == Catch::Approx(mc(i, j)).margin(1e-13));
  }
}

TEST_CASE("closed-form inverse solves to identity and rejects singular input", "[tensor]") {
  std::mt19937 rng(10);
  for (int rep = 0; rep < 10; ++rep) {
    auto s = oracles::random_sym<3>(rng, 1.0);
    s.at(0, 0) += 4;  // make it comfortably nonsingular
    s.at(1, 1) += 4;
    s.at(2, 2) += 4;
    const auto inv = inverse(s);
    const Mat<3> prod = full_of(s) * full_of(inv);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        REQUIRE(prod(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-12));
  }
  SymTensor<2> sing;
  sing.at(0, 0) = 1;
  sing.at(0, 1) = 1;
  sing.at(1, 1) = 1;  // det 0
  REQUIRE_THROWS_AS(inverse(sing), std::domain_error);
}

TEST_CASE("sym_unit sets one packed component including its mirror", "[tensor]") {
  const auto u = sym_unit<3>(1);  // xy component
  REQUIRE(u(0, 1) == 1.0);
  REQUIRE(u(1, 0) == 1.0);
  REQUIRE(u(0, 0) == 0.0);
  REQUIRE(frob_inner(u, u) == 2.0);
}
