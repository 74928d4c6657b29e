#pragma once

// Scalar prefactor functions for the spectral kernels, with Taylor guards
// around removable singularities and small divided-difference denominators.
//
// f(x) = x/tanh(x/2) and its derivatives feed the elongation kernels.
// b(t) = coth(t/2) - 2/t is the pole-free part used by the difference-quotient
// rewriting of the second four-index prefactor; f(t) = 2 + t*b(t).
// dd_exp / dd2_exp are first/second divided differences of lambda -> exp(-lambda).
//
// Guard policy: divided differences switch to a midpoint Taylor form
//   (g(x)-g(y))/(x-y) ~ g'(m) + (x-y)^2/24 g'''(m),  m=(x+y)/2
// below dd_small, and the derivative functions themselves switch to series
// below arg_small.  The kernels of the Newton matrix use the tighter
// *_newton thresholds.

#include <cmath>
#include <cstdint>
#include <algorithm>

namespace logmorph {

struct GuardThresholds {
  double dd_small = 1e-2;         // residual-path divided differences
  double arg_small = 1e-1;        // residual-path derivative arguments
  double dd_small_newton = 1e-3;  // exp divided differences in the Newton matrix
  double arg_small_newton = 1e-3;
};

struct GuardCounters {
  std::uint64_t dd_taylor = 0;
  std::uint64_t arg_taylor = 0;
  std::uint64_t dd_taylor_newton = 0;
  std::uint64_t arg_taylor_newton = 0;
};

inline GuardCounters& guard_counters() {
  thread_local GuardCounters c;
  return c;
}
inline void reset_guard_counters() { guard_counters() = GuardCounters{}; }

// ---------------------------------------------------------------- f family

inline double func_f(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 2.0 + x2 / 6.0 - x2 * x2 / 360.0;
  }
  return x / std::tanh(0.5 * x);
}

inline double f_d1(double x, double arg_small) {
  if (std::abs(x) < arg_small) {
    guard_counters().arg_taylor++;
    return x / 3.0 - x * x * x / 90.0;
  }
  const double s = std::sinh(0.5 * x);
  return 1.0 / std::tanh(0.5 * x) - 0.5 * x / (s * s);
}

inline double f_d2(double x, double arg_small) {
  if (std::abs(x) < arg_small) {
    guard_counters().arg_taylor++;
    const double x2 = x * x;
    return 1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 504.0;
  }
  const double s = std::sinh(0.5 * x), c = std::cosh(0.5 * x);
  const double s2 = s * s;
  return -1.0 / s2 + 0.5 * x * c / (s2 * s);
}

inline double f_d3(double x, double arg_small) {
  if (std::abs(x) < arg_small) {
    guard_counters().arg_taylor++;
    return -x / 15.0 + x * x * x / 126.0;
  }
  const double s = std::sinh(0.5 * x), c = std::cosh(0.5 * x);
  const double s2 = s * s;
  return 1.5 * c / (s2 * s) + 0.25 * x / s2 - 0.75 * x * c * c / (s2 * s2);
}

inline double f_d4(double x, double arg_small) {
  if (std::abs(x) < arg_small) {
    guard_counters().arg_taylor++;
    const double x2 = x * x;
    return -1.0 / 15.0 + x2 / 42.0 - x2 * x2 / 360.0;
  }
  const double s = std::sinh(0.5 * x), c = std::cosh(0.5 * x);
  const double s2 = s * s, s4 = s2 * s2;
  return 1.0 / s2 - 3.0 * c * c / s4 - x * c / (s2 * s) + 1.5 * x * c * c * c / (s4 * s);
}

// First divided difference (f(x)-f(y))/(x-y).
inline double ddf(double x, double y, const GuardThresholds& g) {
  const double d = x - y;
  if (std::abs(d) < g.dd_small) {
    guard_counters().dd_taylor++;
    const double m = 0.5 * (x + y);
    return f_d1(m, g.arg_small) + d * d / 24.0 * f_d3(m, g.arg_small);
  }
  return (func_f(x) - func_f(y)) / d;
}

// ---------------------------------------------------------------- b family

inline double func_b(double t) {
  if (std::abs(t) < 0.2) {
    const double t2 = t * t;
    return t * (1.0 / 6.0 + t2 * (-1.0 / 360.0 + t2 * (1.0 / 15120.0
             + t2 * (-1.0 / 604800.0 + t2 / 23950080.0))));
  }
  return 1.0 / std::tanh(0.5 * t) - 2.0 / t;
}

inline double b_d1(double t, double arg_small) {
  if (std::abs(t) < arg_small) {
    guard_counters().arg_taylor++;
    const double t2 = t * t;
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 3024.0;
  }
  const double s = std::sinh(0.5 * t);
  return 2.0 / (t * t) - 0.5 / (s * s);
}

inline double b_d2(double t, double arg_small) {
  if (std::abs(t) < arg_small) {
    guard_counters().arg_taylor++;
    return -t / 60.0 + t * t * t / 756.0;
  }
  const double s = std::sinh(0.5 * t), c = std::cosh(0.5 * t);
  return 0.5 * c / (s * s * s) - 4.0 / (t * t * t);
}

inline double b_d3(double t, double arg_small) {
  if (std::abs(t) < arg_small) {
    guard_counters().arg_taylor++;
    const double t2 = t * t;
    return -1.0 / 60.0 + t2 / 252.0 - t2 * t2 / 2880.0;
  }
  const double s = std::sinh(0.5 * t), c = std::cosh(0.5 * t);
  const double s2 = s * s, t4 = t * t * t * t;
  return 12.0 / t4 + 0.25 / s2 - 0.75 * c * c / (s2 * s2);
}

inline double b_d4(double t, double arg_small) {
  if (std::abs(t) < arg_small) {
    guard_counters().arg_taylor++;
    return t / 126.0 - t * t * t / 720.0;
  }
  const double s = std::sinh(0.5 * t), c = std::cosh(0.5 * t);
  const double s2 = s * s, t5 = t * t * t * t * t;
  return -48.0 / t5 - c / (s2 * s) + 1.5 * c * c * c / (s2 * s2 * s);
}

inline double ddb(double x, double y, const GuardThresholds& g) {
  const double d = x - y;
  if (std::abs(d) < g.dd_small) {
    guard_counters().dd_taylor++;
    const double m = 0.5 * (x + y);
    return b_d1(m, g.arg_small) + d * d / 24.0 * b_d3(m, g.arg_small);
  }
  return (func_b(x) - func_b(y)) / d;
}

// Second divided difference b[x,y,z].  Branches: well-separated recursion,
// one close pair, or all-close simplex expansion
//   b[x,y,z] ~ b''(c)/2 + b''''(c)*(sum of squared deviations)/48.
inline double dd2b(double x, double y, double z, const GuardThresholds& g) {
  double a0 = x, a1 = y, a2 = z;
  // order so (a0,a1) is the closest pair and a2 the isolated point
  const double gxy = std::abs(x - y), gyz = std::abs(y - z), gzx = std::abs(z - x);
  if (gyz <= gxy && gyz <= gzx) { a0 = y; a1 = z; a2 = x; }
  else if (gzx <= gxy && gzx <= gyz) { a0 = z; a1 = x; a2 = y; }

  const double gap = a0 - a1;
  if (std::abs(gap) >= g.dd_small)
    return (ddb(a0, a2, g) - ddb(a1, a2, g)) / gap;

  guard_counters().dd_taylor++;
  const double m = 0.5 * (a0 + a1);
  const double u = m - a2;
  if (std::abs(u) < 3.0 * g.dd_small) {
    // all three close together
    const double c = (x + y + z) / 3.0;
    const double ux = x - c, uy = y - c, uz = z - c;
    return 0.5 * b_d2(c, g.arg_small)
         + b_d4(c, g.arg_small) * (ux * ux + uy * uy + uz * uz) / 48.0;
  }
  // d/dt and d^3/dt^3 of (b(t)-b(a2))/(t-a2) at t=m
  const double bm = func_b(m), b2v = func_b(a2);
  const double b1 = b_d1(m, g.arg_small), b2d = b_d2(m, g.arg_small);
  const double b3 = b_d3(m, g.arg_small);
  const double u2 = u * u;
  const double phi1 = (b1 * u - (bm - b2v)) / u2;
  const double phi3 = (b3 * u * u2 - 3.0 * b2d * u2 + 6.0 * b1 * u - 6.0 * (bm - b2v)) / (u2 * u2);
  return phi1 + gap * gap / 24.0 * phi3;
}

// L_alpha2 three-index prefactor (f(li-lk) - f(lj-lk)) / (li-lj).
inline double q_prefactor(double li, double lj, double lk, const GuardThresholds& g) {
  return ddf(li - lk, lj - lk, g);
}

// Four-index prefactor of the second sum in the L_alpha2 directional
// derivative: the second divided difference of f over
// (li-ll, lj-ll, lk-ll), evaluated through the difference quotients of b:
//   f[x,y,z] = ( b[x,y] + b[y,z] + b[z,x] + (x+y+z) b[x,y,z] ) / 3.
inline double p2_prefactor(double li, double lj, double lk, double ll,
                           const GuardThresholds& g) {
  const double x = li - ll, y = lj - ll, z = lk - ll;
  return (ddb(x, y, g) + ddb(y, z, g) + ddb(z, x, g)
          + (x + y + z) * dd2b(x, y, z, g)) / 3.0;
}

// Four-index prefactor of the third sum:
//   (f(li-lk) - f(lj-lk) - f(li-ll) + f(lj-ll)) / ((li-lj)(lk-ll)).
// Double Taylor form when both denominators are small:
//   -f''(M) - f''''(M) * ((li-lj)^2 + (lk-ll)^2)/24,  M=(lk+ll-li-lj)/2.
inline double p3_prefactor(double li, double lj, double lk, double ll,
                           const GuardThresholds& g) {
  const double dij = li - lj, dkl = lk - ll;
  if (std::abs(dij) < g.dd_small && std::abs(dkl) < g.dd_small) {
    guard_counters().dd_taylor++;
    const double M = 0.5 * (lk + ll - li - lj);
    return -f_d2(M, g.arg_small)
           - f_d4(M, g.arg_small) * (dij * dij + dkl * dkl) / 24.0;
  }
  if (std::abs(dkl) >= g.dd_small)
    return (ddf(li - lk, lj - lk, g) - ddf(li - ll, lj - ll, g)) / dkl;
  // dij comfortably large, dkl small: use the pair symmetry and difference in dij
  return (ddf(lk - li, ll - li, g) - ddf(lk - lj, ll - lj, g)) / dij;
}

// ------------------------------------------------- exp divided differences

inline double sinhc(double s) {
  if (std::abs(s) < 0.1) {
    const double s2 = s * s;
    return 1.0 + s2 / 6.0 + s2 * s2 / 120.0 + s2 * s2 * s2 / 5040.0;
  }
  return std::sinh(s) / s;
}

inline double sinhc_d1(double s, double arg_small, bool newton_path) {
  if (std::abs(s) < arg_small) {
    if (newton_path) guard_counters().arg_taylor_newton++;
    const double s2 = s * s;
    return s / 3.0 + s2 * s / 30.0 + s2 * s2 * s / 840.0;
  }
  return std::cosh(s) / s - std::sinh(s) / (s * s);
}

inline double sinhc_d2(double s, double arg_small, bool newton_path) {
  if (std::abs(s) < arg_small) {
    if (newton_path) guard_counters().arg_taylor_newton++;
    const double s2 = s * s;
    return 1.0 / 3.0 + s2 / 10.0 + s2 * s2 / 168.0;
  }
  const double sh = std::sinh(s), ch = std::cosh(s), s2 = s * s;
  return sh / s - 2.0 * ch / s2 + 2.0 * sh / (s2 * s);
}

inline double sinhc_d3(double s, double arg_small, bool newton_path) {
  if (std::abs(s) < arg_small) {
    if (newton_path) guard_counters().arg_taylor_newton++;
    const double s2 = s * s;
    return s / 5.0 + s2 * s / 42.0 + s2 * s2 * s / 1080.0;
  }
  const double sh = std::sinh(s), ch = std::cosh(s), s2 = s * s;
  return ch / s - 3.0 * sh / s2 + 6.0 * ch / (s2 * s) - 6.0 * sh / (s2 * s2);
}

// (exp(-x) - exp(-y))/(x - y) = -exp(-(x+y)/2) * sinhc((x-y)/2).
// The product form is stable for every x, y.
inline double dd_exp(double x, double y) {
  return -std::exp(-0.5 * (x + y)) * sinhc(0.5 * (x - y));
}

// Second divided difference of exp(-lambda) over (x,y,z):
//   sum_i exp(-l_i) / prod_{j != i} (l_i - l_j).
// Uses the Newton-path thresholds.  phi_c(t) = dd_exp(t,c) has
//   phi^(n)(t) = -(1/2^n) exp(-(t+c)/2) * (d/ds - 1)^n sinhc(s), s=(t-c)/2.
inline double dd2_exp(double x, double y, double z, const GuardThresholds& g) {
  double a0 = x, a1 = y, a2 = z;
  const double gxy = std::abs(x - y), gyz = std::abs(y - z), gzx = std::abs(z - x);
  const double gmin = std::min({gxy, gyz, gzx});

  if (gmin >= g.dd_small_newton) {
    // widest gap in the denominator for the least cancellation
    if (gyz >= gxy && gyz >= gzx) { a0 = y; a1 = z; a2 = x; }
    else if (gzx >= gxy && gzx >= gyz) { a0 = z; a1 = x; a2 = y; }
    return (dd_exp(a0, a2) - dd_exp(a1, a2)) / (a0 - a1);
  }

  guard_counters().dd_taylor_newton++;
  if (gyz <= gxy && gyz <= gzx) { a0 = y; a1 = z; a2 = x; }
  else if (gzx <= gxy && gzx <= gyz) { a0 = z; a1 = x; a2 = y; }
  const double m = 0.5 * (a0 + a1);
  const double s = 0.5 * (m - a2);
  const double ex = std::exp(-0.5 * (m + a2));
  const double g0 = sinhc(s);
  const double g1 = sinhc_d1(s, g.arg_small_newton, true);
  const double g2 = sinhc_d2(s, g.arg_small_newton, true);
  const double g3 = sinhc_d3(s, g.arg_small_newton, true);
  const double phi1 = 0.5 * ex * (g0 - g1);
  const double phi3 = 0.125 * ex * (g0 - 3.0 * g1 + 3.0 * g2 - g3);
  const double gap = a0 - a1;
  return phi1 + gap * gap / 24.0 * phi3;
}

}  // namespace logmorph
