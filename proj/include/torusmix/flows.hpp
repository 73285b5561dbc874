#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "torusmix/exact.hpp"

namespace torusmix::flows {

// Scalar plug: double for PDE-facing evaluation, Rational for the
// identity-level checks. floor_i carries the float-mode nudge rule so a
// coordinate within 1e-13 of a dyadic breakpoint lands deterministically.
template <class S>
struct ScalarOps;

template <>
struct ScalarOps<double> {
  static double from_dyadic(const Dyadic& d) { return d.to_double(); }
  static double from_rational(const Rational& r) { return r.get_d(); }
  static double from_int(std::int64_t n) { return double(n); }
  static std::int64_t floor_i(double v) {
    double r = std::nearbyint(v);
    if (std::fabs(v - r) < 1e-13) return (std::int64_t)r;
    return (std::int64_t)std::floor(v);
  }
  static double mod1(double v) {
    double w = v - std::floor(v);
    if (w >= 1.0) w -= 1.0;
    if (w < 0.0) w += 1.0;
    return w;
  }
  static double abs(double v) { return std::fabs(v); }
};

template <>
struct ScalarOps<Rational> {
  static Rational from_dyadic(const Dyadic& d) { return d.to_rational(); }
  static Rational from_rational(const Rational& r) { return r; }
  static Rational from_int(std::int64_t n) { return Rational((long)n); }
  static std::int64_t floor_i(const Rational& v) { return floor_long(v); }
  static Rational mod1(const Rational& v) { return torusmix::mod1(v); }
  static Rational abs(const Rational& v) { return ::abs(v); }
};

template <class S>
struct Vec2 {
  S x1{}, x2{};
};

// Point on the torus, coordinates reduced mod 1 into [0,1).
template <class S>
struct TorusPoint {
  S x1{}, x2{};
  static TorusPoint wrapped(const S& a, const S& b) {
    return {ScalarOps<S>::mod1(a), ScalarOps<S>::mod1(b)};
  }
};

using PointD = TorusPoint<double>;
using PointQ = TorusPoint<Rational>;

// (i;L)-shear: +-e_i in alternating strips of width 1/(2L) in the other
// coordinate, half-open [m/2L,(m+1)/2L).
struct ShearSpec {
  int i = 1;
  std::int64_t L = 1;
};

inline void check(const ShearSpec& s) {
  if ((s.i != 1 && s.i != 2) || s.L < 1)
    throw std::domain_error("ShearSpec: i in {1,2}, L >= 1");
}

// Strip parity sign at the transverse coordinate.
template <class S>
int shear_sign(const ShearSpec& s, const TorusPoint<S>& x) {
  const S& trans = (s.i == 1) ? x.x2 : x.x1;
  std::int64_t m = ScalarOps<S>::floor_i(trans * ScalarOps<S>::from_int(2 * s.L));
  return (m % 2 == 0) ? 1 : -1;
}

Vec2<double> shear_velocity(const ShearSpec& s, const PointD& x);

template <class S>
TorusPoint<S> shear_map(const ShearSpec& s, const S& t, const TorusPoint<S>& x) {
  check(s);
  S d = t;
  if (shear_sign(s, x) < 0) d = -d;
  if (s.i == 1) return TorusPoint<S>::wrapped(x.x1 + d, x.x2);
  return TorusPoint<S>::wrapped(x.x1, x.x2 + d);
}

// 4-fold composition of Prop.-style cancelling shears. Preconditions:
// i1 != i2, 2*tau2 = 1/(2*L1), 2*L2*tau1 an odd integer; violation throws
// naming the failed hypothesis.
PointQ cancellation_compose(const ShearSpec& s1, const Rational& tau1,
                            const ShearSpec& s2, const Rational& tau2,
                            const PointQ& x);
// exact hypotheses, double evaluation
PointD cancellation_compose(const ShearSpec& s1, const Rational& tau1,
                            const ShearSpec& s2, const Rational& tau2,
                            const PointD& x);
// doubles only: hypotheses verified within 1e-12 of the rational identities
PointD cancellation_compose(const ShearSpec& s1, double tau1,
                            const ShearSpec& s2, double tau2, const PointD& x);

// Rectangle rotation in coordinates relative to the rectangle centre.
// Stream function min{W,H} * max{(x1/W)^2,(x2/H)^2}; every flow line
// traverses one triangular segment per time max{W,H}, so t = 2*max{W,H}
// is exactly the half rotation. Diagonal points belong to the
// horizontal (top/bottom) segments.
Vec2<double> rect_rotation_velocity(double W, double H, const Vec2<double>& rel);

template <class S>
Vec2<S> rect_rotation_map(const S& W, const S& H, const S& t, const Vec2<S>& rel);

struct Rect {
  Vec2<double> center;
  double W = 1, H = 1;
};

// (i,k,n;L)-binary swap, L >= k+1. Zero off the strip J_{k,n} x T; inside,
// each width 2^(1-k) cell hosts a width 2^-k flip rectangle with margins
// 2^(-k-1): phase one ([0, 2^(1-k))) rotates full-width strips of height
// 2^-L, phase two ([2^(1-k), 3*2^-k]) rotates their left/right halves;
// orientation alternates per strip, u(x + 2^-L e_ihat, t) = -u(x, t).
// Endpoint at t = 3*2^-k swaps binary digits k,k+1 of x_i on J_{k,n}.
struct SwapSpec {
  int i = 1;
  int k = 1;
  std::int64_t n = 1;
  std::int64_t L = 2;
};

void check(const SwapSpec& s);

Vec2<double> swap_velocity(const SwapSpec& s, double t, const PointD& x);

// Flow of the swap field from local time a to local time b (either
// order; b < a runs the inverse). Both times in [0, 3*2^-k].
template <class S>
TorusPoint<S> swap_flow(const SwapSpec& s, const S& a, const S& b,
                        const TorusPoint<S>& x);

template <class S>
TorusPoint<S> swap_map(const SwapSpec& s, const S& t, const TorusPoint<S>& x) {
  return swap_flow(s, S{}, t, x);
}

// Exact digit transposition the swap realises at its final time.
template <class S>
TorusPoint<S> swap_endpoint(const SwapSpec& s, const TorusPoint<S>& x);

// Left shift of both binary expansions by m digits: x -> 2^m x mod 1.
template <class S>
TorusPoint<S> digit_shift(int m, const TorusPoint<S>& x) {
  if (m < 0) throw std::domain_error("digit_shift: m >= 0");
  S f = ScalarOps<S>::from_int(std::int64_t(1) << m);
  return TorusPoint<S>::wrapped(x.x1 * f, x.x2 * f);
}

extern template Vec2<double> rect_rotation_map<double>(const double&, const double&,
                                                       const double&,
                                                       const Vec2<double>&);
extern template Vec2<Rational> rect_rotation_map<Rational>(const Rational&,
                                                           const Rational&,
                                                           const Rational&,
                                                           const Vec2<Rational>&);
extern template TorusPoint<double> swap_flow<double>(const SwapSpec&, const double&,
                                                     const double&,
                                                     const TorusPoint<double>&);
extern template TorusPoint<Rational> swap_flow<Rational>(const SwapSpec&,
                                                         const Rational&,
                                                         const Rational&,
                                                         const TorusPoint<Rational>&);
extern template TorusPoint<double> swap_endpoint<double>(const SwapSpec&,
                                                         const TorusPoint<double>&);
extern template TorusPoint<Rational> swap_endpoint<Rational>(
    const SwapSpec&, const TorusPoint<Rational>&);

}  // namespace torusmix::flows
