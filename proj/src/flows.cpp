#include "torusmix/flows.hpp"

namespace torusmix::flows {

Vec2<double> shear_velocity(const ShearSpec& s, const PointD& x) {
  check(s);
  double v = shear_sign(s, x) > 0 ? 1.0 : -1.0;
  return s.i == 1 ? Vec2<double>{v, 0.0} : Vec2<double>{0.0, v};
}

namespace {

void check_cancel_hypotheses(const ShearSpec& s1, const Rational& tau1,
                             const ShearSpec& s2, const Rational& tau2) {
  check(s1);
  check(s2);
  if (s1.i == s2.i)
    throw std::domain_error("cancellation: need i1 != i2");
  if (Rational(2) * tau2 != rat(1, 2 * (long)s1.L))
    throw std::domain_error("cancellation: need 2*tau2 = 1/(2*L1)");
  if (!is_odd_integer(Rational(2 * (long)s2.L) * tau1))
    throw std::domain_error("cancellation: need 2*L2*tau1 an odd integer");
}

template <class S>
TorusPoint<S> cancellation_compose_impl(const ShearSpec& s1, const S& tau1,
                                        const ShearSpec& s2, const S& tau2,
                                        const TorusPoint<S>& x) {
  TorusPoint<S> y = shear_map(s1, tau1, x);
  y = shear_map(s2, tau2, y);
  y = shear_map(s2, tau2, y);
  y = shear_map(s1, tau1, y);
  y = shear_map(s2, tau2, y);
  y = shear_map(s2, tau2, y);
  return y;
}

}  // namespace

PointQ cancellation_compose(const ShearSpec& s1, const Rational& tau1,
                            const ShearSpec& s2, const Rational& tau2,
                            const PointQ& x) {
  check_cancel_hypotheses(s1, tau1, s2, tau2);
  return cancellation_compose_impl<Rational>(s1, tau1, s2, tau2, x);
}

PointD cancellation_compose(const ShearSpec& s1, const Rational& tau1,
                            const ShearSpec& s2, const Rational& tau2,
                            const PointD& x) {
  check_cancel_hypotheses(s1, tau1, s2, tau2);
  return cancellation_compose_impl<double>(s1, tau1.get_d(), s2, tau2.get_d(), x);
}

PointD cancellation_compose(const ShearSpec& s1, double tau1,
                            const ShearSpec& s2, double tau2, const PointD& x) {
  check(s1);
  check(s2);
  if (s1.i == s2.i) throw std::domain_error("cancellation: need i1 != i2");
  if (std::fabs(2.0 * tau2 * 2.0 * (double)s1.L - 1.0) > 1e-12)
    throw std::domain_error("cancellation: need 2*tau2 = 1/(2*L1)");
  double p = 2.0 * (double)s2.L * tau1;
  if (std::fabs(p - std::nearbyint(p)) > 1e-12 ||
      ((std::int64_t)std::nearbyint(p)) % 2 == 0)
    throw std::domain_error("cancellation: need 2*L2*tau1 an odd integer");
  return cancellation_compose_impl<double>(s1, tau1, s2, tau2, x);
}

Vec2<double> rect_rotation_velocity(double W, double H, const Vec2<double>& rel) {
  if (!(std::fabs(rel.x1) < W / 2 && std::fabs(rel.x2) < H / 2))
    throw std::domain_error("rect_rotation_velocity: point not inside rectangle");
  double m = std::min(W, H);
  double a1 = rel.x1 / W, a2 = rel.x2 / H;
  // diagonals go with the horizontal segments
  if (std::fabs(a2) >= std::fabs(a1))
    return {-2.0 * m * rel.x2 / (H * H), 0.0};
  return {0.0, 2.0 * m * rel.x1 / (W * W)};
}

namespace {

// segment ids counterclockwise: 0 right, 1 top, 2 left, 3 bottom
template <class S>
Vec2<S> segment_point(int seg, const S& sigma, const S& rw, const S& rh) {
  S one = ScalarOps<S>::from_int(1);
  S two = ScalarOps<S>::from_int(2);
  switch (seg) {
    case 0: return {rw, rh * (two * sigma - one)};
    case 1: return {rw * (one - two * sigma), rh};
    case 2: return {-rw, rh * (one - two * sigma)};
    default: return {rw * (two * sigma - one), -rh};
  }
}

}  // namespace

template <class S>
Vec2<S> rect_rotation_map(const S& W, const S& H, const S& t, const Vec2<S>& rel) {
  using Ops = ScalarOps<S>;
  S zero{};
  S one = Ops::from_int(1);
  S two = Ops::from_int(2);
  if (t == zero) return rel;
  S a1 = rel.x1 / W, a2 = rel.x2 / H;
  S rho = Ops::abs(a1) > Ops::abs(a2) ? Ops::abs(a1) : Ops::abs(a2);
  if (rho == zero) return rel;  // centre is a fixed point
  if (two * rho > one)
    throw std::domain_error("rect_rotation_map: point not inside rectangle");

  int seg;
  S sigma;
  if (Ops::abs(a2) >= Ops::abs(a1)) {  // includes diagonals
    if (a2 > zero) { seg = 1; sigma = (one - a1 / rho) / two; }
    else           { seg = 3; sigma = (a1 / rho + one) / two; }
  } else {
    if (a1 > zero) { seg = 0; sigma = (a2 / rho + one) / two; }
    else           { seg = 2; sigma = (one - a2 / rho) / two; }
  }

  // one segment per time max{W,H}, uniformly in the level rho
  S tseg = W > H ? W : H;
  S phase = (Ops::from_int(seg) + sigma) + t / tseg;
  S four = Ops::from_int(4);
  phase = phase - four * Ops::from_int(Ops::floor_i(phase / four));
  if (phase < zero) phase = phase + four;
  else if (!(phase < four)) phase = phase - four;
  std::int64_t nseg = Ops::floor_i(phase);
  if (nseg > 3) nseg = 3;
  S nsigma = phase - Ops::from_int(nseg);
  return segment_point<S>((int)nseg, nsigma, rho * W, rho * H);
}

template Vec2<double> rect_rotation_map<double>(const double&, const double&,
                                                const double&, const Vec2<double>&);
template Vec2<Rational> rect_rotation_map<Rational>(const Rational&, const Rational&,
                                                    const Rational&,
                                                    const Vec2<Rational>&);

void check(const SwapSpec& s) {
  if (s.i != 1 && s.i != 2) throw std::domain_error("SwapSpec: i in {1,2}");
  if (s.k < 1 || s.k > 60) throw std::domain_error("SwapSpec: k out of range");
  if (s.n < 1 || s.n > (std::int64_t(1) << (s.k / 2)))
    throw std::domain_error("SwapSpec: need 1 <= n <= 2^floor(k/2)");
  if (s.L < s.k + 1) throw std::domain_error("SwapSpec: need L >= k+1");
}

namespace {

// Geometry of the active flip rectangle around coordinate v in [0,1).
// Returns false off the strip or in the margins. Outputs are exact
// dyadics so both scalar modes share one analysis.
struct FlipCell {
  Dyadic rect_cx;   // centre of the phase-1 rectangle
  Dyadic rect_w;    // its width 2^-k
};

template <class S>
bool locate_cell(const SwapSpec& s, const S& v, FlipCell* out) {
  using Ops = ScalarOps<S>;
  int fl = s.k / 2;
  S lo = Ops::from_dyadic(Dyadic(s.n - 1, fl));
  S hi = Ops::from_dyadic(Dyadic(s.n, fl));
  if (!(v >= lo) || !(v < hi)) return false;  // half-open strip
  std::int64_t ci = Ops::floor_i(v * Ops::from_int(std::int64_t(1) << (s.k - 1)));
  Dyadic c(ci, s.k - 1);
  out->rect_w = Dyadic::pow2(-s.k);
  out->rect_cx = c + Dyadic::pow2(-s.k);
  return true;
}

// Phase-1/phase-2 rectangle around (v, w):half-width about cx,
// vertical strips of height 2^-L with alternating orientation.
template <class S>
struct LocalRect {
  bool active = false;
  S cx{}, cy{};   // rectangle centre
  S W{}, H{};
  int orientation = 1;  // +1 even strip, -1 odd strip
};

template <class S>
LocalRect<S> locate_rect(const SwapSpec& s, int phase, const S& v, const S& w) {
  using Ops = ScalarOps<S>;
  LocalRect<S> r;
  FlipCell cell;
  if (!locate_cell(s, v, &cell)) return r;
  S cx = Ops::from_dyadic(cell.rect_cx);
  S half_w = Ops::from_dyadic(cell.rect_w) / Ops::from_int(2);
  if (!(Ops::abs(v - cx) < half_w)) return r;  // margins are quiescent
  std::int64_t j = Ops::floor_i(w * Ops::from_int(std::int64_t(1) << s.L));
  r.orientation = (j % 2 == 0) ? 1 : -1;
  r.H = Ops::from_dyadic(Dyadic::pow2(-s.L));
  r.cy = Ops::from_dyadic(Dyadic(2 * j + 1, (int)s.L + 1));
  if (phase == 1) {
    r.cx = cx;
    r.W = half_w * Ops::from_int(2);
  } else {
    r.W = half_w;
    S quarter = half_w / Ops::from_int(2);
    if (v < cx) r.cx = cx - quarter;
    else r.cx = cx + quarter;
  }
  r.active = true;
  return r;
}

template <class S>
TorusPoint<S> apply_phase(const SwapSpec& s, int phase, const S& dur,
                          const TorusPoint<S>& x) {
  if (dur == S{}) return x;
  const S& v = (s.i == 1) ? x.x1 : x.x2;
  const S& w = (s.i == 1) ? x.x2 : x.x1;
  LocalRect<S> r = locate_rect<S>(s, phase, v, w);
  if (!r.active) return x;
  S d = dur;
  if (r.orientation < 0) d = -d;
  Vec2<S> rel{v - r.cx, w - r.cy};
  Vec2<S> out = rect_rotation_map<S>(r.W, r.H, d, rel);
  S nv = out.x1 + r.cx, nw = out.x2 + r.cy;
  if (s.i == 1) return TorusPoint<S>::wrapped(nv, nw);
  return TorusPoint<S>::wrapped(nw, nv);
}

}  // namespace

Vec2<double> swap_velocity(const SwapSpec& s, double t, const PointD& x) {
  check(s);
  double W = std::ldexp(1.0, -s.k);
  if (t < 0.0 || t > 3.0 * W)
    throw std::domain_error("swap_velocity: t outside [0, 3*2^-k]");
  int phase = (t < 2.0 * W) ? 1 : 2;
  double v = (s.i == 1) ? x.x1 : x.x2;
  double w = (s.i == 1) ? x.x2 : x.x1;
  LocalRect<double> r = locate_rect<double>(s, phase, v, w);
  if (!r.active) return {0.0, 0.0};
  Vec2<double> rel{v - r.cx, w - r.cy};
  if (!(std::fabs(rel.x1) < r.W / 2 && std::fabs(rel.x2) < r.H / 2))
    return {0.0, 0.0};  // rectangle edges carry no defined velocity
  Vec2<double> u = rect_rotation_velocity(r.W, r.H, rel);
  if (r.orientation < 0) { u.x1 = -u.x1; u.x2 = -u.x2; }
  if (s.i == 2) std::swap(u.x1, u.x2);
  return u;
}

template <class S>
TorusPoint<S> swap_flow(const SwapSpec& s, const S& a, const S& b,
                        const TorusPoint<S>& x) {
  using Ops = ScalarOps<S>;
  check(s);
  S zero{};
  S W = Ops::from_dyadic(Dyadic::pow2(-s.k));
  S split = W + W;
  S horizon = split + W;
  if (a < zero || b < zero || a > horizon || b > horizon)
    throw std::domain_error("swap_flow: time outside [0, 3*2^-k]");
  TorusPoint<S> y = x;
  if (b >= a) {
    if (a < split) {
      S upto = b < split ? b : split;
      y = apply_phase<S>(s, 1, upto - a, y);
    }
    if (b > split) {
      S from = a > split ? a : split;
      y = apply_phase<S>(s, 2, b - from, y);
    }
  } else {
    if (a > split) {
      S downto = b > split ? b : split;
      y = apply_phase<S>(s, 2, downto - a, y);
    }
    if (b < split) {
      S from = a < split ? a : split;
      y = apply_phase<S>(s, 1, b - from, y);
    }
  }
  return y;
}

template TorusPoint<double> swap_flow<double>(const SwapSpec&, const double&,
                                              const double&,
                                              const TorusPoint<double>&);
template TorusPoint<Rational> swap_flow<Rational>(const SwapSpec&, const Rational&,
                                                  const Rational&,
                                                  const TorusPoint<Rational>&);

namespace {

template <class S>
S transpose_digits(int k, const S& v) {
  using Ops = ScalarOps<S>;
  std::int64_t bk = Ops::floor_i(v * Ops::from_int(std::int64_t(1) << k)) & 1;
  std::int64_t bk1 = Ops::floor_i(v * Ops::from_int(std::int64_t(1) << (k + 1))) & 1;
  if (bk == bk1) return v;
  S step = Ops::from_dyadic(Dyadic(bk1 - bk, k + 1));
  return v + step;
}

}  // namespace

template <class S>
TorusPoint<S> swap_endpoint(const SwapSpec& s, const TorusPoint<S>& x) {
  using Ops = ScalarOps<S>;
  check(s);
  const S& v = (s.i == 1) ? x.x1 : x.x2;
  int fl = s.k / 2;
  S lo = Ops::from_dyadic(Dyadic(s.n - 1, fl));
  S hi = Ops::from_dyadic(Dyadic(s.n, fl));
  if (!(v >= lo) || !(v < hi)) return x;
  S nv = transpose_digits<S>(s.k, v);
  if (s.i == 1) return {nv, x.x2};
  return {x.x1, nv};
}

template TorusPoint<double> swap_endpoint<double>(const SwapSpec&,
                                                  const TorusPoint<double>&);
template TorusPoint<Rational> swap_endpoint<Rational>(const SwapSpec&,
                                                      const TorusPoint<Rational>&);

}  // namespace torusmix::flows
