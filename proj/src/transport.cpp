#include "torusmix/transport.hpp"

#include <algorithm>

#include "torusmix/schedule.hpp"
#include "torusmix/util.hpp"

namespace torusmix::transport {

using flows::PointD;
using flows::PointQ;
using flows::ScalarOps;
using flows::TorusPoint;
using schedule::QuadIndex;
using schedule::ScheduleEntry;

namespace {

void push_segment(FlowProgram& prog, const Rational& t0, const Rational& t1,
                  Primitive prim, bool reversed, int level) {
  if (!(t1 > t0)) return;
  Segment s;
  s.t0 = t0;
  s.t1 = t1;
  s.t0d = t0.get_d();
  s.t1d = t1.get_d();
  s.prim = std::move(prim);
  s.reversed = reversed;
  s.level = level;
  prog.segments.push_back(std::move(s));
}

// Fill [0,horizon] with the given timed slots plus identity gaps.
template <class MakePrim>
FlowProgram assemble(const std::vector<ScheduleEntry>& slots, Rational horizon,
                     MakePrim make) {
  FlowProgram prog;
  prog.horizon = horizon;
  prog.horizond = horizon.get_d();
  Rational cursor(0);
  for (const ScheduleEntry& e : slots) {
    Rational t0 = e.start.to_rational();
    Rational t1 = t0 + e.duration;
    if (t0 > cursor) push_segment(prog, cursor, t0, IdentityPrim{}, false, 0);
    auto [prim, level] = make(e);
    push_segment(prog, t0, t1, std::move(prim), false, level);
    cursor = t1;
  }
  if (horizon > cursor)
    push_segment(prog, cursor, horizon, IdentityPrim{}, false, 0);
  return prog;
}

}  // namespace

FlowProgram compile_fractal(const composite::FractalSpec& spec) {
  std::vector<Rational> taus;
  for (const auto& tp : spec.levels) taus.push_back(tp.tau);
  auto slots = schedule::generate_schedule_dyadic(spec.K(), taus);
  return assemble(slots, Rational(1), [&](const ScheduleEntry& e) {
    int k = std::get<schedule::DyadicPair>(e.payload).k;
    return std::make_pair(
        Primitive(ShearPrim{{spec.levels[k - 1].i, spec.levels[k - 1].L}}), k);
  });
}

FlowProgram compile_mixing(const composite::MixSpec& spec) {
  auto slots = schedule::generate_schedule_quad(spec.cutoff);
  return assemble(slots, Rational(50), [&](const ScheduleEntry& e) {
    const QuadIndex& q = std::get<QuadIndex>(e.payload);
    return std::make_pair(
        Primitive(SwapPrim{{q.i, q.k, q.n, spec.L_of(q)}}), q.k);
  });
}

FlowProgram compile_mirrored(const composite::MixSpec& spec) {
  FlowProgram half = compile_mixing(spec);
  FlowProgram prog;
  prog.horizon = Rational(100);
  prog.horizond = 100.0;
  prog.segments = half.segments;
  for (auto it = half.segments.rbegin(); it != half.segments.rend(); ++it) {
    Segment m = *it;
    m.t0 = Rational(100) - it->t1;
    m.t1 = Rational(100) - it->t0;
    m.t0d = m.t0.get_d();
    m.t1d = m.t1.get_d();
    m.reversed = !std::holds_alternative<IdentityPrim>(m.prim);
    prog.segments.push_back(std::move(m));
  }
  return prog;
}

template <class S>
TorusPoint<S> flow_in_segment(const Segment& seg, const S& from, const S& to,
                              const TorusPoint<S>& x) {
  if (from == to) return x;
  if (std::holds_alternative<IdentityPrim>(seg.prim)) return x;
  S st0 = ScalarOps<S>::from_rational(seg.t0);
  S st1 = ScalarOps<S>::from_rational(seg.t1);
  S a, b;
  if (!seg.reversed) {
    a = from - st0;
    b = to - st0;
  } else {
    a = st1 - from;
    b = st1 - to;
  }
  if (std::holds_alternative<ShearPrim>(seg.prim))
    return flows::shear_map(std::get<ShearPrim>(seg.prim).s, S(b - a), x);
  const flows::SwapSpec& sw = std::get<SwapPrim>(seg.prim).s;
  // a full swap traversal is exactly the digit transposition
  S dur = st1 - st0;
  if ((a == S{} && b == dur) || (a == dur && b == S{}))
    return flows::swap_endpoint(sw, x);
  return flows::swap_flow(sw, a, b, x);
}

template TorusPoint<double> flow_in_segment<double>(const Segment&, const double&,
                                                    const double&,
                                                    const TorusPoint<double>&);
template TorusPoint<Rational> flow_in_segment<Rational>(const Segment&,
                                                        const Rational&,
                                                        const Rational&,
                                                        const TorusPoint<Rational>&);

namespace {

template <class S>
TorusPoint<S> inverse_impl(const FlowProgram& prog, const S& t,
                           const TorusPoint<S>& x) {
  TorusPoint<S> y = x;
  for (auto it = prog.segments.rbegin(); it != prog.segments.rend(); ++it) {
    S st0 = ScalarOps<S>::from_rational(it->t0);
    if (!(st0 < t)) continue;
    S st1 = ScalarOps<S>::from_rational(it->t1);
    S hi = t < st1 ? t : st1;
    y = flow_in_segment<S>(*it, hi, st0, y);
  }
  return y;
}

template <class S>
TorusPoint<S> forward_impl(const FlowProgram& prog, const S& t,
                           const TorusPoint<S>& x) {
  TorusPoint<S> y = x;
  for (const Segment& seg : prog.segments) {
    S st0 = ScalarOps<S>::from_rational(seg.t0);
    if (!(st0 < t)) break;
    S st1 = ScalarOps<S>::from_rational(seg.t1);
    S hi = t < st1 ? t : st1;
    y = flow_in_segment<S>(seg, st0, hi, y);
  }
  return y;
}

void check_horizon(const FlowProgram& prog, double t) {
  if (t < 0.0 || t > prog.horizond + 1e-12)
    throw std::domain_error("flow evaluation beyond program horizon " +
                            std::to_string(prog.horizond));
}

}  // namespace

PointD inverse_flow_point(const FlowProgram& prog, double t, const PointD& x) {
  check_horizon(prog, t);
  return inverse_impl<double>(prog, t, x);
}

PointQ inverse_flow_point(const FlowProgram& prog, const Rational& t,
                          const PointQ& x) {
  if (t < 0 || t > prog.horizon)
    throw std::domain_error("flow evaluation beyond program horizon");
  return inverse_impl<Rational>(prog, t, x);
}

PointD forward_flow_point(const FlowProgram& prog, double t, const PointD& x) {
  check_horizon(prog, t);
  return forward_impl<double>(prog, t, x);
}

PointQ forward_flow_point(const FlowProgram& prog, const Rational& t,
                          const PointQ& x) {
  if (t < 0 || t > prog.horizon)
    throw std::domain_error("flow evaluation beyond program horizon");
  return forward_impl<Rational>(prog, t, x);
}

double lagrangian_value(const ScalarSampler& f0, const FlowProgram& prog,
                        const PointD& x, double t) {
  PointD y = inverse_flow_point(prog, t, x);
  return f0.f(y.x1, y.x2);
}

const Segment* segment_at(const FlowProgram& prog, double t) {
  const Segment* hit = nullptr;
  for (const Segment& s : prog.segments) {
    if (s.t0d <= t + 1e-15) hit = &s;
    else break;
  }
  return hit;
}

flows::Vec2<double> velocity_at(const FlowProgram& prog, double t,
                                const PointD& x) {
  check_horizon(prog, t);
  const Segment* seg = segment_at(prog, t);
  if (!seg || std::holds_alternative<IdentityPrim>(seg->prim) || t > seg->t1d)
    return {0.0, 0.0};
  if (std::holds_alternative<ShearPrim>(seg->prim)) {
    auto u = flows::shear_velocity(std::get<ShearPrim>(seg->prim).s, x);
    if (seg->reversed) { u.x1 = -u.x1; u.x2 = -u.x2; }
    return u;
  }
  const flows::SwapSpec& sw = std::get<SwapPrim>(seg->prim).s;
  double local = seg->reversed ? seg->t1d - t : t - seg->t0d;
  double cap = 3 * std::ldexp(1.0, -sw.k);
  local = std::min(std::max(local, 0.0), cap);
  auto u = flows::swap_velocity(sw, local, x);
  if (seg->reversed) { u.x1 = -u.x1; u.x2 = -u.x2; }
  return u;
}

grid::GridField snapshot(const ScalarSampler& f0, const FlowProgram& prog,
                         double t, int N) {
  check_horizon(prog, t);
  grid::GridField g(N);
  util::parallel_rows(N, [&](int row) {
    double x2 = g.cell_x2(row);
    for (int col = 0; col < N; ++col) {
      PointD y = inverse_impl<double>(prog, t, PointD{g.cell_x1(col), x2});
      g.at(row, col) = f0.f(y.x1, y.x2);
    }
  });
  return g;
}

grid::GridField snapshot_exact(const ScalarSampler& f0, const FlowProgram& prog,
                               const Rational& t, int N) {
  if (t < 0 || t > prog.horizon)
    throw std::domain_error("snapshot beyond program horizon");
  grid::GridField g(N);
  util::parallel_rows(N, [&](int row) {
    Rational x2 = Rational(2 * row + 1) / Rational(2 * (long)N);
    for (int col = 0; col < N; ++col) {
      Rational x1 = Rational(2 * col + 1) / Rational(2 * (long)N);
      PointQ y = inverse_impl<Rational>(prog, t, PointQ{x1, x2});
      g.at(row, col) = f0.f(y.x1.get_d(), y.x2.get_d());
    }
  });
  return g;
}

std::pair<grid::GridField, grid::GridField> even_odd_endpoints(
    const ScalarSampler& f0, const composite::FractalSpec& spec, int K_even,
    int K_odd, int N) {
  if (K_even % 2 != 0 || K_odd % 2 != 1)
    throw std::domain_error("even_odd_endpoints: parity of K arguments");
  if (K_even > spec.K() || K_odd > spec.K())
    throw std::domain_error("even_odd_endpoints: prefix deeper than the family");
  auto rep = composite::validate_fractal(spec);
  if (!rep.finiteness_ok || !rep.cancellation_ok)
    throw std::domain_error(
        "even_odd_endpoints: spec must satisfy the cancellation conditions");
  auto prefix = [&](int K) {
    composite::FractalSpec p;
    p.levels.assign(spec.levels.begin(), spec.levels.begin() + K);
    return p;
  };
  grid::GridField even =
      snapshot_exact(f0, compile_fractal(prefix(K_even)), Rational(1), N);
  grid::GridField odd =
      snapshot_exact(f0, compile_fractal(prefix(K_odd)), Rational(1), N);
  return {even, odd};
}

grid::GridField mixing_snapshot(const ScalarSampler& f0, int m, int N) {
  if (m < 0) throw std::domain_error("mixing_snapshot: m >= 0");
  grid::GridField g(N);
  double factor = std::ldexp(1.0, m);
  util::parallel_rows(N, [&](int row) {
    double x2 = g.cell_x2(row);
    for (int col = 0; col < N; ++col) {
      double z1 = std::fmod(g.cell_x1(col) * factor, 1.0);
      double z2 = std::fmod(x2 * factor, 1.0);
      g.at(row, col) = f0.f(z1, z2);
    }
  });
  return g;
}

grid::GridField finite_depth_snapshot(const ScalarSampler& f0,
                                      const composite::MixSpec& spec,
                                      const Rational& t, int N) {
  return snapshot_exact(f0, compile_mixing(spec), t, N);
}

}  // namespace torusmix::transport
