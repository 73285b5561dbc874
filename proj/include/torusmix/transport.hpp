#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "torusmix/composite.hpp"
#include "torusmix/exact.hpp"
#include "torusmix/flows.hpp"
#include "torusmix/grid.hpp"

namespace torusmix::transport {

struct IdentityPrim {};
struct ShearPrim {
  flows::ShearSpec s;
};
struct SwapPrim {
  flows::SwapSpec s;
};
using Primitive = std::variant<IdentityPrim, ShearPrim, SwapPrim>;

// One stationary piece of a compiled program. `reversed` marks mirrored
// segments whose primitive runs backwards in local time.
struct Segment {
  Rational t0, t1;
  double t0d = 0, t1d = 0;
  Primitive prim;
  bool reversed = false;
  int level = 0;  // k of the originating slot, 0 for identity
};

// Time-stamped primitive sequence tiling [0, horizon] without overlap.
struct FlowProgram {
  std::vector<Segment> segments;
  Rational horizon;
  double horizond = 0;
};

FlowProgram compile_fractal(const composite::FractalSpec& spec);
FlowProgram compile_mixing(const composite::MixSpec& spec);
FlowProgram compile_mirrored(const composite::MixSpec& spec);

// Flow inside one segment from absolute time `from` to `to` (both within
// the segment). Whole-segment swap traversals collapse to the exact
// digit transposition.
template <class S>
flows::TorusPoint<S> flow_in_segment(const Segment& seg, const S& from, const S& to,
                                     const flows::TorusPoint<S>& x);

// Backward map evaluation: apply inverse primitives from t down to 0.
flows::PointD inverse_flow_point(const FlowProgram& prog, double t,
                                 const flows::PointD& x);
flows::PointQ inverse_flow_point(const FlowProgram& prog, const Rational& t,
                                 const flows::PointQ& x);
flows::PointD forward_flow_point(const FlowProgram& prog, double t,
                                 const flows::PointD& x);
flows::PointQ forward_flow_point(const FlowProgram& prog, const Rational& t,
                                 const flows::PointQ& x);

// Pointwise-evaluable initial datum with declared sup bound.
struct ScalarSampler {
  std::function<double(double, double)> f;
  double sup_bound = 1.0;
};

double lagrangian_value(const ScalarSampler& f0, const FlowProgram& prog,
                        const flows::PointD& x, double t);

// Pointwise field value of the compiled program at absolute time t.
flows::Vec2<double> velocity_at(const FlowProgram& prog, double t,
                                const flows::PointD& x);

// Index of the segment containing t (last one whose [t0,t1) admits t).
const Segment* segment_at(const FlowProgram& prog, double t);

// Cell-centred pullback snapshot. Exact mode routes every cell centre
// through the rational inverse flow; the two modes sample the same
// points, so lattice-permuting programs give bit-identical norms.
grid::GridField snapshot(const ScalarSampler& f0, const FlowProgram& prog,
                         double t, int N);
grid::GridField snapshot_exact(const ScalarSampler& f0, const FlowProgram& prog,
                               const Rational& t, int N);

// f^even(.,1) and f^odd(.,1) for prefixes of a cancellation family:
// the even trace is f0, the odd one is f0 after the undone first shear.
std::pair<grid::GridField, grid::GridField> even_odd_endpoints(
    const ScalarSampler& f0, const composite::FractalSpec& spec, int K_even,
    int K_odd, int N);

// Samples of f0 o z_m (both coordinates shifted m binary digits).
grid::GridField mixing_snapshot(const ScalarSampler& f0, int m, int N);

// Pullback along the mixing prefix at time t.
grid::GridField finite_depth_snapshot(const ScalarSampler& f0,
                                      const composite::MixSpec& spec,
                                      const Rational& t, int N);

}  // namespace torusmix::transport
