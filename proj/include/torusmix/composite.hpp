#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "torusmix/exact.hpp"
#include "torusmix/flows.hpp"
#include "torusmix/schedule.hpp"

namespace torusmix::composite {

struct FractalTuple {
  int i = 1;
  std::int64_t L = 1;
  Rational tau;
};

// Levels (i_k, L_k, tau_k), k = 1..K, driving the dyadic shear schedule.
struct FractalSpec {
  std::vector<FractalTuple> levels;
  int K() const { return (int)levels.size(); }
};

struct LevelValidation {
  int k = 0;
  bool finiteness = false;         // tau_k <= 2^-2k (boundary admitted)
  bool finiteness_strict = false;  // tau_k < 2^-2k
  bool cancel_direction = true;    // i_{k+1} != i_k
  bool cancel_tau = true;          // 2 tau_{k+1} = 1/(2 L_k)
  bool cancel_parity = true;       // 2 L_{k+1} tau_k odd
};

struct ValidationReport {
  std::vector<LevelValidation> levels;
  bool finiteness_ok = false;      // non-strict everywhere
  bool finiteness_strict_ok = false;
  bool cancellation_ok = false;    // all three conditions at every junction
  bool boundary_case = false;      // some tau_k sits exactly on 2^-2k
};

ValidationReport validate_fractal(const FractalSpec& spec);

// Map from quad slots to swap frequencies L_P >= k+1; slots without an
// override use k+1.
struct MixSpec {
  schedule::QuadIndex cutoff{1, 1, 2, 1};
  std::map<std::array<std::int64_t, 4>, std::int64_t> overrides;

  std::int64_t L_of(const schedule::QuadIndex& q) const;
  void set_L(const schedule::QuadIndex& q, std::int64_t L);
};

// Pointwise field evaluation. Fractal lives on [0,1], mixing on [0,50],
// mirrored on [0,100] with u(x,t) = -u(x,100-t).
flows::Vec2<double> fractal_velocity(const FractalSpec& spec,
                                     const flows::PointD& x, double t);
flows::Vec2<double> mixing_velocity(const MixSpec& spec, const flows::PointD& x,
                                    double t);
flows::Vec2<double> mirrored_velocity(const MixSpec& spec, const flows::PointD& x,
                                      double t);

// Countable separating family realising a weak-* metric on the bounded
// ball: spatial Fourier modes |j|_inf <= J_max against tent windows on
// dyadic partitions of [0,T] down to level Q, weights 2^-(|j|_1+q)
// normalised by the ball radius.
struct TestFamily {
  int J_max = 4;
  int Q = 4;
  double ball_radius = 1.0;
  double horizon = 1.0;
  int quad_N = 256;          // spatial quadrature grid
  bool grid_warning = false; // set by callers when quad_N under-resolves
};

// Any time-sliced piecewise-stationary field.
struct SlicedField {
  struct Slice {
    double t0, t1;
    std::function<flows::Vec2<double>(const flows::PointD&)> u;
  };
  std::vector<Slice> slices;  // gaps are zero field
  double horizon = 0;
};

SlicedField slice_fractal(const FractalSpec& spec);
SlicedField slice_mixing(const MixSpec& spec);
SlicedField slice_mirrored(const MixSpec& spec);

struct WeakStarResult {
  double distance = 0;
  bool grid_warning = false;
};

WeakStarResult weak_star_distance(const SlicedField& a, const SlicedField& b,
                                  const TestFamily& family);

// Suggested family for comparing two fractal prefixes: the mode cutoff
// tracks the finest shear so the newest level stays visible.
TestFamily family_for_fractal(const FractalSpec& spec, double horizon = 1.0);

struct BuildOptions {
  std::vector<double> eps_budget;  // per junction; empty = no proximity cap
  std::int64_t M_cap = std::int64_t(1) << 20;
};

struct BuildResult {
  FractalSpec spec;
  std::vector<std::int64_t> chosen_M;      // per junction k -> k+1
  std::vector<double> achieved_distance;   // weak-* gap per junction
};

// Inductive parameter construction: base tuple (1, 4, 1/4), then
// i alternates, tau_{k+1} = 1/(4 L_k), L_{k+1} = 2 L_{k-1} (2M+1) with
// the smallest M giving L_{k+1} >= 2^(2k+2) and, when a budget is set,
// weak-* proximity of consecutive prefixes within eps_k.
BuildResult build_vv_params(int K, const BuildOptions& opts = {});

// Exact key-value serialisation; round-trips identically.
std::string to_config(const FractalSpec& spec);
std::string to_config(const MixSpec& spec);
FractalSpec fractal_from_config(const std::string& text);
MixSpec mix_from_config(const std::string& text);

}  // namespace torusmix::composite
