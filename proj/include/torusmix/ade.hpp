#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "torusmix/grid.hpp"
#include "torusmix/transport.hpp"

namespace torusmix::ade {

struct SolverConfig {
  int N = 256;
  double nu = 1e-3;
  double dt_max = 0.0;  // extra cap on top of the per-level 2^-(k+2); 0 = none
  bool dealias = false;  // no spectral products arise; kept for the record
  int interp_order = 3;  // 3 = clipped bicubic, 1 = bilinear
  std::vector<double> snapshot_times;  // forced substep nodes
  bool keep_snapshots = false;         // capture fields at snapshot_times
  // called at each snapshot time; returning false abandons the run
  std::function<bool(double, const grid::GridField&)> on_snapshot;
};

// Truncated Fourier polynomial in space times a polynomial in time.
struct TestFunctionSpec {
  struct Mode {
    int j1 = 0, j2 = 0;
    std::complex<double> coeff{1.0, 0.0};
  };
  std::vector<Mode> modes;          // s(x) = sum Re(c e^{2 pi i j.x})
  std::vector<double> time_poly{1}; // P(t) = c0 + c1 t + ...
};

struct TraceRow {
  double t = 0;
  double mass = 0, l1 = 0, l2 = 0, linf = 0;
  double minv = 0, maxv = 0;
  double cumulative_dissipation = 0;  // 2 nu int |grad f|^2, spectral
};

struct SolveTrace {
  std::vector<TraceRow> rows;
  double energy_residual_rel = 0;
  bool aborted = false;
  bool stopped_by_observer = false;
  std::string abort_reason;
  // per test function: <f,phi>(t) and one-sided values of
  // <f, dphi/dt + u.grad phi + nu lap phi> at the substep nodes
  std::vector<std::vector<double>> phi_pairing;
  std::vector<std::vector<double>> phi_gen_left;
  std::vector<std::vector<double>> phi_gen_right;
};

struct SolveResult {
  grid::GridField field;
  SolveTrace trace;
  std::vector<std::pair<double, grid::GridField>> snapshots;
};

// Exact periodic heat semigroup: spectrum times e^{-nu_dt |2 pi j|^2}.
grid::GridField heat_step(const grid::GridField& f, double nu_dt);

// Semi-Lagrangian advection over [t0, t0+dt]; the interval must lie in a
// single stationary piece of the program.
grid::GridField advect_step(const grid::GridField& f,
                            const transport::FlowProgram& prog, double t0,
                            double dt, int interp_order = 3);

SolveResult solve(const grid::GridField& f0, const transport::FlowProgram& prog,
                  const SolverConfig& cfg, double t_end,
                  const std::vector<TestFunctionSpec>& test_fns = {});

// Weak-form residual sup_t |<f,phi>(t) - <f0,phi0> - int_0^t <f, gen phi>|
// evaluated from the stored trace series for test function `idx`.
double trace_residual(const SolveTrace& trace, size_t idx);

double lp_norm(const grid::GridField& f, double p);
double mass(const grid::GridField& f);

// Mean-square energy carried by modes 0 < |j|_inf <= J.
double low_mode_energy(const grid::GridField& f, int J);

// |<f, e^{2 pi i j.x}>| for one mode.
double mode_amplitude(const grid::GridField& f, int j1, int j2);

// Relative spectral mass outside the sublattice step*Z^2 (mean removed).
double offlattice_leakage(const grid::GridField& f, int step);

void write_trace_csv(const std::string& path, const SolveTrace& trace);

}  // namespace torusmix::ade
