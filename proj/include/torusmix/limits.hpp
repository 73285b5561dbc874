#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "torusmix/ade.hpp"
#include "torusmix/composite.hpp"
#include "torusmix/transport.hpp"

namespace torusmix::limits {

struct Datum {
  std::string name;
  transport::ScalarSampler sampler;
};

// sin(2 pi x1), sign(x1-1/2) smoothed at scale 1/64, 4x4 checkerboard.
std::vector<Datum> default_battery();
Datum held_out_datum();  // sin(2 pi x2), not in the battery

struct CalibrationOptions {
  int N = 256;
  double nu_start = 1.0;
  double ratio = 0.5;
  int grid_points = 40;
  int extra_snapshots = 16;  // uniform times besides the breakpoints
  int max_breakpoint_snapshots = 48;
};

struct CalibrationLevel {
  int n = 0;
  double tol = 0;
  double nu = 0;
  double achieved = 0;  // worst battery distance at the calibrated nu
  std::vector<std::pair<double, double>> curve;  // (nu, worst distance)
};

struct CalibrationResult {
  std::vector<CalibrationLevel> levels;
  std::vector<std::string> battery_names;
};

struct CalibrationError : std::runtime_error {
  std::vector<std::pair<double, double>> curve;
  explicit CalibrationError(const std::string& what,
                            std::vector<std::pair<double, double>> c)
      : std::runtime_error(what), curve(std::move(c)) {}
};

// Snapshot times for tracking distances: program breakpoints (thinned)
// plus uniform times plus the horizon.
std::vector<double> snapshot_times(const transport::FlowProgram& prog,
                                   const CalibrationOptions& opts);

// Sup over snapshot times of the L1 gap between the viscous run and the
// exact inviscid snapshots; abort_above > 0 stops a run early once the
// gap is hopeless.
double sup_l1_distance(const transport::FlowProgram& prog,
                       const transport::ScalarSampler& f0, double nu,
                       const CalibrationOptions& opts,
                       const std::vector<double>& times,
                       double abort_above = -1.0);

// Largest grid viscosity tracking every battery datum within tol.
CalibrationLevel calibrate_nu(const transport::FlowProgram& prog,
                              const std::vector<Datum>& battery, double tol,
                              const CalibrationOptions& opts, int level_index,
                              double nu_cap = -1.0);

struct EpsProbe {
  std::int64_t L = 0;
  double weak_star = 0;
  double change = 0;
};

struct EpsResult {
  double delta_n = 0;  // certified weak-* radius from the probe family
  double eps_n = 0;    // min_k delta_{n-k} 2^{-k-1} over the history
  std::vector<EpsProbe> probes;
};

// Certify a weak-* budget: probe perturbations are next-level shears
// with L doubled until the viscous change over the nu window drops
// below tol; combined across levels by the min formula.
EpsResult calibrate_eps(const composite::FractalSpec& spec_n,
                        const std::vector<Datum>& battery, double nu_lo,
                        double nu_hi, double tol, const CalibrationOptions& opts,
                        const std::vector<double>& delta_history);

struct Criterion {
  std::string name;
  double value = 0;
  double threshold = 0;
  std::string cmp = "<=";  // "<=", ">=", "<", ">"
  bool pass = false;
};

struct ExperimentReport {
  std::string experiment;
  std::map<std::string, std::string> params;
  std::vector<Criterion> criteria;
  std::vector<std::string> artifacts;
  CalibrationResult calibration;
  bool complete = true;   // false when calibration failed mid-way
  std::string failure;
  bool all_pass() const;
  std::string to_json() const;
};

struct VvOptions {
  int N = 256;
  int K_max = 3;
  CalibrationOptions calib;
  std::vector<double> eps_budget;  // forwarded to build_vv_params
  bool check_held_out = true;
  std::string out_dir;  // artifacts land here when non-empty
};

// Even/odd non-uniqueness run: build the fractal family, calibrate the
// viscosity ladder, solve at each rung, compare against the exact
// even/odd traces.
ExperimentReport run_vv_experiment(const transport::ScalarSampler& f0,
                                   const std::string& f0_name,
                                   const VvOptions& opts);

struct MixingOptions {
  int N = 256;
  int K_max = 2;
  CalibrationOptions calib;
  int lex_stride = 1;      // calibrate every stride-th lex level
  double tol_floor = 5e-2; // lower bound on the per-level tolerance
  std::string out_dir;
};

// Mix/unmix run along the mirrored field: plateau, symmetry, recovery,
// and the norm-increase signature; both the raw variance and its
// resolved-scale (low-mode) proxy are reported.
ExperimentReport run_mixing_experiment(const transport::ScalarSampler& f0,
                                       const std::string& f0_name,
                                       const MixingOptions& opts);

// 2 ||f0|| 2^-floor(k/2) + C ||f0|| sqrt(nu 2^-k), C = 8 sqrt(3/pi).
double swap_leak_bound(double nu, int k, double sup_f0);
double swap_leak_constant();  // the C above

}  // namespace torusmix::limits
