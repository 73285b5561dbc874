#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "torusmix/limits.hpp"

using namespace torusmix;
using namespace torusmix::limits;

namespace {

// adaptive Simpson quadrature
double simpson(const std::function<double(double)>& f, double a, double b,
               double fa, double fm, double fb, double eps, int depth) {
  double m = (a + b) / 2;
  double lm = (a + m) / 2, rm = (m + b) / 2;
  double flm = f(lm), frm = f(rm);
  double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  double left = (m - a) / 6 * (fa + 4 * flm + fm);
  double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) < 15 * eps)
    return left + right + (left + right - whole) / 15;
  return simpson(f, a, m, fa, flm, fm, eps / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, eps / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double eps = 1e-14) {
  double m = (a + b) / 2;
  return simpson(f, a, b, f(a), f(m), f(b), eps, 40);
}

transport::FlowProgram identity_program(double T) {
  transport::FlowProgram prog;
  prog.horizon = Rational((long)T);
  prog.horizond = T;
  transport::Segment s;
  s.t0 = Rational(0);
  s.t1 = prog.horizon;
  s.t1d = T;
  s.prim = transport::IdentityPrim{};
  prog.segments.push_back(s);
  return prog;
}

}  // namespace

TEST_CASE("battery and held-out data") {
  auto b = default_battery();
  REQUIRE(b.size() == 3);
  CHECK(b[0].name == "sin_x1");
  CHECK(b[1].name == "smoothed_sign");
  CHECK(b[2].name == "checker4");
  // smoothed sign: plateau values, transitions near 0 and 1/2
  CHECK(b[1].sampler.f(0.25, 0.9) == -1.0);
  CHECK(b[1].sampler.f(0.75, 0.1) == 1.0);
  CHECK(std::fabs(b[1].sampler.f(0.5, 0.0)) < 1e-12);
  // checkerboard alternates
  CHECK(b[2].sampler.f(0.1, 0.1) == 1.0);
  CHECK(b[2].sampler.f(0.3, 0.1) == -1.0);
  auto h = held_out_datum();
  CHECK(h.name == "sin_x2");
  CHECK(h.sampler.f(0.3, 0.25) == doctest::Approx(1.0));
}

TEST_CASE("heat-leak constant against the quadrature oracle") {
  // signed-tail convention: erf(x) = int_{-inf}^x e^{-y^2} dy
  double C0 = integrate([](double y) { return std::exp(-y * y); }, -12.0, 0.0);
  CHECK(C0 == doctest::Approx(std::sqrt(M_PI) / 2).epsilon(1e-13));
  // int_0^infty erf(-x) dx = int_0^infty int_x^infty e^{-y^2} dy dx = 1/2
  double I = integrate(
      [&](double x) {
        return integrate([](double y) { return std::exp(-y * y); }, x, 14.0,
                         1e-15);
      },
      0.0, 14.0, 1e-12);
  CHECK(I == doctest::Approx(0.5).epsilon(1e-9));
  double C_oracle = 8.0 * std::sqrt(3.0) / C0 * I;
  CHECK(std::fabs(swap_leak_constant() - C_oracle) <= 1e-8);
  CHECK(std::fabs(swap_leak_constant() - 8.0 * std::sqrt(3.0 / M_PI)) <= 1e-14);

  // nu = 0 leaves only the strip-measure term
  CHECK(swap_leak_bound(0.0, 3, 2.0) == doctest::Approx(2 * 2.0 * 0.5));
  CHECK(swap_leak_bound(1e-3, 2, 1.0) ==
        doctest::Approx(2 * 0.5 + swap_leak_constant() * std::sqrt(1e-3 * 0.25)));
}

TEST_CASE("calibrate_nu inverts the closed-form heat decay") {
  // zero velocity, single-mode datum: sup-t L1 distance to the inviscid
  // (frozen) field is ||sin||_1 (1 - e^{-4 pi^2 nu T}) at T = horizon
  CalibrationOptions opts;
  opts.N = 64;
  opts.nu_start = 1.0;
  opts.ratio = 0.5;
  std::vector<Datum> battery{{"sin_x1",
                              {[](double x1, double) {
                                 return std::sin(2 * M_PI * x1);
                               },
                               1.0}}};
  double tol = 0.05;
  auto prog = identity_program(1.0);
  auto lev = calibrate_nu(prog, battery, tol, opts, 1);

  // oracle: largest grid nu with (2/pi)(1 - e^{-4 pi^2 nu}) <= tol
  double expect = -1;
  for (int j = 0; j < opts.grid_points; ++j) {
    double nu = std::pow(0.5, j);
    if ((2.0 / M_PI) * (1.0 - std::exp(-4 * M_PI * M_PI * nu)) <= tol) {
      expect = nu;
      break;
    }
  }
  CHECK(lev.nu == doctest::Approx(expect).epsilon(1e-12));
  CHECK(lev.achieved <= tol);

  // relaxing the tolerance cannot decrease the calibrated viscosity
  auto lev2 = calibrate_nu(prog, battery, 2 * tol, opts, 1);
  CHECK(lev2.nu >= lev.nu);

  // constant datum passes at the grid maximum
  std::vector<Datum> cbat{{"constant",
                           {[](double, double) { return 0.4; }, 0.4}}};
  auto lev3 = calibrate_nu(prog, cbat, tol, opts, 1);
  CHECK(lev3.nu == opts.nu_start);

  // unattainable tolerance raises with the distance curve attached
  bool threw = false;
  try {
    CalibrationOptions tight = opts;
    tight.grid_points = 3;
    calibrate_nu(prog, battery, 1e-9, tight, 1);
  } catch (const CalibrationError& e) {
    threw = true;
    CHECK_FALSE(e.curve.empty());
  }
  CHECK(threw);
}

TEST_CASE("calibrate_eps certifies a probe budget") {
  // Grid-resolvable probes homogenise only at an L^2 rate, so desk-scale
  // certification works at loose tolerances; the probe sweep still shows
  // the qualitative decay of the viscous change.
  auto spec = composite::build_vv_params(1).spec;
  CalibrationOptions opts;
  opts.N = 256;  // probe strips must stay well resolved
  opts.extra_snapshots = 6;
  opts.max_breakpoint_snapshots = 12;
  double tol = 0.45;
  auto res = calibrate_eps(spec, {default_battery()[0]}, 3e-3, 1e-2, tol, opts,
                           {});
  CHECK_FALSE(res.probes.empty());
  CHECK(res.delta_n > 0);
  CHECK(res.eps_n == doctest::Approx(res.delta_n / 2));  // min formula, k = 0
  // both the weak-star distance and the measured change decay along the
  // probe family
  for (size_t i = 1; i < res.probes.size(); ++i) {
    CHECK(res.probes[i].weak_star < res.probes[i - 1].weak_star);
    CHECK(res.probes[i].change <= res.probes[i - 1].change + 1e-9);
  }
  CHECK(res.probes.back().change <= tol);

  // with history the min formula takes the smaller branch
  auto res2 = calibrate_eps(spec, {default_battery()[0]}, 3e-3, 1e-2, tol, opts,
                            {res.delta_n * 0.01});
  CHECK(res2.eps_n == doctest::Approx(std::min(res2.delta_n / 2,
                                               res.delta_n * 0.01 / 4)));
}

TEST_CASE("one-swap viscous perturbation obeys the heat-leak bound") {
  // consecutive lex prefixes differing by the swap (2,1,1,1)
  composite::MixSpec with;
  with.cutoff = schedule::QuadIndex{2, 1, 1, 1};
  composite::MixSpec without;
  without.cutoff = schedule::QuadIndex{1, 1, 2, 1};
  auto prog_a = transport::compile_mixing(without);
  auto prog_b = transport::compile_mixing(with);

  int k = 2;
  double t0 = schedule::swap_start_time({2, 1, 1, 1}).to_double();
  double t1 = t0 + 3 * std::ldexp(1.0, -k);
  int N = 128;
  auto f0 = grid::sample(N, [](double x1, double) {
    return std::sin(2 * M_PI * x1);
  });
  for (double nu : {1e-2, 1e-3}) {
    ade::SolverConfig cfg;
    cfg.N = N;
    cfg.nu = nu;
    std::vector<double> times;
    for (int i = 0; i <= 8; ++i) times.push_back(t0 + (t1 - t0) * i / 8);
    cfg.snapshot_times = times;
    cfg.keep_snapshots = true;
    auto ra = ade::solve(f0, prog_a, cfg, t1);
    auto rb = ade::solve(f0, prog_b, cfg, t1);
    double measured = 0;
    for (size_t i = 0; i < ra.snapshots.size() && i < rb.snapshots.size(); ++i)
      measured = std::max(measured, grid::l1_distance(ra.snapshots[i].second,
                                                      rb.snapshots[i].second));
    CHECK(measured <= swap_leak_bound(nu, k, 1.0));
  }
}

TEST_CASE("vv experiment with a constant datum: targets coincide") {
  VvOptions opts;
  opts.N = 256;  // level-3 strips must be grid-resolved for the ladder
  opts.K_max = 3;
  opts.calib.N = 256;
  opts.check_held_out = false;
  transport::ScalarSampler cst{[](double, double) { return 0.4; }, 0.4};
  auto rep = run_vv_experiment(cst, "constant", opts);
  CHECK(rep.complete);
  bool found = false;
  for (const auto& c : rep.criteria) {
    if (c.name.rfind("targets_coincide", 0) == 0) {
      found = true;
      CHECK(c.pass);
      CHECK(c.value <= 1e-9);  // constants are invariant under the solver
    }
    if (c.name == "nu_strictly_decreasing") CHECK(c.pass);
  }
  CHECK(found);
}

TEST_CASE("mixing experiment report structure at desk scale") {
  MixingOptions opts;
  opts.N = 64;
  opts.K_max = 2;
  opts.calib.N = 64;
  opts.calib.extra_snapshots = 8;
  opts.calib.max_breakpoint_snapshots = 16;
  opts.lex_stride = 5;   // calibrate the 5th and 10th lex levels only
  opts.tol_floor = 0.6;  // coarse-grid floor; production runs keep the default
  auto f0 = default_battery()[1];  // smoothed sign
  auto rep = run_mixing_experiment(f0.sampler, f0.name, opts);
  CHECK(rep.experiment == "mixing_unmixing_mirrored");
  CHECK(rep.complete);
  CHECK(rep.criteria.size() >= 9);
  // the exact inviscid structure holds regardless of viscosity
  for (const auto& c : rep.criteria) {
    if (c.name == "exact_variance_constant_at_Tm") CHECK(c.pass);
    if (c.name == "exact_low_pairing_zero_at_Tm") CHECK(c.pass);
    if (c.name == "nu_non_increasing") CHECK(c.pass);
    if (c.name == "plateau_low_mode_50") CHECK(c.pass);
  }
  // report serialises to the stable schema
  auto j = rep.to_json();
  CHECK(j.find("\"experiment\"") != std::string::npos);
  CHECK(j.find("\"criteria\"") != std::string::npos);
  CHECK(j.find("\"threshold\"") != std::string::npos);
  CHECK(j.find("\"artifacts\"") != std::string::npos);
}
