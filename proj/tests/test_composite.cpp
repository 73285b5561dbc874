#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "torusmix/composite.hpp"

using namespace torusmix;
using namespace torusmix::composite;

TEST_CASE("validate_fractal flags the boundary base tuple") {
  FractalSpec spec;
  spec.levels.push_back({1, 4, rat(1, 4)});  // tau_1 = 2^-2 exactly
  auto rep = validate_fractal(spec);
  CHECK(rep.finiteness_ok);
  CHECK_FALSE(rep.finiteness_strict_ok);
  CHECK(rep.boundary_case);

  spec.levels.push_back({1, 18, rat(1, 16)});  // same direction: violation
  rep = validate_fractal(spec);
  CHECK_FALSE(rep.cancellation_ok);
  CHECK_FALSE(rep.levels[0].cancel_direction);
  CHECK(rep.levels[0].cancel_tau);  // 2*(1/16) = 1/8 = 1/(2*4) holds

  spec.levels[1].i = 2;
  rep = validate_fractal(spec);
  CHECK(rep.cancellation_ok);
  CHECK(rep.levels[0].cancel_parity);  // 2*18*(1/4) = 9 odd
}

TEST_CASE("fractal velocity dispatch") {
  FractalSpec spec;
  spec.levels.push_back({1, 4, rat(1, 4)});
  // inside [t_{1,0}, t_{1,0}+tau_1] = [0, 1/4]
  auto v = fractal_velocity(spec, {0.1, 0.05}, 0.125);
  CHECK(v.x1 == 1.0);
  CHECK(v.x2 == 0.0);
  // gap
  auto z = fractal_velocity(spec, {0.1, 0.05}, 0.3);
  CHECK(z.x1 == 0.0);
  CHECK(z.x2 == 0.0);
  CHECK_THROWS_AS(fractal_velocity(spec, {0.1, 0.05}, 1.5), std::domain_error);

  // K=2 with tau_2 < 2^-4: t = 3/8 = t_{2,1} lies inside the level-2 slot
  spec.levels.push_back({2, 18, rat(1, 40)});
  auto w = fractal_velocity(spec, {0.1, 0.05}, 0.375);
  CHECK(w.x1 == 0.0);
  CHECK(std::fabs(w.x2) == 1.0);
  auto w2 = fractal_velocity(spec, {0.1, 0.05}, 0.375 + 1.0 / 40 + 1e-6);
  CHECK(w2.x2 == 0.0);
}

TEST_CASE("build_vv_params reproduces the inductive construction") {
  auto built = build_vv_params(3);
  const auto& lv = built.spec.levels;
  REQUIRE(lv.size() == 3);
  CHECK(lv[0].i == 1);
  CHECK(lv[0].L == 4);
  CHECK(lv[0].tau == rat(1, 4));
  CHECK(lv[1].i == 2);
  CHECK(lv[1].tau == rat(1, 16));
  CHECK(lv[1].L == 18);  // M = 4 -> 2*1*(2M+1) = 18 >= 16
  CHECK(built.chosen_M[0] == 4);
  CHECK(is_odd_integer(Rational(2 * 18) * lv[0].tau));  // = 9
  CHECK(lv[2].i == 1);
  CHECK(lv[2].tau == rat(1, 72));
  CHECK(lv[2].L == 72);  // 2*4*(2M+1) >= 64 -> M = 4 -> 72
  auto rep = validate_fractal(built.spec);
  CHECK(rep.finiteness_ok);
  CHECK(rep.cancellation_ok);
}

TEST_CASE("build_vv_params: tighter budget never lowers M") {
  BuildOptions loose;
  loose.eps_budget = {1e6};
  auto a = build_vv_params(2, loose);
  BuildOptions tight;
  tight.eps_budget = {a.achieved_distance[0] * 0.5};
  auto b = build_vv_params(2, tight);
  CHECK(b.chosen_M[0] >= a.chosen_M[0]);
  CHECK(b.achieved_distance[0] <= tight.eps_budget[0]);
}

TEST_CASE("mixing and mirrored velocities") {
  MixSpec spec;
  spec.cutoff = schedule::quad_prefix_cutoff(2);
  // dead zone beyond 42
  auto v = mixing_velocity(spec, {0.3, 0.3}, 45.0);
  CHECK(v.x1 == 0.0);
  CHECK(v.x2 == 0.0);
  CHECK_THROWS_AS(mixing_velocity(spec, {0.3, 0.3}, 51.0), std::domain_error);
  CHECK_THROWS_AS(mirrored_velocity(spec, {0.3, 0.3}, 101.0), std::domain_error);

  // the first scheduled slot is the <_time-minimal quad: (2,1,2,2) here,
  // an i=2 swap on J_{2,2} = [1/2,1]; points with x_2 outside are still
  double t_first = 6.0 + 0.01;
  auto u = mixing_velocity(spec, {0.3, 0.3}, t_first);  // x2 not in J_{2,2}
  CHECK(u.x1 == 0.0);
  CHECK(u.x2 == 0.0);

  // t = 50 is dead on both branches
  auto m = mirrored_velocity(spec, {0.3, 0.3}, 50.0);
  CHECK(m.x1 == 0.0);
  CHECK(m.x2 == 0.0);

  // antisymmetry u(x, 100-t) = -u(x, t)
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(0.0, 1.0), ut(0.0, 100.0);
  for (int it = 0; it < 1000; ++it) {
    flows::PointD x{ux(rng), ux(rng)};
    double t = ut(rng);
    auto a = mirrored_velocity(spec, x, t);
    auto b = mirrored_velocity(spec, x, 100.0 - t);
    CHECK(a.x1 == doctest::Approx(-b.x1).epsilon(1e-12).scale(1.0));
    CHECK(a.x2 == doctest::Approx(-b.x2).epsilon(1e-12).scale(1.0));
  }
  auto p = mirrored_velocity(spec, {0.3, 0.7}, 99.0);
  auto q = mirrored_velocity(spec, {0.3, 0.7}, 1.0);
  CHECK(p.x1 == -q.x1);
  CHECK(p.x2 == -q.x2);
}

TEST_CASE("velocity magnitude bounds") {
  auto built = build_vv_params(2);
  MixSpec mix;
  mix.cutoff = schedule::quad_prefix_cutoff(2);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int it = 0; it < 2000; ++it) {
    flows::PointD x{u(rng), u(rng)};
    auto a = fractal_velocity(built.spec, x, u(rng));
    CHECK(std::hypot(a.x1, a.x2) <= 1.0 + 1e-12);
    auto b = mirrored_velocity(mix, x, 100.0 * u(rng));
    CHECK(std::hypot(b.x1, b.x2) <= 1.0 + 1e-12);
  }
}

TEST_CASE("weak-star distance: identity, shears vanish, triangle") {
  TestFamily fam;
  fam.J_max = 9;
  fam.Q = 3;
  fam.quad_N = 128;
  fam.horizon = 1.0;

  auto shear_field = [](std::int64_t L) {
    FractalSpec s;
    s.levels.push_back({1, L, rat(1, 4)});
    return slice_fractal(s);
  };

  auto a = shear_field(2);
  CHECK(weak_star_distance(a, a, fam).distance == 0.0);

  // d(u^(1;L), 0) decreases to zero as L grows
  SlicedField zero;
  zero.horizon = 1.0;
  double prev = 1e300;
  for (std::int64_t L : {1, 2, 4, 8}) {
    double d = weak_star_distance(shear_field(L), zero, fam).distance;
    CHECK(d < prev);
    CHECK(d > 0.0);
    prev = d;
  }
  // beyond the family cutoff the truncated metric cannot see the field
  double dbig = weak_star_distance(shear_field(64), zero, fam).distance;
  CHECK(dbig <= prev);

  // triangle inequality
  auto b = shear_field(4);
  auto c = shear_field(8);
  double ab = weak_star_distance(a, b, fam).distance;
  double bc = weak_star_distance(b, c, fam).distance;
  double ac = weak_star_distance(a, c, fam).distance;
  CHECK(ac <= ab + bc + 1e-12);
}

TEST_CASE("spec serialisation round-trips") {
  auto built = build_vv_params(3);
  std::string text = to_config(built.spec);
  auto back = fractal_from_config(text);
  CHECK(to_config(back) == text);
  REQUIRE(back.K() == 3);
  CHECK(back.levels[2].tau == built.spec.levels[2].tau);

  MixSpec mix;
  mix.cutoff = schedule::quad_prefix_cutoff(3);
  mix.set_L({2, 1, 1, 1}, 5);
  std::string mtext = to_config(mix);
  auto mback = mix_from_config(mtext);
  CHECK(to_config(mback) == mtext);
  CHECK(mback.L_of({2, 1, 1, 1}) == 5);
  CHECK(mback.L_of({2, 1, 1, 2}) == 3);  // default k+1
  CHECK_THROWS_AS(mix.set_L({2, 1, 1, 1}, 2), std::domain_error);
}
