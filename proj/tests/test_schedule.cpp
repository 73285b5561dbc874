#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "oracles.hpp"
#include "torusmix/schedule.hpp"

using namespace torusmix;
using namespace torusmix::schedule;

TEST_CASE("dyadic time order") {
  CHECK(less_time_dyadic({1, 0}, {2, 0}));   // tie at 0, smaller k first
  CHECK(less_time_dyadic({2, 1}, {1, 1}));   // 1/4 < 1/2
  CHECK_FALSE(less_time_dyadic({1, 1}, {2, 1}));
  CHECK_FALSE(less_time_dyadic({3, 5}, {3, 5}));  // irreflexive
  CHECK_THROWS_AS(less_time_dyadic({2, 4}, {1, 0}), std::domain_error);

  // total, transitive, and matches the defining comparison on k <= 6
  std::vector<DyadicPair> all;
  for (int k = 1; k <= 6; ++k)
    for (std::int64_t m = 0; m < (1 << k); ++m) all.push_back({k, m});
  for (const auto& a : all)
    for (const auto& b : all) {
      bool lib = less_time_dyadic(a, b);
      CHECK(lib == oracles::lt_dyadic(a, b));
      if (!(a.k == b.k && a.m == b.m)) CHECK(lib != less_time_dyadic(b, a));
    }
}

TEST_CASE("shear start times") {
  CHECK(shear_start_time({1, 0}) == Dyadic(0));
  CHECK(shear_start_time({2, 0}) == Dyadic(1, 2));   // 1/4
  CHECK(shear_start_time({1, 1}) == Dyadic(1, 1));   // 1/2
  CHECK(shear_start_time({2, 1}) == Dyadic(3, 3));   // 3/8
  CHECK(shear_start_time({2, 2}) == Dyadic(3, 2));   // 6/8
  CHECK(shear_start_time({2, 3}) == Dyadic(7, 3));   // 7/8
  CHECK(shear_start_time({3, 0}) == Dyadic(5, 4));   // 10/32

  for (int k = 1; k <= 5; ++k)
    for (std::int64_t m = 0; m < (1 << k); ++m)
      CHECK(shear_start_time({k, m}) == oracles::t_km_brute({k, m}));
}

TEST_CASE("shear start time recursions up to k=10") {
  for (int k = 1; k <= 10; ++k)
    for (std::int64_t m = 0; m < (1 << k); ++m) {
      Dyadic t = shear_start_time({k, m});
      CHECK(t + Dyadic::pow2(-2 * k) == shear_start_time({k + 1, 2 * m}));
      if (m % 2 == 0 && m + 1 < (1 << k))
        CHECK(t + Dyadic::pow2(1 - 2 * k) == shear_start_time({k, m + 1}));
      CHECK(t < Dyadic(1));
    }
}

TEST_CASE("quad orders") {
  // n <= 2^floor(1/2) = 1, so (1,1,1,2) is not a member at k=1
  CHECK_THROWS_AS(less_lex({1, 1, 1, 1}, {1, 1, 1, 2}), std::domain_error);
  CHECK(less_lex({2, 1, 1, 1}, {2, 1, 1, 2}));
  CHECK(less_lex({2, 1, 2, 1}, {3, 1, 1, 1}));
  CHECK_FALSE(less_lex({3, 2, 1, 1}, {3, 2, 1, 1}));

  // order consequences of the swapped-tuple definition
  CHECK(less_time_quad({4, 1, 1, 1}, {3, 1, 1, 1}));  // larger k earlier
  CHECK(less_time_quad({4, 1, 2, 2}, {3, 1, 1, 1}));
  for (int k = 1; k <= 4; ++k)
    for (int kp = 2; kp <= 4; ++kp)
      if (kp >= 2)
        CHECK(less_time_quad({k, 1, 1, 1}, {kp, 2, 1, 1}));  // all m=1 precede m=2
  CHECK(less_time_quad({4, 1, 2, 1}, {4, 1, 1, 1}));  // i=2 before i=1
  CHECK(less_time_quad({4, 1, 1, 2}, {4, 1, 1, 1}));  // larger n first

  // brute-force agreement on all of N with k <= 4
  auto all = oracles::all_quads_upto_level(4);
  for (const auto& a : all)
    for (const auto& b : all)
      CHECK(less_time_quad(a, b) == oracles::lt_quad(a, b));
}

TEST_CASE("lex prefix is an order isomorphism with 1..|N_K|") {
  QuadIndex cutoff{4, 3, 1, 2};
  auto pre = lex_prefix(cutoff);
  for (size_t r = 0; r + 1 < pre.size(); ++r) CHECK(less_lex(pre[r], pre[r + 1]));
  CHECK_FALSE(less_lex(cutoff, pre.back()));
  // every member at these levels not in the prefix lies lex-beyond cutoff
  size_t total = 0;
  for (const auto& q : oracles::all_quads_upto_level(4))
    if (!less_lex(cutoff, q)) ++total;
  CHECK(pre.size() == total);
}

TEST_CASE("swap start times against brute force with tail bounds") {
  auto check_T = [](const QuadIndex& q) {
    Dyadic t = swap_start_time(q);
    auto b = oracles::T_quad_brute(q);
    CHECK(t >= b.lo);
    CHECK(t <= b.hi);
  };
  for (const auto& q : oracles::all_quads_upto_level(6)) check_T(q);

  // minimum of (N, <_time) starts at zero: that is the deepest level's
  // m=1 block, unreachable in finite form; instead check the closed
  // form's monotone consistency: the <_time-minimal member of every
  // finite prefix has the smallest start.
  auto sched = generate_schedule_quad_depth(3);
  for (size_t r = 0; r + 1 < sched.size(); ++r)
    CHECK(sched[r].start < sched[r + 1].start);

  // T_(1,1,1,1) = T_1 - 3/2: the (1,1,1,1) slot is the last of epoch 1
  CHECK(swap_start_time({1, 1, 1, 1}) + Dyadic(3, 1) == epoch_time(1));
}

TEST_CASE("epoch times") {
  CHECK(epoch_time(0) == Dyadic(0));
  CHECK(epoch_time(1) == Dyadic(12));
  auto b1 = oracles::T_epoch_brute(1);
  CHECK(epoch_time(1) >= b1.lo);
  CHECK(epoch_time(1) <= b1.hi);
  for (int m = 1; m <= 8; ++m) {
    auto b = oracles::T_epoch_brute(m);
    CHECK(epoch_time(m) >= b.lo);
    CHECK(epoch_time(m) <= b.hi);
    CHECK(epoch_time(m - 1) < epoch_time(m));
    CHECK(epoch_time(m) < Dyadic(42));
  }
  // T_m -> 42: the gap shrinks below 2^-8 by m = 30 (it decays like 2^-m/2)
  CHECK(Dyadic(42) - epoch_time(30) < Dyadic::pow2(-8));
}

TEST_CASE("quad budget: total active time is exactly 42") {
  CHECK(quad_budget_tail(0) == Dyadic(42));
  for (int K = 0; K <= 20; ++K) {
    CHECK(quad_budget_tail(K) == oracles::quad_tail_closed(K));
    CHECK(quad_budget_tail(K) > Dyadic(0));
  }
}

TEST_CASE("dyadic schedule generation") {
  // depth 0 -> empty
  CHECK(generate_schedule_dyadic(0, {}).empty());
  CHECK(generate_schedule_quad_depth(0).empty());

  // K=1, tau_1 = 1/4: [0,1/4] and [1/2,3/4]
  auto s = generate_schedule_dyadic(1, {rat(1, 4)});
  REQUIRE(s.size() == 2);
  CHECK(s[0].start == Dyadic(0));
  CHECK(s[1].start == Dyadic(1, 1));
  CHECK(s[0].duration == rat(1, 4));

  // Finiteness violation names the offending level
  CHECK_THROWS_WITH_AS(generate_schedule_dyadic(2, {rat(1, 4), rat(1, 8)}),
                       doctest::Contains("k=2"), std::domain_error);

  // budget at level k: 2^k slots of 2^-2k add up to 2^-k, and with the
  // boundary tau the partial active time is exactly 1 - 2^-K
  for (int K = 1; K <= 10; ++K) {
    std::vector<Rational> taus;
    for (int k = 1; k <= K; ++k) taus.push_back(Dyadic::pow2(-2 * k).to_rational());
    auto sched = generate_schedule_dyadic(K, taus);
    Rational active(0);
    std::map<int, Rational> per_level;
    for (const auto& e : sched) {
      active += e.duration;
      per_level[std::get<DyadicPair>(e.payload).k] += e.duration;
    }
    for (int k = 1; k <= K; ++k)
      CHECK(per_level[k] == Dyadic::pow2(-k).to_rational());
    CHECK(active == (Dyadic(1) - Dyadic::pow2(-K)).to_rational());
    // disjoint half-open intervals inside [0,1], exact arithmetic
    for (size_t r = 0; r + 1 < sched.size(); ++r) {
      CHECK(sched[r].start.to_rational() + sched[r].duration <=
            sched[r + 1].start.to_rational());
    }
    CHECK(sched.back().start.to_rational() + sched.back().duration <= Rational(1));
  }
}

TEST_CASE("quad schedule generation") {
  // lex prefix at (1,1,2,1) holds exactly the two k=1 slots, duration 3/2
  auto s = generate_schedule_quad(QuadIndex{1, 1, 2, 1});
  REQUIRE(s.size() == 2);
  CHECK(s[0].duration == rat(3, 2));
  CHECK(s[1].duration == rat(3, 2));
  auto q0 = std::get<QuadIndex>(s[0].payload);
  CHECK(q0.i == 2);  // i=2 runs first

  for (int depth : {1, 2, 3, 4}) {
    auto sched = generate_schedule_quad_depth(depth);
    size_t expect = 0;
    for (int k = 1; k <= depth; ++k) expect += size_t(k) * 2 * (size_t(1) << (k / 2));
    CHECK(sched.size() == expect);
    for (size_t r = 0; r + 1 < sched.size(); ++r)
      CHECK(sched[r].start.to_rational() + sched[r].duration <=
            sched[r + 1].start.to_rational());
    CHECK(sched.back().start.to_rational() + sched.back().duration <= Rational(42));
  }
}
