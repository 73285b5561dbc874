#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "torusmix/exact.hpp"

namespace torusmix::schedule {

// Member of the dyadic index set: k >= 1, 0 <= m < 2^k.
struct DyadicPair {
  int k = 1;
  std::int64_t m = 0;
};

// Member of the quadruple index set: m <= k, i in {1,2}, n <= 2^floor(k/2).
struct QuadIndex {
  int k = 1;
  int m = 1;
  int i = 1;
  std::int64_t n = 1;
};

void check_member(const DyadicPair& p);  // throws std::domain_error
void check_member(const QuadIndex& q);

inline std::int64_t quad_n_max(int k) { return std::int64_t(1) << (k / 2); }

// Total order over which the shear occurrence times accumulate:
// earlier dyadic position m*2^-k first, ties broken by smaller k.
bool less_time_dyadic(const DyadicPair& a, const DyadicPair& b);

// Lexicographic well-order on (k,m,i,n).
bool less_lex(const QuadIndex& a, const QuadIndex& b);

// Swapped-tuple order: smaller m first; within an epoch larger k first,
// then i=2 before i=1, then larger n first.
bool less_time_quad(const QuadIndex& a, const QuadIndex& b);

// Exact start time of the (k,m) shear slot. Closed form; validated
// against brute-force enumeration in the tests.
Dyadic shear_start_time(const DyadicPair& p);

// Exact start time of the (k,m,i,n) swap slot. Sum of 3*2^-k' over all
// earlier slots; value is an exact dyadic (every summand is).
Dyadic swap_start_time(const QuadIndex& q);

// Exact end of epoch m (start of epoch m+1); epoch_time(0) = 0, limit 42.
Dyadic epoch_time(int m);

// Tail of the full quad budget beyond level K: 42 - sum_{k<=K} of all
// slot durations. Used by tests for truncation bounds.
Dyadic quad_budget_tail(int K);

struct ScheduleEntry {
  Dyadic start;
  Rational duration;  // > 0; tau_k of a fractal spec need not be dyadic
  std::variant<DyadicPair, QuadIndex> payload;
};

// Dyadic-family schedule for levels k <= K with the given slot lengths
// taus[k-1]. Requires tau_k <= 2^-2k (slots stay disjoint half-open even
// on the boundary); a larger tau is rejected naming the offending k.
std::vector<ScheduleEntry> generate_schedule_dyadic(
    int K, const std::vector<Rational>& taus);

// Quad-family schedule of the lex prefix up to and including `cutoff`.
std::vector<ScheduleEntry> generate_schedule_quad(const QuadIndex& cutoff);

// Convenience: all slots with k <= depth (depth 0 -> empty).
std::vector<ScheduleEntry> generate_schedule_quad_depth(int depth);

// Lex cutoff whose prefix is exactly { entries with k <= depth }.
inline QuadIndex quad_prefix_cutoff(int depth) {
  return QuadIndex{depth, depth, 2, quad_n_max(depth)};
}

// Lex enumeration of the full index set: ascending, 1-based rank.
std::vector<QuadIndex> lex_prefix(const QuadIndex& cutoff);

std::string payload_str(const ScheduleEntry& e);

}  // namespace torusmix::schedule
