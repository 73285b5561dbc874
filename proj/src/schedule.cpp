#include "torusmix/schedule.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace torusmix::schedule {

void check_member(const DyadicPair& p) {
  if (p.k < 1 || p.k > 62)
    throw std::domain_error("DyadicPair: k out of range");
  if (p.m < 0 || p.m >= (std::int64_t(1) << p.k))
    throw std::domain_error("DyadicPair: need 0 <= m < 2^k");
}

void check_member(const QuadIndex& q) {
  if (q.k < 1 || q.k > 62) throw std::domain_error("QuadIndex: k out of range");
  if (q.m < 1 || q.m > q.k) throw std::domain_error("QuadIndex: need 1 <= m <= k");
  if (q.i != 1 && q.i != 2) throw std::domain_error("QuadIndex: i must be 1 or 2");
  if (q.n < 1 || q.n > quad_n_max(q.k))
    throw std::domain_error("QuadIndex: need 1 <= n <= 2^floor(k/2)");
}

bool less_time_dyadic(const DyadicPair& a, const DyadicPair& b) {
  check_member(a);
  check_member(b);
  // compare m_a * 2^-k_a with m_b * 2^-k_b exactly
  int l = std::max(a.k, b.k);
  __int128 va = (__int128)a.m << (l - a.k);
  __int128 vb = (__int128)b.m << (l - b.k);
  if (va != vb) return va < vb;
  return a.k < b.k;
}

bool less_lex(const QuadIndex& a, const QuadIndex& b) {
  check_member(a);
  check_member(b);
  if (a.k != b.k) return a.k < b.k;
  if (a.m != b.m) return a.m < b.m;
  if (a.i != b.i) return a.i < b.i;
  return a.n < b.n;
}

bool less_time_quad(const QuadIndex& a, const QuadIndex& b) {
  check_member(a);
  check_member(b);
  // (m_a, k_b, i_b, n_b) <_lex (m_b, k_a, i_a, n_a)
  if (a.m != b.m) return a.m < b.m;
  if (b.k != a.k) return b.k < a.k;
  if (b.i != a.i) return b.i < a.i;
  return b.n < a.n;
}

Dyadic shear_start_time(const DyadicPair& p) {
  check_member(p);
  // Slots earlier than (k,m): per level k', ceil(m*2^(k'-k)) slots start
  // strictly left of m*2^-k; for k' < k one more if the positions tie.
  // Levels k' >= k contribute the geometric total m*2^(1-2k).
  Dyadic t = Dyadic(p.m) * Dyadic::pow2(1 - 2 * p.k);
  for (int kp = 1; kp < p.k; ++kp) {
    int sh = p.k - kp;
    std::int64_t count = (p.m + (std::int64_t(1) << sh) - 1) >> sh;  // ceil
    if ((p.m & ((std::int64_t(1) << sh) - 1)) == 0 && p.m > 0) ++count;
    if (p.m == 0) count = 1;  // only the tie (k',0) itself, k' < k
    t = t + Dyadic(count) * Dyadic::pow2(-2 * kp);
  }
  return t;
}

namespace {

// S(a) = sum_{k >= a} 2^(floor(k/2) - k), exact.
Dyadic tail_S(int a) {
  int j0 = (a + 1) / 2;      // even k = 2j, j >= ceil(a/2)
  int j1 = a / 2;            // odd k = 2j+1, j >= ceil((a-1)/2)
  return Dyadic::pow2(1 - j0) + Dyadic::pow2(-j1);
}

}  // namespace

Dyadic swap_start_time(const QuadIndex& q) {
  check_member(q);
  const Dyadic six(6);
  Dyadic t(0);
  // slots of earlier epochs m' < m, level k' >= m'
  for (int kp = 1; kp < q.m; ++kp)
    t = t + six * Dyadic(kp) * Dyadic::pow2(kp / 2 - kp);
  if (q.m > 1) t = t + six * Dyadic(q.m - 1) * tail_S(q.m);
  // same epoch, deeper levels k' > k
  t = t + six * tail_S(q.k + 1);
  // same epoch and level: the i=2 block precedes i=1, larger n precedes
  std::int64_t ahead = (q.i == 1 ? quad_n_max(q.k) : 0) + (quad_n_max(q.k) - q.n);
  t = t + Dyadic(3) * Dyadic(ahead) * Dyadic::pow2(-q.k);
  return t;
}

Dyadic epoch_time(int m) {
  if (m < 0) throw std::domain_error("epoch_time: m >= 0");
  Dyadic t(0);
  for (int mp = 1; mp <= m; ++mp) t = t + Dyadic(6) * tail_S(mp);
  return t;
}

Dyadic quad_budget_tail(int K) {
  // 42 - sum_{k<=K} 2k * 2^floor(k/2) * 3*2^-k
  Dyadic used(0);
  for (int k = 1; k <= K; ++k)
    used = used + Dyadic(6) * Dyadic(k) * Dyadic::pow2(k / 2 - k);
  return Dyadic(42) - used;
}

std::vector<ScheduleEntry> generate_schedule_dyadic(
    int K, const std::vector<Rational>& taus) {
  if (K < 0) throw std::domain_error("generate_schedule_dyadic: K >= 0");
  if ((int)taus.size() < K)
    throw std::domain_error("generate_schedule_dyadic: need a tau per level");
  for (int k = 1; k <= K; ++k) {
    if (!(taus[k - 1] > 0) || taus[k - 1] > Dyadic::pow2(-2 * k).to_rational())
      throw std::domain_error(
          "Finiteness Condition violated at k=" + std::to_string(k) +
          ": need 0 < tau_k <= 2^-2k");
  }
  std::vector<ScheduleEntry> out;
  for (int k = 1; k <= K; ++k)
    for (std::int64_t m = 0; m < (std::int64_t(1) << k); ++m)
      out.push_back({shear_start_time({k, m}), taus[k - 1], DyadicPair{k, m}});
  std::sort(out.begin(), out.end(),
            [](const ScheduleEntry& a, const ScheduleEntry& b) {
              return a.start < b.start;
            });
  return out;
}

std::vector<QuadIndex> lex_prefix(const QuadIndex& cutoff) {
  check_member(cutoff);
  std::vector<QuadIndex> out;
  for (int k = 1; k <= cutoff.k; ++k)
    for (int m = 1; m <= k; ++m)
      for (int i = 1; i <= 2; ++i)
        for (std::int64_t n = 1; n <= quad_n_max(k); ++n) {
          QuadIndex q{k, m, i, n};
          if (less_lex(cutoff, q)) continue;
          out.push_back(q);
        }
  return out;
}

std::vector<ScheduleEntry> generate_schedule_quad(const QuadIndex& cutoff) {
  std::vector<ScheduleEntry> out;
  for (const QuadIndex& q : lex_prefix(cutoff))
    out.push_back({swap_start_time(q),
                   (Dyadic(3) * Dyadic::pow2(-q.k)).to_rational(), q});
  std::sort(out.begin(), out.end(),
            [](const ScheduleEntry& a, const ScheduleEntry& b) {
              return a.start < b.start;
            });
  return out;
}

std::vector<ScheduleEntry> generate_schedule_quad_depth(int depth) {
  if (depth < 0) throw std::domain_error("generate_schedule_quad_depth: depth >= 0");
  if (depth == 0) return {};
  return generate_schedule_quad(quad_prefix_cutoff(depth));
}

std::string payload_str(const ScheduleEntry& e) {
  if (std::holds_alternative<DyadicPair>(e.payload)) {
    const auto& p = std::get<DyadicPair>(e.payload);
    return "(" + std::to_string(p.k) + "," + std::to_string(p.m) + ")";
  }
  const auto& q = std::get<QuadIndex>(e.payload);
  return "(" + std::to_string(q.k) + "," + std::to_string(q.m) + "," +
         std::to_string(q.i) + "," + std::to_string(q.n) + ")";
}

}  // namespace torusmix::schedule
