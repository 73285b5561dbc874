#include "torusmix/composite.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "torusmix/util.hpp"

namespace torusmix::composite {

using flows::PointD;
using flows::ShearSpec;
using flows::SwapSpec;
using flows::Vec2;
using schedule::QuadIndex;
using schedule::ScheduleEntry;

ValidationReport validate_fractal(const FractalSpec& spec) {
  ValidationReport rep;
  rep.finiteness_ok = rep.finiteness_strict_ok = true;
  rep.cancellation_ok = !spec.levels.empty();
  for (int k = 1; k <= spec.K(); ++k) {
    const FractalTuple& tp = spec.levels[k - 1];
    LevelValidation lv;
    lv.k = k;
    Rational cap = Dyadic::pow2(-2 * k).to_rational();
    lv.finiteness = tp.tau > 0 && tp.tau <= cap;
    lv.finiteness_strict = tp.tau > 0 && tp.tau < cap;
    if (lv.finiteness && !lv.finiteness_strict) rep.boundary_case = true;
    if (k < spec.K()) {
      const FractalTuple& nx = spec.levels[k];
      lv.cancel_direction = nx.i != tp.i;
      lv.cancel_tau = Rational(2) * nx.tau == rat(1, 2 * (long)tp.L);
      lv.cancel_parity = is_odd_integer(Rational(2 * (long)nx.L) * tp.tau);
    }
    rep.finiteness_ok = rep.finiteness_ok && lv.finiteness;
    rep.finiteness_strict_ok = rep.finiteness_strict_ok && lv.finiteness_strict;
    if (k < spec.K())
      rep.cancellation_ok = rep.cancellation_ok && lv.cancel_direction &&
                            lv.cancel_tau && lv.cancel_parity;
    rep.levels.push_back(lv);
  }
  if (spec.levels.empty()) rep.finiteness_ok = rep.finiteness_strict_ok = false;
  return rep;
}

std::int64_t MixSpec::L_of(const QuadIndex& q) const {
  auto it = overrides.find({q.k, q.m, q.i, q.n});
  if (it != overrides.end()) return it->second;
  return q.k + 1;
}

void MixSpec::set_L(const QuadIndex& q, std::int64_t L) {
  if (L < q.k + 1) throw std::domain_error("MixSpec: need L >= k+1");
  overrides[{q.k, q.m, q.i, q.n}] = L;
}

namespace {

std::vector<ScheduleEntry> fractal_schedule(const FractalSpec& spec) {
  std::vector<Rational> taus;
  for (const auto& tp : spec.levels) taus.push_back(tp.tau);
  return schedule::generate_schedule_dyadic(spec.K(), taus);
}

}  // namespace

Vec2<double> fractal_velocity(const FractalSpec& spec, const PointD& x, double t) {
  if (t < 0.0 || t > 1.0)
    throw std::domain_error("fractal_velocity: t outside [0,1]");
  // closed slot intervals, first match in start order
  for (const ScheduleEntry& e : fractal_schedule(spec)) {
    double t0 = e.start.to_double();
    if (t < t0) break;
    if (t <= t0 + e.duration.get_d()) {
      int k = std::get<schedule::DyadicPair>(e.payload).k;
      return flows::shear_velocity({spec.levels[k - 1].i, spec.levels[k - 1].L}, x);
    }
  }
  return {0.0, 0.0};
}

Vec2<double> mixing_velocity(const MixSpec& spec, const PointD& x, double t) {
  if (t < 0.0 || t > 50.0)
    throw std::domain_error("mixing_velocity: t outside [0,50]");
  for (const ScheduleEntry& e : schedule::generate_schedule_quad(spec.cutoff)) {
    double t0 = e.start.to_double();
    if (t < t0) break;
    if (t < t0 + e.duration.get_d()) {  // half-open slot
      const QuadIndex& q = std::get<QuadIndex>(e.payload);
      SwapSpec s{q.i, q.k, q.n, spec.L_of(q)};
      return flows::swap_velocity(s, t - t0, x);
    }
  }
  return {0.0, 0.0};
}

Vec2<double> mirrored_velocity(const MixSpec& spec, const PointD& x, double t) {
  if (t < 0.0 || t > 100.0)
    throw std::domain_error("mirrored_velocity: t outside [0,100]");
  if (t <= 50.0) return mixing_velocity(spec, x, t);
  Vec2<double> u = mixing_velocity(spec, x, 100.0 - t);
  return {-u.x1, -u.x2};
}

SlicedField slice_fractal(const FractalSpec& spec) {
  SlicedField f;
  f.horizon = 1.0;
  for (const ScheduleEntry& e : fractal_schedule(spec)) {
    int k = std::get<schedule::DyadicPair>(e.payload).k;
    ShearSpec s{spec.levels[k - 1].i, spec.levels[k - 1].L};
    SlicedField::Slice sl;
    sl.t0 = e.start.to_double();
    sl.t1 = sl.t0 + e.duration.get_d();
    sl.u = [s](const PointD& x) { return flows::shear_velocity(s, x); };
    f.slices.push_back(sl);
  }
  std::sort(f.slices.begin(), f.slices.end(),
            [](const auto& a, const auto& b) { return a.t0 < b.t0; });
  return f;
}

SlicedField slice_mixing(const MixSpec& spec) {
  SlicedField f;
  f.horizon = 50.0;
  for (const ScheduleEntry& e : schedule::generate_schedule_quad(spec.cutoff)) {
    const QuadIndex& q = std::get<QuadIndex>(e.payload);
    SwapSpec s{q.i, q.k, q.n, spec.L_of(q)};
    double t0 = e.start.to_double();
    double W = std::ldexp(1.0, -q.k);
    // the two internal phases are each stationary
    SlicedField::Slice p1, p2;
    p1.t0 = t0;
    p1.t1 = t0 + 2 * W;
    p1.u = [s](const PointD& x) { return flows::swap_velocity(s, 0.0, x); };
    p2.t0 = t0 + 2 * W;
    p2.t1 = t0 + 3 * W;
    p2.u = [s, W](const PointD& x) { return flows::swap_velocity(s, 2.5 * W, x); };
    f.slices.push_back(p1);
    f.slices.push_back(p2);
  }
  std::sort(f.slices.begin(), f.slices.end(),
            [](const auto& a, const auto& b) { return a.t0 < b.t0; });
  return f;
}

SlicedField slice_mirrored(const MixSpec& spec) {
  SlicedField half = slice_mixing(spec);
  SlicedField f;
  f.horizon = 100.0;
  f.slices = half.slices;
  for (const auto& sl : half.slices) {
    SlicedField::Slice m;
    m.t0 = 100.0 - sl.t1;
    m.t1 = 100.0 - sl.t0;
    auto inner = sl.u;
    m.u = [inner](const PointD& x) {
      Vec2<double> u = inner(x);
      return Vec2<double>{-u.x1, -u.x2};
    };
    f.slices.push_back(m);
  }
  std::sort(f.slices.begin(), f.slices.end(),
            [](const auto& a, const auto& b) { return a.t0 < b.t0; });
  return f;
}

namespace {

// Spatial Fourier coefficients of a stationary vector field on the
// quadrature grid, modes |j|_inf <= J, both components.
struct ModeBlock {
  int J = 0;
  // c[(j1+J) + (2J+1)*(j2+J)][comp]
  std::vector<std::array<std::complex<double>, 2>> c;
};

ModeBlock spatial_modes(const std::function<Vec2<double>(const PointD&)>& u,
                        int N, int J) {
  ModeBlock mb;
  mb.J = J;
  int W = 2 * J + 1;
  mb.c.assign(size_t(W) * W, {std::complex<double>(0), std::complex<double>(0)});
  std::vector<std::complex<double>> ph(size_t(N) * W);
  for (int a = 0; a < N; ++a) {
    double x = (a + 0.5) / N;
    for (int j = -J; j <= J; ++j)
      ph[size_t(a) * W + (j + J)] = std::polar(1.0, -2.0 * M_PI * j * x);
  }
  std::vector<std::vector<std::array<std::complex<double>, 2>>> rowsums(
      N, std::vector<std::array<std::complex<double>, 2>>(W));
  util::parallel_rows(N, [&](int row) {
    double x2 = (row + 0.5) / N;
    auto& rs = rowsums[row];
    for (auto& v : rs) v = {std::complex<double>(0), std::complex<double>(0)};
    for (int col = 0; col < N; ++col) {
      PointD x{(col + 0.5) / N, x2};
      Vec2<double> val = u(x);
      if (val.x1 == 0.0 && val.x2 == 0.0) continue;
      for (int j1 = -J; j1 <= J; ++j1) {
        std::complex<double> w = ph[size_t(col) * W + (j1 + J)];
        rs[j1 + J][0] += w * val.x1;
        rs[j1 + J][1] += w * val.x2;
      }
    }
  });
  for (int row = 0; row < N; ++row)
    for (int j2 = -J; j2 <= J; ++j2) {
      std::complex<double> w = ph[size_t(row) * W + (j2 + J)];
      for (int j1 = -J; j1 <= J; ++j1) {
        mb.c[size_t(j2 + J) * W + (j1 + J)][0] += w * rowsums[row][j1 + J][0];
        mb.c[size_t(j2 + J) * W + (j1 + J)][1] += w * rowsums[row][j1 + J][1];
      }
    }
  double inv = 1.0 / (double(N) * N);
  for (auto& e : mb.c) {
    e[0] *= inv;
    e[1] *= inv;
  }
  return mb;
}

// integral of the level-q window-w tent over [a,b], window within [0,T]
double tent_integral(double T, int q, int w, double a, double b) {
  double len = T / std::ldexp(1.0, q);
  double lo = w * len, mid = lo + len / 2, hi = lo + len;
  a = std::max(a, lo);
  b = std::min(b, hi);
  if (b <= a) return 0.0;
  auto up = [&](double t) { return (t - lo) * (t - lo) / len; };
  auto down = [&](double t) { return -(hi - t) * (hi - t) / len; };
  double s = 0.0;
  if (a < mid) s += up(std::min(b, mid)) - up(a);
  if (b > mid) s += down(b) - down(std::max(a, mid));
  return s;
}

}  // namespace

WeakStarResult weak_star_distance(const SlicedField& a, const SlicedField& b,
                                  const TestFamily& family) {
  WeakStarResult res;
  res.grid_warning = family.grid_warning;
  double T = family.horizon;
  int J = family.J_max, W = 2 * J + 1;

  std::vector<double> cuts{0.0, T};
  for (const auto& sl : a.slices) { cuts.push_back(sl.t0); cuts.push_back(sl.t1); }
  for (const auto& sl : b.slices) { cuts.push_back(sl.t0); cuts.push_back(sl.t1); }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double x, double y) { return std::fabs(x - y) < 1e-12; }),
             cuts.end());

  auto active = [](const SlicedField& f, double t) -> const SlicedField::Slice* {
    for (const auto& sl : f.slices)
      if (t >= sl.t0 - 1e-12 && t < sl.t1 - 1e-12) return &sl;
    return nullptr;
  };

  struct Piece {
    double t0, t1;
    ModeBlock mb;
  };
  std::vector<Piece> pieces;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    double t0 = cuts[i], t1 = cuts[i + 1];
    if (t1 - t0 < 1e-12 || t0 >= T) continue;
    double tm = (t0 + t1) / 2;
    const auto* sa = active(a, tm);
    const auto* sb = active(b, tm);
    if (!sa && !sb) continue;
    auto diff = [sa, sb](const PointD& x) {
      Vec2<double> va = sa ? sa->u(x) : Vec2<double>{0, 0};
      Vec2<double> vb = sb ? sb->u(x) : Vec2<double>{0, 0};
      return Vec2<double>{va.x1 - vb.x1, va.x2 - vb.x2};
    };
    Piece p{t0, std::min(t1, T), spatial_modes(diff, family.quad_N, J)};
    bool all_zero = true;
    for (const auto& e : p.mb.c)
      if (std::abs(e[0]) + std::abs(e[1]) > 1e-15) { all_zero = false; break; }
    if (!all_zero) pieces.push_back(std::move(p));
  }

  double total = 0.0;
  double norm = 1.0 / std::max(family.ball_radius, 1e-300);
  for (int q = 0; q <= family.Q; ++q) {
    int nw = 1 << q;
    for (int w = 0; w < nw; ++w) {
      for (int j2 = -J; j2 <= J; ++j2)
        for (int j1 = -J; j1 <= J; ++j1) {
          std::complex<double> s0(0), s1(0);
          for (const Piece& p : pieces) {
            double ti = tent_integral(T, q, w, p.t0, p.t1);
            if (ti == 0.0) continue;
            const auto& e = p.mb.c[size_t(j2 + J) * W + (j1 + J)];
            s0 += ti * e[0];
            s1 += ti * e[1];
          }
          if (s0 == std::complex<double>(0) && s1 == std::complex<double>(0))
            continue;
          double weight =
              std::ldexp(1.0, -(std::abs(j1) + std::abs(j2) + q)) * norm;
          total += weight * (std::abs(s0) + std::abs(s1));
        }
    }
  }
  res.distance = total;
  return res;
}

TestFamily family_for_fractal(const FractalSpec& spec, double horizon) {
  TestFamily fam;
  fam.horizon = horizon;
  std::int64_t Lmax = 1;
  for (const auto& tp : spec.levels) Lmax = std::max(Lmax, tp.L);
  fam.J_max = (int)std::min<std::int64_t>(Lmax + 1, 96);
  if (Lmax + 1 > 96) fam.grid_warning = true;
  std::int64_t want = 16 * Lmax;
  int N = 64;
  while (N < want && N < 2048) N *= 2;
  if (N < want) fam.grid_warning = true;
  fam.quad_N = N;
  return fam;
}

BuildResult build_vv_params(int K, const BuildOptions& opts) {
  if (K < 1) throw std::domain_error("build_vv_params: K >= 1");
  BuildResult out;
  out.spec.levels.push_back({1, 4, rat(1, 4)});
  for (int k = 1; k < K; ++k) {
    const FractalTuple& cur = out.spec.levels[k - 1];
    std::int64_t Lprev2 = (k >= 2) ? out.spec.levels[k - 2].L : 1;
    FractalTuple next;
    next.i = cur.i == 1 ? 2 : 1;
    next.tau = rat(1, 4 * (long)cur.L);
    std::int64_t floorL = std::int64_t(1) << (2 * k + 2);
    double eps =
        (k - 1 < (int)opts.eps_budget.size()) ? opts.eps_budget[k - 1] : -1.0;
    std::int64_t M = 0;
    double best = -1.0;
    for (;; ++M) {
      if (M > opts.M_cap)
        throw std::runtime_error(
            "build_vv_params: proximity unattainable within M cap; best "
            "weak-* distance " +
            std::to_string(best));
      next.L = 2 * Lprev2 * (2 * M + 1);
      if (next.L < floorL) continue;
      if (eps < 0) break;
      FractalSpec trial = out.spec;
      trial.levels.push_back(next);
      TestFamily fam = family_for_fractal(trial);
      double d =
          weak_star_distance(slice_fractal(trial), slice_fractal(out.spec), fam)
              .distance;
      if (best < 0 || d < best) best = d;
      if (d <= eps) { out.achieved_distance.push_back(d); break; }
    }
    if (eps < 0) out.achieved_distance.push_back(-1.0);
    out.chosen_M.push_back(M);
    out.spec.levels.push_back(next);
  }
  return out;
}

namespace {

std::string rat_str(const Rational& r) {
  std::ostringstream os;
  os << r.get_num().get_str();
  if (r.get_den() != 1) os << "/" << r.get_den().get_str();
  return os.str();
}

Rational parse_rat(const std::string& s) {
  auto pos = s.find('/');
  if (pos == std::string::npos) return Rational(mpz_class(s));
  Rational r(mpz_class(s.substr(0, pos)), mpz_class(s.substr(pos + 1)));
  r.canonicalize();
  return r;
}

std::vector<std::pair<std::string, std::string>> parse_kv(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto pos = line.find('=');
    if (pos == std::string::npos) continue;
    out.emplace_back(line.substr(0, pos), line.substr(pos + 1));
  }
  return out;
}

}  // namespace

std::string to_config(const FractalSpec& spec) {
  std::ostringstream os;
  os << "type=fractal\nK=" << spec.K() << "\n";
  for (int k = 1; k <= spec.K(); ++k) {
    const auto& tp = spec.levels[k - 1];
    os << "level." << k << "=" << tp.i << "," << tp.L << "," << rat_str(tp.tau)
       << "\n";
  }
  return os.str();
}

std::string to_config(const MixSpec& spec) {
  std::ostringstream os;
  os << "type=mix\ncutoff=" << spec.cutoff.k << "," << spec.cutoff.m << ","
     << spec.cutoff.i << "," << spec.cutoff.n << "\n";
  for (const auto& [key, L] : spec.overrides)
    os << "L." << key[0] << "," << key[1] << "," << key[2] << "," << key[3]
       << "=" << L << "\n";
  return os.str();
}

FractalSpec fractal_from_config(const std::string& text) {
  FractalSpec spec;
  int K = 0;
  std::map<int, FractalTuple> lv;
  for (const auto& [k, v] : parse_kv(text)) {
    if (k == "type") {
      if (v != "fractal") throw std::runtime_error("config: not a fractal spec");
    } else if (k == "K") {
      K = std::stoi(v);
    } else if (k.rfind("level.", 0) == 0) {
      int idx = std::stoi(k.substr(6));
      std::istringstream fs(v);
      std::string a, b, c;
      std::getline(fs, a, ',');
      std::getline(fs, b, ',');
      std::getline(fs, c);
      lv[idx] = FractalTuple{std::stoi(a), std::stoll(b), parse_rat(c)};
    }
  }
  for (int k = 1; k <= K; ++k) {
    auto it = lv.find(k);
    if (it == lv.end()) throw std::runtime_error("config: missing level");
    spec.levels.push_back(it->second);
  }
  return spec;
}

MixSpec mix_from_config(const std::string& text) {
  MixSpec spec;
  for (const auto& [k, v] : parse_kv(text)) {
    if (k == "type") {
      if (v != "mix" && v != "mirrored")
        throw std::runtime_error("config: not a mix spec");
    } else if (k == "cutoff") {
      std::istringstream fs(v);
      std::string a, b, c, d;
      std::getline(fs, a, ','); std::getline(fs, b, ',');
      std::getline(fs, c, ','); std::getline(fs, d);
      spec.cutoff = QuadIndex{std::stoi(a), std::stoi(b), std::stoi(c),
                              std::stoll(d)};
    } else if (k.rfind("L.", 0) == 0) {
      std::istringstream fs(k.substr(2));
      std::string a, b, c, d;
      std::getline(fs, a, ','); std::getline(fs, b, ',');
      std::getline(fs, c, ','); std::getline(fs, d);
      spec.overrides[{std::stoll(a), std::stoll(b), std::stoll(c),
                      std::stoll(d)}] = std::stoll(v);
    }
  }
  return spec;
}

}  // namespace torusmix::composite
