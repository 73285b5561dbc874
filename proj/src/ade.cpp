#include "torusmix/ade.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <map>

#include "torusmix/util.hpp"

namespace torusmix::ade {

using flows::PointD;
using flows::Vec2;
using grid::GridField;
using transport::FlowProgram;
using transport::Segment;

namespace {

// One FFT workspace per grid size; planning is serialised, execution uses
// the new-array interface on caller-owned buffers.
struct FftPlans {
  fftw_plan fwd = nullptr, bwd = nullptr;
  int N = 0;
};

FftPlans& plans_for(int N) {
  static std::mutex mu;
  static std::map<int, FftPlans> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(N);
  if (it != cache.end()) return it->second;
  FftPlans p;
  p.N = N;
  double* re = fftw_alloc_real(size_t(N) * N);
  fftw_complex* sp = fftw_alloc_complex(size_t(N) * (N / 2 + 1));
  p.fwd = fftw_plan_dft_r2c_2d(N, N, re, sp, FFTW_ESTIMATE);
  p.bwd = fftw_plan_dft_c2r_2d(N, N, sp, re, FFTW_ESTIMATE);
  fftw_free(re);
  fftw_free(sp);
  return cache.emplace(N, p).first->second;
}

struct FftBuffers {
  int N = 0;
  double* re = nullptr;
  fftw_complex* sp = nullptr;
  FftBuffers(int n) : N(n) {
    re = fftw_alloc_real(size_t(N) * N);
    sp = fftw_alloc_complex(size_t(N) * (N / 2 + 1));
  }
  ~FftBuffers() {
    fftw_free(re);
    fftw_free(sp);
  }
  FftBuffers(const FftBuffers&) = delete;
  FftBuffers& operator=(const FftBuffers&) = delete;
};

int signed_freq(int idx, int N) { return idx <= N / 2 ? idx : idx - N; }

// Multiply the spectrum by the heat factor; returns the exact spectral
// dissipation sum_j |f_j|^2 (1 - e^{-2 nu_dt |2pi j|^2}) = ||f||^2-||Hf||^2.
double heat_multiply(fftw_complex* sp, int N, double nu_dt) {
  double diss = 0.0;
  int cols = N / 2 + 1;
  double scale = 1.0 / (double(N) * N);
  for (int r = 0; r < N; ++r) {
    int j2 = signed_freq(r, N);
    for (int c = 0; c < cols; ++c) {
      int j1 = signed_freq(c, N);
      double k2 = 4.0 * M_PI * M_PI * (double(j1) * j1 + double(j2) * j2);
      double g = std::exp(-nu_dt * k2);
      double re = sp[size_t(r) * cols + c][0], im = sp[size_t(r) * cols + c][1];
      // hermitian double counting: interior columns represent +/- j1
      double mult = (c == 0 || c == N / 2) ? 1.0 : 2.0;
      double amp2 = (re * re + im * im) * scale * scale * mult;
      diss += amp2 * (1.0 - g * g);
      sp[size_t(r) * cols + c][0] = re * g;
      sp[size_t(r) * cols + c][1] = im * g;
    }
  }
  return diss;
}

void fft_forward(const GridField& f, FftBuffers& buf) {
  std::copy(f.values.begin(), f.values.end(), buf.re);
  fftw_execute_dft_r2c(plans_for(f.N).fwd, buf.re, buf.sp);
}

void fft_backward(FftBuffers& buf, GridField& out) {
  fftw_execute_dft_c2r(plans_for(out.N).bwd, buf.sp, buf.re);
  double scale = 1.0 / (double(out.N) * out.N);
  for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = buf.re[i] * scale;
}

}  // namespace

GridField heat_step(const GridField& f, double nu_dt) {
  if (nu_dt < 0) throw std::domain_error("heat_step: nu_dt >= 0");
  if (nu_dt == 0.0) return f;
  FftBuffers buf(f.N);
  fft_forward(f, buf);
  heat_multiply(buf.sp, f.N, nu_dt);
  GridField out(f.N);
  fft_backward(buf, out);
  return out;
}

namespace {

// Lagrange 4-point weights at offset s in [0,1) from node 0 of -1,0,1,2.
inline void lagrange_weights(double s, double w[4]) {
  w[0] = -s * (s - 1) * (s - 2) / 6.0;
  w[1] = (s + 1) * (s - 1) * (s - 2) / 2.0;
  w[2] = -(s + 1) * s * (s - 2) / 2.0;
  w[3] = (s + 1) * s * (s - 1) / 6.0;
}

double interp_at(const GridField& f, double x1, double x2, int order) {
  int N = f.N;
  double u = x1 * N - 0.5, v = x2 * N - 0.5;
  double bu = std::floor(u), bv = std::floor(v);
  double su = u - bu, sv = v - bv;
  int cu = (int)bu, cv = (int)bv;
  auto wrap = [N](int a) {
    a %= N;
    return a < 0 ? a + N : a;
  };
  if (order == 1) {
    int c0 = wrap(cu), c1 = wrap(cu + 1), r0 = wrap(cv), r1 = wrap(cv + 1);
    double f00 = f.at(r0, c0), f01 = f.at(r0, c1);
    double f10 = f.at(r1, c0), f11 = f.at(r1, c1);
    return (1 - sv) * ((1 - su) * f00 + su * f01) +
           sv * ((1 - su) * f10 + su * f11);
  }
  double wu[4], wv[4];
  lagrange_weights(su, wu);
  lagrange_weights(sv, wv);
  int cols[4] = {wrap(cu - 1), wrap(cu), wrap(cu + 1), wrap(cu + 2)};
  int rows[4] = {wrap(cv - 1), wrap(cv), wrap(cv + 1), wrap(cv + 2)};
  double val = 0.0;
  for (int r = 0; r < 4; ++r) {
    double rowv = 0.0;
    const double* base = &f.values[size_t(rows[r]) * N];
    for (int c = 0; c < 4; ++c) rowv += wu[c] * base[cols[c]];
    val += wv[r] * rowv;
  }
  // clip to the hull of the 2x2 neighbours: discrete maximum principle
  double m0 = f.at(rows[1], cols[1]), m1 = f.at(rows[1], cols[2]);
  double m2 = f.at(rows[2], cols[1]), m3 = f.at(rows[2], cols[2]);
  double lo = std::min(std::min(m0, m1), std::min(m2, m3));
  double hi = std::max(std::max(m0, m1), std::max(m2, m3));
  return std::min(std::max(val, lo), hi);
}

}  // namespace

GridField advect_step(const GridField& f, const FlowProgram& prog, double t0,
                      double dt, int interp_order) {
  const Segment* seg = transport::segment_at(prog, t0 + dt / 2);
  if (!seg || t0 < seg->t0d - 1e-12 || t0 + dt > seg->t1d + 1e-12)
    throw std::domain_error("advect_step: substep straddles a breakpoint");
  if (std::holds_alternative<transport::IdentityPrim>(seg->prim)) return f;
  GridField out(f.N);
  double from = t0 + dt, to = t0;
  util::parallel_rows(f.N, [&](int row) {
    double x2 = f.cell_x2(row);
    for (int col = 0; col < f.N; ++col) {
      PointD d = transport::flow_in_segment<double>(*seg, from, to,
                                                    PointD{f.cell_x1(col), x2});
      out.at(row, col) = interp_at(f, d.x1, d.x2, interp_order);
    }
  });
  return out;
}

namespace {

struct PhiGrids {
  GridField s, ds1, ds2, lap;  // space part and derivatives
  std::vector<double> poly, dpoly;
};

PhiGrids build_phi(const TestFunctionSpec& phi, int N) {
  PhiGrids pg;
  pg.s = GridField(N);
  pg.ds1 = GridField(N);
  pg.ds2 = GridField(N);
  pg.lap = GridField(N);
  for (int r = 0; r < N; ++r) {
    double x2 = pg.s.cell_x2(r);
    for (int c = 0; c < N; ++c) {
      double x1 = pg.s.cell_x1(c);
      double sv = 0, d1 = 0, d2 = 0, lp = 0;
      for (const auto& m : phi.modes) {
        std::complex<double> e =
            m.coeff * std::polar(1.0, 2 * M_PI * (m.j1 * x1 + m.j2 * x2));
        sv += e.real();
        d1 += (-2 * M_PI * m.j1) * e.imag();
        d2 += (-2 * M_PI * m.j2) * e.imag();
        lp += -4 * M_PI * M_PI * (double(m.j1) * m.j1 + double(m.j2) * m.j2) *
              e.real();
      }
      pg.s.at(r, c) = sv;
      pg.ds1.at(r, c) = d1;
      pg.ds2.at(r, c) = d2;
      pg.lap.at(r, c) = lp;
    }
  }
  pg.poly = phi.time_poly;
  pg.dpoly.assign(pg.poly.size() > 1 ? pg.poly.size() - 1 : 1, 0.0);
  for (size_t i = 1; i < pg.poly.size(); ++i) pg.dpoly[i - 1] = i * pg.poly[i];
  return pg;
}

double poly_eval(const std::vector<double>& p, double t) {
  double v = 0;
  for (size_t i = p.size(); i-- > 0;) v = v * t + p[i];
  return v;
}

double mean_product(const GridField& a, const GridField& b) {
  long double s = 0.0L;
  for (size_t i = 0; i < a.values.size(); ++i)
    s += (long double)a.values[i] * b.values[i];
  return (double)(s / a.values.size());
}

}  // namespace

SolveResult solve(const GridField& f0, const FlowProgram& prog,
                  const SolverConfig& cfg, double t_end,
                  const std::vector<TestFunctionSpec>& test_fns) {
  if (t_end < 0 || t_end > prog.horizond + 1e-12)
    throw std::domain_error("solve: t_end beyond program horizon");
  if (cfg.nu <= 0) throw std::domain_error("solve: nu > 0");
  if (f0.N != cfg.N) throw std::domain_error("solve: grid size mismatch");

  // substep nodes: segment and swap-phase boundaries, per-level caps,
  // requested snapshot times
  std::vector<double> nodes{0.0, t_end};
  for (const Segment& seg : prog.segments) {
    if (seg.t0d >= t_end) break;
    double a = seg.t0d, b = std::min(seg.t1d, t_end);
    nodes.push_back(a);
    nodes.push_back(b);
    if (std::holds_alternative<transport::IdentityPrim>(seg.prim)) {
      // the heat hop over an idle segment is exact at any length; an
      // explicit dt_max still refines it for trace quadrature
      if (cfg.dt_max > 0) {
        int steps = std::max(1, (int)std::ceil((b - a) / cfg.dt_max - 1e-9));
        for (int s = 1; s < steps; ++s) nodes.push_back(a + (b - a) * s / steps);
      }
      continue;
    }
    std::vector<double> edges{a, b};
    if (std::holds_alternative<transport::SwapPrim>(seg.prim)) {
      const auto& sw = std::get<transport::SwapPrim>(seg.prim).s;
      double split = seg.reversed ? seg.t1d - std::ldexp(2.0, -sw.k)
                                  : seg.t0d + std::ldexp(2.0, -sw.k);
      if (split > a && split < b) edges.push_back(split);
    }
    std::sort(edges.begin(), edges.end());
    double cap = std::ldexp(1.0, -(seg.level + 2));
    if (cfg.dt_max > 0) cap = std::min(cap, cfg.dt_max);
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
      double len = edges[i + 1] - edges[i];
      if (len <= 0) continue;
      int steps = std::max(1, (int)std::ceil(len / cap - 1e-9));
      for (int s = 0; s <= steps; ++s)
        nodes.push_back(edges[i] + len * s / steps);
    }
  }
  for (double t : cfg.snapshot_times)
    if (t >= 0 && t <= t_end) nodes.push_back(t);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end(),
                          [](double a, double b) { return b - a < 1e-12; }),
              nodes.end());
  if (nodes.empty() || nodes.front() > 1e-12) nodes.insert(nodes.begin(), 0.0);

  SolveResult res;
  res.field = f0;
  SolveTrace& tr = res.trace;
  tr.phi_pairing.assign(test_fns.size(), {});
  tr.phi_gen_left.assign(test_fns.size(), {});
  tr.phi_gen_right.assign(test_fns.size(), {});
  std::vector<PhiGrids> phis;
  for (const auto& tf : test_fns) phis.push_back(build_phi(tf, cfg.N));

  // u . grad(s_phi) on the grid for the piece containing [a,b]
  auto advective_grid = [&](double a, double b, const PhiGrids& pg) {
    GridField w(cfg.N, 0.0);
    const Segment* seg = transport::segment_at(prog, (a + b) / 2);
    if (!seg || std::holds_alternative<transport::IdentityPrim>(seg->prim))
      return w;
    double tq = (a + b) / 2;
    util::parallel_rows(cfg.N, [&](int r) {
      for (int cidx = 0; cidx < cfg.N; ++cidx) {
        Vec2<double> u = transport::velocity_at(
            prog, tq, PointD{w.cell_x1(cidx), w.cell_x2(r)});
        if (u.x1 == 0 && u.x2 == 0) continue;
        w.at(r, cidx) = u.x1 * pg.ds1.at(r, cidx) + u.x2 * pg.ds2.at(r, cidx);
      }
    });
    return w;
  };

  double target_mass = grid::mass(f0);
  double dissipation = 0.0;
  double l2sq0 = 0.0;
  {
    double l2 = grid::lp_norm(f0, 2);
    l2sq0 = l2 * l2;
  }

  auto record_row = [&](double t) {
    TraceRow row;
    row.t = t;
    row.mass = grid::mass(res.field);
    row.l1 = grid::lp_norm(res.field, 1);
    row.l2 = grid::lp_norm(res.field, 2);
    row.linf = grid::linf_norm(res.field);
    auto [mn, mx] = std::minmax_element(res.field.values.begin(),
                                        res.field.values.end());
    row.minv = *mn;
    row.maxv = *mx;
    row.cumulative_dissipation = dissipation;
    tr.rows.push_back(row);
    for (size_t p = 0; p < phis.size(); ++p)
      tr.phi_pairing[p].push_back(mean_product(res.field, phis[p].s) *
                                  poly_eval(phis[p].poly, t));
  };
  // generator value with an explicit advective grid (one-sided in time)
  auto gen_value = [&](double t, size_t p, const GridField& w) {
    const PhiGrids& pg = phis[p];
    double P = poly_eval(pg.poly, t);
    double dP = poly_eval(pg.dpoly, t);
    return mean_product(res.field, pg.s) * dP +
           cfg.nu * mean_product(res.field, pg.lap) * P +
           mean_product(res.field, w) * P;
  };
  auto maybe_snapshot = [&](double t) {
    if (!cfg.keep_snapshots && !cfg.on_snapshot) return true;
    for (double want : cfg.snapshot_times)
      if (std::fabs(want - t) < 1e-9) {
        if (cfg.keep_snapshots) res.snapshots.emplace_back(t, res.field);
        if (cfg.on_snapshot && !cfg.on_snapshot(t, res.field)) {
          tr.stopped_by_observer = true;
          return false;
        }
        return true;
      }
    return true;
  };
  record_row(0.0);
  if (!maybe_snapshot(0.0)) return res;

  for (size_t i = 0; i + 1 < nodes.size(); ++i) {
    double a = nodes[i], b = nodes[i + 1];
    double dt = b - a;
    if (dt <= 0) continue;
    std::vector<GridField> wgrids;
    for (size_t p = 0; p < phis.size(); ++p) {
      wgrids.push_back(advective_grid(a, b, phis[p]));
      tr.phi_gen_right[p].push_back(gen_value(a, p, wgrids[p]));
    }
    const Segment* seg = transport::segment_at(prog, (a + b) / 2);
    bool idle =
        !seg || std::holds_alternative<transport::IdentityPrim>(seg->prim);
    if (idle) {
      GridField before = res.field;
      res.field = heat_step(res.field, cfg.nu * dt);
      double l2b = grid::lp_norm(before, 2), l2a = grid::lp_norm(res.field, 2);
      dissipation += l2b * l2b - l2a * l2a;
    } else {
      GridField h1 = heat_step(res.field, cfg.nu * dt / 2);
      {
        double l2b = grid::lp_norm(res.field, 2), l2a = grid::lp_norm(h1, 2);
        dissipation += l2b * l2b - l2a * l2a;
      }
      GridField adv = advect_step(h1, prog, a, dt, cfg.interp_order);
      double defect = target_mass - grid::mass(adv);
      for (double& v : adv.values) v += defect;
      GridField h2 = heat_step(adv, cfg.nu * dt / 2);
      {
        double l2b = grid::lp_norm(adv, 2), l2a = grid::lp_norm(h2, 2);
        dissipation += l2b * l2b - l2a * l2a;
      }
      res.field = std::move(h2);
    }
    for (size_t p = 0; p < phis.size(); ++p)
      tr.phi_gen_left[p].push_back(gen_value(b, p, wgrids[p]));
    if (!std::isfinite(grid::lp_norm(res.field, 2))) {
      tr.aborted = true;
      tr.abort_reason = "non-finite field at t=" + std::to_string(b);
      break;
    }
    record_row(b);
    if (!maybe_snapshot(b)) break;
  }

  double l2T = tr.rows.back().l2;
  tr.energy_residual_rel =
      std::fabs(l2T * l2T + dissipation - l2sq0) / std::max(l2sq0, 1e-300);
  return res;
}

double trace_residual(const SolveTrace& trace, size_t idx) {
  if (idx >= trace.phi_pairing.size())
    throw std::out_of_range("trace_residual: unknown test function");
  const auto& a = trace.phi_pairing[idx];
  const auto& gl = trace.phi_gen_left[idx];
  const auto& gr = trace.phi_gen_right[idx];
  double integral = 0.0, worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (i > 0) {
      double dt = trace.rows[i].t - trace.rows[i - 1].t;
      integral += 0.5 * dt * (gr[i - 1] + gl[i - 1]);
    }
    worst = std::max(worst, std::fabs(a[i] - a[0] - integral));
  }
  return worst;
}

double lp_norm(const GridField& f, double p) { return grid::lp_norm(f, p); }
double mass(const GridField& f) { return grid::mass(f); }

namespace {

// full spectrum as mean-normalised coefficients
std::vector<std::complex<double>> spectrum_of(const GridField& f) {
  FftBuffers buf(f.N);
  fft_forward(f, buf);
  int cols = f.N / 2 + 1;
  std::vector<std::complex<double>> sp(size_t(f.N) * cols);
  double scale = 1.0 / (double(f.N) * f.N);
  for (size_t i = 0; i < sp.size(); ++i)
    sp[i] = std::complex<double>(buf.sp[i][0], buf.sp[i][1]) * scale;
  return sp;
}

}  // namespace

double low_mode_energy(const GridField& f, int J) {
  auto sp = spectrum_of(f);
  int N = f.N, cols = N / 2 + 1;
  double e = 0.0;
  for (int r = 0; r < N; ++r) {
    int j2 = signed_freq(r, N);
    if (std::abs(j2) > J) continue;
    for (int c = 0; c < cols; ++c) {
      int j1 = signed_freq(c, N);
      if (std::abs(j1) > J) continue;
      if (j1 == 0 && j2 == 0) continue;
      double mult = (c == 0 || c == N / 2) ? 1.0 : 2.0;
      e += std::norm(sp[size_t(r) * cols + c]) * mult;
    }
  }
  return e;
}

double mode_amplitude(const GridField& f, int j1, int j2) {
  auto sp = spectrum_of(f);
  int N = f.N, cols = N / 2 + 1;
  if (j1 < 0) { j1 = -j1; j2 = -j2; }  // hermitian half-plane
  int r = j2 >= 0 ? j2 : j2 + N;
  if (j1 >= cols || r < 0 || r >= N)
    throw std::domain_error("mode_amplitude: mode beyond Nyquist");
  return std::abs(sp[size_t(r) * cols + j1]);
}

double offlattice_leakage(const GridField& f, int step) {
  auto sp = spectrum_of(f);
  int N = f.N, cols = N / 2 + 1;
  double on = 0.0, off = 0.0;
  for (int r = 0; r < N; ++r) {
    int j2 = signed_freq(r, N);
    for (int c = 0; c < cols; ++c) {
      int j1 = signed_freq(c, N);
      if (j1 == 0 && j2 == 0) continue;
      double mult = (c == 0 || c == N / 2) ? 1.0 : 2.0;
      double a = std::norm(sp[size_t(r) * cols + c]) * mult;
      if (j1 % step == 0 && j2 % step == 0) on += a;
      else off += a;
    }
  }
  return off / std::max(on + off, 1e-300);
}

void write_trace_csv(const std::string& path, const SolveTrace& trace) {
  std::string buf = "t,mass,l1,l2,linf,cumulative_dissipation\n";
  char tmp[256];
  for (const TraceRow& r : trace.rows) {
    std::snprintf(tmp, sizeof tmp, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t,
                  r.mass, r.l1, r.l2, r.linf, r.cumulative_dissipation);
    buf += tmp;
  }
  util::atomic_write(path, buf);
}

}  // namespace torusmix::ade
