#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "torusmix/ade.hpp"
#include "torusmix/composite.hpp"
#include "torusmix/config.hpp"
#include "torusmix/grid.hpp"
#include "torusmix/limits.hpp"
#include "torusmix/schedule.hpp"
#include "torusmix/transport.hpp"
#include "torusmix/util.hpp"

using namespace torusmix;

namespace {

transport::ScalarSampler datum_by_name(const std::string& name) {
  for (auto& d : limits::default_battery())
    if (d.name == name) return d.sampler;
  if (name == limits::held_out_datum().name)
    return limits::held_out_datum().sampler;
  if (name == "constant")
    return {[](double, double) { return 0.5; }, 0.5};
  throw CLI::ValidationError("datum", "unknown datum " + name);
}

// builtin spec selectors: vv:K, mix:K, mirrored:K, else a config file path
struct SpecHandle {
  std::string kind;  // fractal | mix | mirrored
  composite::FractalSpec fractal;
  composite::MixSpec mix;
  std::string text;  // canonical serialisation
};

SpecHandle resolve_spec(const std::string& sel) {
  SpecHandle h;
  auto colon = sel.find(':');
  if (colon != std::string::npos && sel.find('/') == std::string::npos &&
      sel.find('.') == std::string::npos) {
    std::string kind = sel.substr(0, colon);
    int K = std::stoi(sel.substr(colon + 1));
    if (kind == "vv") {
      h.kind = "fractal";
      h.fractal = composite::build_vv_params(K).spec;
      h.text = composite::to_config(h.fractal);
      return h;
    }
    if (kind == "mix" || kind == "mirrored") {
      h.kind = kind;
      h.mix.cutoff = schedule::quad_prefix_cutoff(K);
      h.text = composite::to_config(h.mix);
      if (kind == "mirrored")
        h.text = "type=mirrored\n" + h.text.substr(h.text.find('\n') + 1);
      return h;
    }
    throw CLI::ValidationError("spec", "unknown builtin " + sel);
  }
  std::ifstream f(sel);
  if (!f) throw CLI::ValidationError("spec", "cannot open " + sel);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  if (text.find("type=fractal") != std::string::npos) {
    h.kind = "fractal";
    h.fractal = composite::fractal_from_config(text);
    h.text = composite::to_config(h.fractal);
  } else if (text.find("type=mirrored") != std::string::npos) {
    h.kind = "mirrored";
    h.mix = composite::mix_from_config(text);
    h.text = text;
  } else {
    h.kind = "mix";
    h.mix = composite::mix_from_config(text);
    h.text = composite::to_config(h.mix);
  }
  return h;
}

transport::FlowProgram compile_handle(const SpecHandle& h) {
  if (h.kind == "fractal") return transport::compile_fractal(h.fractal);
  if (h.kind == "mix") return transport::compile_mixing(h.mix);
  return transport::compile_mirrored(h.mix);
}

void write_metadata(const std::string& artifact, const std::string& resolved) {
  std::ifstream f(artifact, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  nlohmann::json j;
  j["artifact"] = std::filesystem::path(artifact).filename().string();
  j["content_fnv1a"] = util::fnv1a_hex(bytes);
  j["config"] = resolved;
  util::atomic_write(artifact + ".meta.json", j.dump(2));
}

int cmd_schedule(const std::string& family, const std::string& K_sel,
                 const std::string& tau_sel, const std::string& out) {
  std::vector<schedule::ScheduleEntry> entries;
  int K = 0;
  schedule::QuadIndex cutoff{1, 1, 1, 1};
  bool cutoff_given = false;
  if (!K_sel.empty() && K_sel.front() == '(') {
    // quadruple lex cutoff "(k,m,i,n)"
    std::istringstream fs(K_sel.substr(1, K_sel.size() - 2));
    std::string a, b, c2, d;
    std::getline(fs, a, ','); std::getline(fs, b, ',');
    std::getline(fs, c2, ','); std::getline(fs, d);
    cutoff = schedule::QuadIndex{std::stoi(a), std::stoi(b), std::stoi(c2),
                                 std::stoll(d)};
    cutoff_given = true;
  } else {
    K = std::stoi(K_sel);
  }
  if (family == "dyadic") {
    std::vector<Rational> taus;
    if (tau_sel == "auto" || tau_sel.empty()) {
      for (int k = 1; k <= K; ++k) taus.push_back(Dyadic::pow2(-2 * k).to_rational());
    } else {
      std::istringstream ss(tau_sel);
      std::string item;
      while (std::getline(ss, item, ';')) {
        auto pos = item.find('/');
        if (pos == std::string::npos) taus.push_back(Rational(std::stol(item)));
        else taus.push_back(rat(std::stol(item.substr(0, pos)),
                                std::stol(item.substr(pos + 1))));
      }
    }
    entries = schedule::generate_schedule_dyadic(K, taus);
  } else if (family == "quad") {
    entries = cutoff_given ? schedule::generate_schedule_quad(cutoff)
                           : schedule::generate_schedule_quad_depth(K);
  } else {
    std::fprintf(stderr, "unknown family %s\n", family.c_str());
    return 1;
  }
  std::string csv = "payload,start_num,start_log_den,dur_num,dur_den\n";
  Rational active(0);
  for (const auto& e : entries) {
    active += e.duration;
    csv += schedule::payload_str(e) + "," + std::to_string(e.start.num) + "," +
           std::to_string(e.start.lden) + "," + e.duration.get_num().get_str() +
           "," + e.duration.get_den().get_str() + "\n";
  }
  if (!out.empty()) {
    util::atomic_write(out, csv);
    write_metadata(out, "family=" + family + "\nK=" + K_sel +
                            "\ntau=" + tau_sel + "\n");
  } else {
    std::fputs(csv.c_str(), stdout);
  }
  std::ostringstream act;
  act << active.get_num().get_str() << "/" << active.get_den().get_str();
  std::printf("intervals: %zu  total active time: %s (= %.17g)\n", entries.size(),
              act.str().c_str(), active.get_d());
  return 0;
}

int cmd_transport(const std::string& spec_sel, const std::string& datum,
                  std::vector<double> times, int N, bool exact,
                  const std::string& out_dir) {
  SpecHandle h = resolve_spec(spec_sel);
  transport::FlowProgram prog = compile_handle(h);
  std::int64_t L_max = 0;
  for (const auto& seg : prog.segments)
    if (std::holds_alternative<transport::SwapPrim>(seg.prim))
      L_max = std::max(L_max, std::get<transport::SwapPrim>(seg.prim).s.L);
  if (L_max > 0 && N < (std::int64_t(1) << (L_max + 2)))
    std::fprintf(stderr,
                 "note: N=%d under-resolves the finest rotation strip "
                 "(L=%lld); snapshots will alias\n",
                 N, (long long)L_max);
  transport::ScalarSampler f0 = datum_by_name(datum);
  std::filesystem::create_directories(out_dir);
  for (double t : times) {
    if (t < 0 || t > prog.horizond + 1e-12) {
      std::fprintf(stderr, "time %g beyond horizon %g\n", t, prog.horizond);
      return 1;
    }
    grid::GridField g;
    if (exact) {
      Rational tq(t);
      g = transport::snapshot_exact(f0, prog, tq, N);
    } else {
      g = transport::snapshot(f0, prog, t, N);
    }
    std::ostringstream name;
    name << out_dir << "/snapshot_t" << t << ".tmxf";
    grid::write_tmxf(name.str(), g);
    write_metadata(name.str(), h.text + "datum=" + datum +
                                   "\nN=" + std::to_string(N) +
                                   "\nt=" + std::to_string(t) + "\n");
    std::printf("wrote %s\n", name.str().c_str());
  }
  return 0;
}

int cmd_solve(const std::string& spec_sel, const std::string& datum, double nu,
              int N, double t_end, const std::string& out_dir) {
  SpecHandle h = resolve_spec(spec_sel);
  transport::FlowProgram prog = compile_handle(h);
  if (t_end <= 0) t_end = prog.horizond;
  transport::ScalarSampler f0 = datum_by_name(datum);
  ade::SolverConfig cfg;
  cfg.N = N;
  cfg.nu = nu;
  auto res = ade::solve(grid::sample(N, f0.f), prog, cfg, t_end);
  std::filesystem::create_directories(out_dir);
  ade::write_trace_csv(out_dir + "/trace.csv", res.trace);
  grid::write_tmxf(out_dir + "/final.tmxf", res.field);
  write_metadata(out_dir + "/final.tmxf",
                 h.text + "datum=" + datum + "\nnu=" + std::to_string(nu) +
                     "\nN=" + std::to_string(N) + "\n");
  std::printf("t_end=%g rows=%zu energy_residual=%.3e mass_drift=%.3e\n", t_end,
              res.trace.rows.size(), res.trace.energy_residual_rel,
              std::fabs(res.trace.rows.back().mass - res.trace.rows.front().mass));
  return res.trace.aborted ? 2 : 0;
}

void print_report(const limits::ExperimentReport& rep) {
  std::printf("experiment: %s (%s)\n", rep.experiment.c_str(),
              rep.complete ? "complete" : "INCOMPLETE");
  if (!rep.failure.empty()) std::printf("  failure: %s\n", rep.failure.c_str());
  for (const auto& c : rep.criteria)
    std::printf("  [%s] %-42s %.6g %s %.6g\n", c.pass ? "PASS" : "FAIL",
                c.name.c_str(), c.value, c.cmp.c_str(), c.threshold);
}

int cmd_experiment(const std::string& kind, const std::string& datum, int K,
                   int N, const std::string& out_dir, int lex_stride) {
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
      std::fprintf(stderr, "cannot create %s\n", out_dir.c_str());
      return 1;
    }
  }
  transport::ScalarSampler f0 = datum_by_name(datum);
  limits::ExperimentReport rep;
  if (kind == "vv") {
    limits::VvOptions o;
    o.K_max = K;
    o.N = N;
    o.calib.N = N;
    o.out_dir = out_dir;
    rep = limits::run_vv_experiment(f0, datum, o);
  } else if (kind == "mixing") {
    limits::MixingOptions o;
    o.K_max = K;
    o.N = N;
    o.calib.N = N;
    o.lex_stride = lex_stride;
    o.out_dir = out_dir;
    rep = limits::run_mixing_experiment(f0, datum, o);
  } else {
    std::fprintf(stderr, "unknown experiment kind %s\n", kind.c_str());
    return 1;
  }
  print_report(rep);
  if (!out_dir.empty()) {
    util::atomic_write(out_dir + "/report.json", rep.to_json());
    std::printf("report: %s/report.json\n", out_dir.c_str());
  }
  return rep.all_pass() ? 0 : 2;
}

int cmd_verify(unsigned long seed) {
  std::mt19937_64 rng(seed);
  int failures = 0;
  auto check = [&](const std::string& name, bool ok) {
    std::printf("  [%s] %s\n", ok ? "PASS" : "FAIL", name.c_str());
    if (!ok) ++failures;
  };

  {  // schedule disjointness and budget
    bool ok = true;
    std::vector<Rational> taus;
    for (int k = 1; k <= 6; ++k) taus.push_back(Dyadic::pow2(-2 * k).to_rational());
    auto s = schedule::generate_schedule_dyadic(6, taus);
    Rational active(0);
    for (size_t i = 0; i + 1 < s.size(); ++i) {
      ok = ok && s[i].start.to_rational() + s[i].duration <=
                     s[i + 1].start.to_rational();
      active += s[i].duration;
    }
    active += s.back().duration;
    ok = ok && active == (Dyadic(1) - Dyadic::pow2(-6)).to_rational();
    check("dyadic schedule disjoint, budget 1-2^-K", ok);
    check("quad budget tail at K=20 positive",
          schedule::quad_budget_tail(20) > Dyadic(0));
  }
  {  // cancellation identity on random dyadic points
    bool ok = true;
    std::uniform_int_distribution<std::int64_t> d(0, (1 << 19) - 1);
    for (int it = 0; it < 2000 && ok; ++it) {
      flows::PointQ x{Dyadic(2 * d(rng) + 1, 20).to_rational(),
                      Dyadic(2 * d(rng) + 1, 20).to_rational()};
      auto y = flows::cancellation_compose({1, 4}, rat(1, 4), {2, 2}, rat(1, 16), x);
      ok = y.x1 == x.x1 && y.x2 == x.x2;
    }
    check("shear cancellation identity", ok);
  }
  {  // swap endpoint realisation, float mode
    bool ok = true;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    flows::SwapSpec s{1, 2, 1, 4};
    for (int it = 0; it < 500 && ok; ++it) {
      flows::PointD x{u(rng), u(rng)};
      auto a = flows::swap_map(s, 0.75, x);
      auto b = flows::swap_endpoint(s, x);
      ok = std::fabs(a.x1 - b.x1) < 1e-9 && std::fabs(a.x2 - b.x2) < 1e-9;
    }
    check("swap map realises the digit swap", ok);
  }
  {  // heat decay
    int N = 64;
    auto f0 = grid::sample(N, [](double x1, double) { return std::cos(2 * M_PI * x1); });
    auto f1 = ade::heat_step(f0, 1e-2);
    double expect = std::exp(-4 * M_PI * M_PI * 1e-2);
    check("heat semigroup single-mode decay",
          std::fabs(f1.at(3, 7) / f0.at(3, 7) - expect) < 1e-12);
  }
  {  // erf constant
    check("heat-leak constant C = 8 sqrt(3/pi)",
          std::fabs(limits::swap_leak_constant() - 8.0 * std::sqrt(3.0) / std::sqrt(M_PI)) <
              1e-14);
  }
  std::printf("verify: %d failure(s)\n", failures);
  return failures == 0 ? 0 : 2;
}

int cmd_report(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    std::fprintf(stderr, "cannot open %s\n", path.c_str());
    return 1;
  }
  nlohmann::json j;
  f >> j;
  std::printf("experiment: %s (%s)\n", j.value("experiment", "?").c_str(),
              j.value("complete", false) ? "complete" : "INCOMPLETE");
  for (const auto& c : j["criteria"])
    std::printf("  [%s] %-42s %.6g %s %.6g\n",
                c.value("pass", false) ? "PASS" : "FAIL",
                c.value("name", "?").c_str(), c.value("value", 0.0),
                c.value("cmp", "<=").c_str(), c.value("threshold", 0.0));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"torusmix: exact torus transport and vanishing-viscosity runs"};
  app.require_subcommand(1);

  auto* sched = app.add_subcommand("schedule", "dump an exact schedule as CSV");
  std::string family = "dyadic", tau_sel = "auto", out, K_sel = "2";
  sched->add_option("--family", family, "dyadic or quad");
  sched->add_option("--K", K_sel, "truncation depth, or a quad lex cutoff (k,m,i,n)");
  sched->add_option("--tau", tau_sel, "auto or ;-separated rationals");
  sched->add_option("--out", out, "CSV path (stdout if omitted)");

  auto* transp = app.add_subcommand("transport", "exact inviscid snapshots");
  std::string spec_sel = "vv:2", datum = "sin_x1", out_dir = "out";
  std::vector<double> times{0.0};
  int N = 256;
  bool exact = false;
  transp->add_option("--spec", spec_sel, "vv:K | mix:K | mirrored:K | config file");
  transp->add_option("--datum", datum, "sin_x1|smoothed_sign|checker4|sin_x2|constant");
  transp->add_option("--t", times, "snapshot times");
  transp->add_option("--N", N, "grid size");
  transp->add_flag("--exact", exact, "route cell centres through exact arithmetic");
  transp->add_option("--out", out_dir, "output directory");

  auto* solve = app.add_subcommand("solve", "viscous advection-diffusion run");
  double nu = 1e-3, t_end = 0;
  solve->add_option("--spec", spec_sel, "field spec");
  solve->add_option("--datum", datum, "initial datum");
  solve->add_option("--nu", nu, "diffusivity");
  solve->add_option("--N", N, "grid size");
  solve->add_option("--t-end", t_end, "end time (default: horizon)");
  solve->add_option("--out", out_dir, "output directory");

  auto* exper = app.add_subcommand("experiment", "calibrated experiment run");
  std::string kind = "vv";
  int K = 2, lex_stride = 1;
  exper->add_option("--kind", kind, "vv or mixing");
  exper->add_option("--datum", datum, "initial datum");
  exper->add_option("--K", K, "depth");
  exper->add_option("--N", N, "grid size");
  exper->add_option("--lex-stride", lex_stride, "calibrate every n-th lex level");
  exper->add_option("--out", out_dir, "output directory");

  auto* verify = app.add_subcommand("verify", "run the invariant suites");
  unsigned long seed = 1;
  verify->add_option("--seed", seed, "sampling seed");

  auto* report = app.add_subcommand("report", "re-render a stored report");
  std::string report_path;
  report->add_option("path", report_path, "report.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sched->parsed()) return cmd_schedule(family, K_sel, tau_sel, out);
    if (transp->parsed())
      return cmd_transport(spec_sel, datum, times, N, exact, out_dir);
    if (solve->parsed())
      return cmd_solve(spec_sel, datum, nu, N, t_end, out_dir);
    if (exper->parsed())
      return cmd_experiment(kind, datum, K, N, out_dir, lex_stride);
    if (verify->parsed()) return cmd_verify(seed);
    if (report->parsed()) return cmd_report(report_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
