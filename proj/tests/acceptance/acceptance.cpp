// Acceptance runner: one PASS/FAIL line per criterion.
//
//   mtjfp_acceptance            run all criteria
//   mtjfp_acceptance 3 8        run a subset
//
// Exit status is nonzero when any selected criterion fails.

#include "mtjfp/commands.hpp"
#include "mtjfp/error.hpp"
#include "mtjfp/expm.hpp"
#include "mtjfp/fit.hpp"
#include "mtjfp/fvm.hpp"
#include "mtjfp/model_card.hpp"
#include "mtjfp/parallel.hpp"
#include "mtjfp/sllgs.hpp"
#include "mtjfp/spectral.hpp"
#include "mtjfp/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace mtjfp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Median wall time of `reps` calls.
double timed(const std::function<void()>& f, int reps = 3) {
  std::vector<double> t;
  for (int k = 0; k < reps; ++k) {
    const auto t0 = Clock::now();
    f();
    t.push_back(since(t0));
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

DeviceParams reference() { return DeviceParams(reference_device_inputs()); }

double critical_current(const DeviceParams& p) { return normalize(p, 0.0).i_c; }

// ---------------------------------------------------------------------------

// Exact cell integrals of sin(theta) exp(delta cos^2 theta) by composite Simpson in x.
std::vector<double> boltzmann_cells(const ThetaMesh& mesh, double delta) {
  const auto& f = mesh.faces();
  std::vector<double> p(mesh.size());
  double total = 0.0;
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    const double a = std::cos(f[k + 1]);
    const double b = std::cos(f[k]);
    const int n = 200;
    const double h = (b - a) / n;
    double s = std::exp(delta * a * a) + std::exp(delta * b * b);
    for (int j = 1; j < n; ++j) {
      const double x = a + j * h;
      s += (j % 2 ? 4.0 : 2.0) * std::exp(delta * x * x);
    }
    p[k] = s * h / 3.0;
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

Outcome equilibrium() {
  const auto t0 = Clock::now();
  NormalizedDrive d;
  d.delta = 63.0;
  const auto mesh = build_mesh(512, Grading::UniformTheta);
  const auto p = stationary_masses(assemble(mesh, d));
  const auto exact = boltzmann_cells(mesh, 63.0);
  double l1 = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) l1 += std::abs(p[k] - exact[k]);
  const double t = since(t0);
  return {l1 < 1e-3 && t < 10.0, "L1=" + fmt("%.3g", l1) + " (< 1e-3), " + fmt("%.2f", t) + " s"};
}

// ---------------------------------------------------------------------------

Outcome conservation() {
  const auto p = reference();
  const auto d = normalize(p, 2.0 * critical_current(p));
  const auto mesh = build_mesh(512, Grading::UniformTheta);
  const auto op = assemble(mesh, d);
  auto g = boltzmann_grid(mesh, d.delta, Well::Parallel);
  const double dtau = default_dtau(mesh, d);
  CnStepper step(op, dtau);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    step.step(g.p);
    clip_negative(g.p, dtau * (k + 1));
    double s = 0.0;
    for (double v : g.p) s += v;
    worst = std::max(worst, std::abs(s - 1.0));
  }
  const auto gen = build_generator(200, d);
  auto s = boltzmann_legendre(d.delta, Well::Parallel, 200);
  double r0 = 0.0;
  for (double tau : {0.1, 1.0, 10.0, 100.0}) {
    r0 = std::max(r0, std::abs(evolve(s, gen, tau).r(0) - 0.5));
  }
  return {worst < 1e-10 && r0 < 1e-12,
          "FVM max|sum P - 1|=" + fmt("%.3g", worst) + " over 1e4 steps, spectral max|r0 - 1/2|=" +
              fmt("%.3g", r0)};
}

// ---------------------------------------------------------------------------

struct CrossRun {
  double worst = 0.0;
  double t_fvm = 0.0;
  double t_spectral = 0.0;
};

CrossRun cross_solver_run() {
  const auto p = reference();
  const auto d = normalize(p, 2.0 * critical_current(p));
  std::vector<double> taus;
  for (int k = 1; k <= 100; ++k) taus.push_back(0.1 * k);
  SolverSettings fvm;
  fvm.kind = SolverKind::Fvm;
  fvm.cells = 1024;
  SolverSettings spectral;
  spectral.order = 200;
  CrossRun r;
  SwitchingSeries a, b;
  auto t0 = Clock::now();
  a = switching_series(p, d, taus, fvm);
  r.t_fvm = since(t0);
  t0 = Clock::now();
  b = switching_series(p, d, taus, spectral);
  r.t_spectral = since(t0);
  for (std::size_t k = 0; k < taus.size(); ++k) {
    r.worst = std::max(r.worst, std::abs(a.switched[k] - b.switched[k]));
  }
  return r;
}

Outcome cross_solver() {
  const auto r = cross_solver_run();
  const double total = r.t_fvm + r.t_spectral;
  return {r.worst < 1e-3 && total < 60.0,
          "max|FVM - spectral|=" + fmt("%.3g", r.worst) + " at 100 samples (i=2, tau<=10), " +
              fmt("%.2f", total) + " s"};
}

// ---------------------------------------------------------------------------

// Galerkin oracle in long double: A_mn = -(2m+1)/2 int P_m' (1-x^2) [(a-x) P_n + D P_n'] dx.
void legendre_ld(int n, long double x, std::vector<long double>& p, std::vector<long double>& dp) {
  p.assign(n + 1, 0.0L);
  dp.assign(n + 1, 0.0L);
  p[0] = 1.0L;
  if (n >= 1) p[1] = x;
  for (int k = 1; k < n; ++k) p[k + 1] = ((2 * k + 1) * x * p[k] - k * p[k - 1]) / (k + 1);
  for (int k = 1; k <= n; ++k) dp[k] = k * (x * p[k] - p[k - 1]) / (x * x - 1.0L);
}

void gauss_ld(int n, std::vector<long double>& x, std::vector<long double>& w) {
  x.resize(n);
  w.resize(n);
  std::vector<long double> p, dp;
  for (int k = 0; k < n; ++k) {
    long double z = std::cos(3.14159265358979323846L * (k + 0.75L) / (n + 0.5L));
    for (int it = 0; it < 100; ++it) {
      legendre_ld(n, z, p, dp);
      const long double dz = p[n] / dp[n];
      z -= dz;
      if (std::abs(dz) < 1e-19L) break;
    }
    legendre_ld(n, z, p, dp);
    x[k] = z;
    w[k] = 2.0L / ((1.0L - z * z) * dp[n] * dp[n]);
  }
}

Outcome generator_oracle() {
  const auto t0 = Clock::now();
  const int order = 200;
  std::vector<long double> x, w;
  gauss_ld(order + 4, x, w);
  std::vector<std::vector<long double>> pv(x.size()), dpv(x.size());
  for (std::size_t q = 0; q < x.size(); ++q) legendre_ld(order, x[q], pv[q], dpv[q]);

  std::mt19937_64 gen(20240601);
  std::uniform_real_distribution<double> ui(-4.0, 4.0), uh(-1.0, 1.0), ud(5.0, 200.0);
  double worst = 0.0;
  std::size_t checked = 0;
  for (int draw = 0; draw < 20; ++draw) {
    NormalizedDrive d;
    d.i = ui(gen);
    d.h = uh(gen);
    d.delta = ud(gen);
    const auto g = build_generator(order, d);
    const long double a = d.i - d.h;
    const long double dd = 1.0L / (2.0L * d.delta);
    for (int m = 0; m <= order; ++m) {
      for (int n = std::max(0, m - 2); n <= std::min(order, m + 2); ++n) {
        long double s = 0.0L;
        for (std::size_t q = 0; q < x.size(); ++q) {
          s -= w[q] * dpv[q][m] * (1.0L - x[q] * x[q]) * ((a - x[q]) * pv[q][n] + dd * dpv[q][n]);
        }
        const double ref = static_cast<double>(s * (2.0L * m + 1.0L) / 2.0L);
        const double v = g.a(m, n);
        if (v == 0.0) continue;
        worst = std::max(worst, std::abs(v - ref) / std::abs(ref));
        ++checked;
      }
    }
    // Everything off the pentadiagonal band must vanish.
    for (int m = 0; m <= order; ++m) {
      for (int n = 0; n <= order; ++n) {
        if (std::abs(m - n) > 2 && g.a(m, n) != 0.0) worst = 1.0;
      }
    }
  }
  const double t = since(t0);
  return {worst < 1e-12 && t < 30.0,
          std::to_string(checked) + " entries over 20 draws, max rel err=" + fmt("%.3g", worst) +
              ", " + fmt("%.2f", t) + " s"};
}

// ---------------------------------------------------------------------------

Outcome monte_carlo() {
  const auto t0 = Clock::now();
  const auto p = reference();
  const double current = 2.0 * critical_current(p);
  SolverSettings s;
  std::ostringstream os;
  bool ok = true;
  std::uint64_t seed = 101;
  for (double target : {0.5, 0.05}) {
    const double pulse = time_to_wer(p, current, target, s);
    s.jobs = 0;
    const auto v = mc_validate(p, current, pulse, 10000, seed++, s);
    s.jobs = 1;
    ok = ok && v.agree;
    os << "WER_fpe=" << fmt("%.4f", v.fpe_rate) << " vs MC " << fmt("%.4f", v.empirical) << " ["
       << fmt("%.4f", v.ci.lo) << ", " << fmt("%.4f", v.ci.hi) << "]; ";
  }
  os << "1e4 walks each, " << fmt("%.1f", since(t0)) << " s";
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------

Outcome runtime_scaling() {
  const auto p = reference();
  const double current = 2.0 * critical_current(p);
  const auto d = normalize(p, current);

  // Spectral: one evolve to tau and to 1000 tau.
  const auto gen = build_generator(200, d);
  const auto s0 = boltzmann_legendre(d.delta, Well::Parallel, 200);
  const double ts1 = timed([&] { evolve(s0, gen, 10.0); }, 5);
  const double ts2 = timed([&] { evolve(s0, gen, 10000.0); }, 5);
  const double spec_ratio = ts2 / ts1;

  // FVM: fixed step, 10x more steps.
  const auto mesh = build_mesh(1024, Grading::UniformTheta);
  const auto op = assemble(mesh, d);
  const auto g0 = boltzmann_grid(mesh, d.delta, Well::Parallel);
  const double dtau = default_dtau(mesh, d);
  auto march = [&](int n) {
    CnStepper st(op, dtau);
    auto g = g0.p;
    for (int k = 0; k < n; ++k) {
      st.step(g);
      clip_negative(g, dtau * (k + 1));
    }
  };
  const double tf1 = timed([&] { march(4000); });
  const double tf2 = timed([&] { march(40000); });
  const double fvm_dev = std::abs((tf2 / tf1) / 10.0 - 1.0);

  // Both solvers at the cross-comparison resolution against a 1e3-walk ensemble.
  const auto cross = cross_solver_run();
  const auto wave = DriveWaveform::constant(current, 10.0 * d.tau_d);
  EnsembleOptions eo;
  eo.jobs = 1;
  const auto t0 = Clock::now();
  run_ensemble(p, wave, default_time_step(p), 1000, 1, eo);
  const double t_ens = since(t0);

  const bool ok = spec_ratio < 3.0 && fvm_dev < 0.25 && cross.t_fvm < t_ens && cross.t_spectral < t_ens;
  std::ostringstream os;
  os << "spectral t(1000x tau)/t(tau)=" << fmt("%.2f", spec_ratio) << " (< 3); FVM 10x steps -> "
     << fmt("%.2f", tf2 / tf1) << "x time (dev " << fmt("%.0f", 100 * fvm_dev)
     << "% < 25%); FVM " << fmt("%.2f", cross.t_fvm) << " s, spectral " << fmt("%.2f", cross.t_spectral)
     << " s vs 1e3-walk ensemble " << fmt("%.2f", t_ens) << " s";
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------

Outcome round_trip() {
  const auto t0 = Clock::now();
  auto truth = reference_device_inputs();
  truth.delta.reset();
  const DeviceParams tp(truth);
  const double ic = critical_current(tp);
  SolverSettings solver;
  const std::vector<double> levels{0.5, 1e-2, 1e-4};

  std::vector<ErrorRatePoint> data;
  for (double i : {1.5, 2.0, 3.0, 5.0}) {
    const auto inv = invert_wer(tp, i * ic, levels, solver);
    for (std::size_t k = 0; k < levels.size(); ++k) {
      ErrorRatePoint pt;
      pt.current = i * ic;
      pt.pulse_width = inv.times[k].value();
      pt.rate = levels[k];
      pt.temperature = truth.temperature;
      data.push_back(pt);
    }
  }

  auto start = truth;
  start.m_s *= 1.3;
  start.volume *= 0.7;
  start.alpha *= 1.3;
  start.h_k_eff *= 0.7;
  start.polarization *= 1.3;

  FitBudget budget;
  budget.hops = 50;
  budget.target_loss = 1e-6;
  LossOptions opt;
  opt.solver = solver;
  opt.solver.jobs = 0;
  const auto fit = fit_parameters(data, start, FitSpace::defaults(start), budget, 42, opt);

  // Recovered model against every dataset point, independently of the fit residuals.
  const DeviceParams fp(fit.best);
  double worst = 0.0;
  for (const auto& pt : data) {
    const double t = time_to_wer(fp, pt.current, pt.rate, solver);
    worst = std::max(worst, std::abs(t / pt.pulse_width - 1.0));
  }
  const double t = since(t0);
  std::ostringstream os;
  os << "12 points, max |t_fit/t_data - 1|=" << fmt("%.3g", 100 * worst) << "% (< 5%), loss "
     << fmt("%.3g", fit.initial_loss) << " -> " << fmt("%.3g", fit.loss) << ", "
     << fit.evaluations << " evals, " << fit.hops << " hops, status " << to_string(fit.status)
     << ", " << fmt("%.1f", t) << " s";
  return {worst < 0.05 && fit.loss < fit.initial_loss && t < 1800.0, os.str()};
}

// ---------------------------------------------------------------------------

Outcome calibration() {
  const auto p = reference();
  const double current = 2.0 * critical_current(p);
  const std::vector<double> targets{0.5, 1e-6, 1e-8};
  CalibrationOptions opt;
  const double dt = default_time_step(p);
  std::vector<std::pair<double, double>> cf;
  std::ostringstream os;
  bool ok = true;
  for (double target : targets) {
    const auto c = calibrate_cf(p, target, current, opt);
    // Independent re-run of the calibrated transient.
    TransientOptions to;
    to.stop_at_switch = true;
    const auto wave = DriveWaveform::constant(current, 10.0 * c.t_star);
    const auto run = run_transient(p, wave, dt, 0, TransientMode::fictitious(c.c_f), to);
    const double err = run.switch_time ? std::abs(*run.switch_time / c.t_star - 1.0) : 1.0;
    ok = ok && err < 0.01;
    cf.emplace_back(target, c.c_f);
    os << "WER " << format_target(target) << ": c_f=" << fmt("%.4f", c.c_f) << " err "
       << fmt("%.2g", 100 * err) << "%; ";
  }
  const auto card = emit_model_card(p, cf, targets, {{"solver", "spectral order=200"}});
  const std::string text = serialize_deck(card);
  const auto path = fs::temp_directory_path() / "mtjfp_acceptance_card.txt";
  write_deck(path.string(), card);
  const auto back = read_deck(path.string());
  std::ifstream in(path);
  std::stringstream bytes;
  bytes << in.rdbuf();
  const bool exact = back == card && serialize_deck(back) == text && bytes.str() == text;
  fs::remove(path);
  os << "deck round trip " << (exact ? "bit-exact" : "MISMATCH");
  return {ok && exact, os.str()};
}

// ---------------------------------------------------------------------------

struct CliRun {
  int code;
  std::string out;
  std::string file;
};

Outcome determinism() {
  const auto dir = fs::temp_directory_path() / "mtjfp_acceptance_det";
  fs::create_directories(dir);
  const auto cfg = (dir / "ref.json").string();
  std::ofstream(cfg) << R"({
    "device": {"msat_a_per_m": 1.2e6, "alpha": 0.01, "hk_eff_a_per_m": 177415,
               "diameter_m": 50e-9, "thickness_m": 1e-9, "delta": 63},
    "drive": {"i": 2.0, "pulse_tau": 10},
    "solver": {"order": 120, "cells": 256},
    "sllgs": {"walks": 300, "seed": 5},
    "fit": {"hops": 2, "max_evaluations": 60, "local_iterations": 4}
  })";
  const auto data = (dir / "wer.csv").string();
  const auto deck = (dir / "card.txt").string();
  const auto out_file = (dir / "out.txt").string();

  auto run = [&](std::vector<std::string> args) {
    args.push_back("-o");
    args.push_back(out_file);
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    r.file = ss.str();
    fs::remove(out_file);
    return r;
  };

  // Inputs for fit and the deck-driven transient.
  {
    std::ostringstream o, e;
    run_cli({"wer", "-c", cfg, "--currents", "5.3e-5,8e-5", "--pulses", "6e-9,1.2e-8", "-o", data},
            o, e);
    run_cli({"calibrate", "-c", cfg, "--targets", "0.5,1e-3", "--data", data, "-o", deck}, o, e);
  }

  const std::vector<std::vector<std::string>> commands{
      {"solve-fpe", "-c", cfg, "--samples", "50"},
      {"solve-fpe", "-c", cfg, "--samples", "20", "--solver", "fvm"},
      {"compare-solvers", "-c", cfg, "--samples", "20", "--walks", "300", "-j", "1"},
      {"compare-solvers", "-c", cfg, "--samples", "20", "--walks", "300", "-j", "4"},
      {"wer", "-c", cfg, "--currents", "5e-5,6e-5,8e-5", "--pulses", "5e-9,1e-8,2e-8", "-j", "3"},
      {"rer", "-c", cfg, "--read-currents", "1e-5,2e-5", "--t-read", "1e-8,1e-7"},
      {"transient", "-c", cfg, "--stochastic", "--seed", "17"},
      {"transient", "--deck", deck, "--wer", "0.5"},
      {"calibrate", "-c", cfg, "--targets", "0.5", "--data", data},
      {"fit", "-c", cfg, "--data", data, "--seed", "3"},
  };
  std::size_t same = 0;
  std::vector<std::string> differing;
  std::vector<std::string> outputs;
  for (const auto& c : commands) {
    const auto a = run(c);
    const auto b = run(c);
    const bool ok = a.code == b.code && a.out == b.out && a.file == b.file && !a.file.empty() &&
                    (a.code == kExitOk || a.code == kExitFit);
    if (ok) {
      ++same;
    } else {
      differing.push_back(c[0]);
    }
    outputs.push_back(a.file);
  }
  // The thread count must not change the ensemble report.
  const bool jobs_invariant = outputs[2] == outputs[3];
  fs::remove_all(dir);

  std::ostringstream os;
  os << same << "/" << commands.size() << " seeded commands byte-identical on rerun";
  if (!differing.empty()) {
    os << " (differ:";
    for (const auto& d : differing) os << ' ' << d;
    os << ")";
  }
  os << "; ensemble report " << (jobs_invariant ? "identical" : "DIFFERS") << " for -j 1 and -j 4";
  return {same == commands.size() && jobs_invariant, os.str()};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "equilibrium fidelity", equilibrium},
      {2, "conservation", conservation},
      {3, "cross-solver equivalence", cross_solver},
      {4, "generator oracle", generator_oracle},
      {5, "monte-carlo agreement", monte_carlo},
      {6, "runtime scaling", runtime_scaling},
      {7, "regression round-trip", round_trip},
      {8, "calibration pipeline", calibration},
      {9, "determinism", determinism},
  };
  std::set<int> selected;
  for (int k = 1; k < argc; ++k) selected.insert(std::atoi(argv[k]));

  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
