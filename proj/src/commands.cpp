#include "mtjfp/commands.hpp"

#include "mtjfp/config.hpp"
#include "mtjfp/csv.hpp"
#include "mtjfp/error.hpp"
#include "mtjfp/fit.hpp"
#include "mtjfp/model_card.hpp"
#include "mtjfp/parallel.hpp"
#include "mtjfp/sllgs.hpp"
#include "mtjfp/stats.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <ostream>
#include <sstream>

namespace mtjfp {

namespace {

int exit_code(Errc c) {
  switch (c) {
    case Errc::Config:
    case Errc::InvalidArgument:
    case Errc::BadGrading:
    case Errc::ZeroCriticalCurrent:
      return kExitConfig;
    case Errc::BudgetExhausted:
      return kExitFit;
    case Errc::CalibrationNoCross:
    case Errc::IncompleteCalibration:
      return kExitCalibration;
    default:
      return kExitSolver;
  }
}

// Writes to a file, or to `fallback` for "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (path != "-") {
      file_.open(path);
      if (!file_) throw Error(Errc::Config, "cannot write '" + path + "'");
      os_ = &file_;
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Config, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string solver_label(const SolverSettings& s) {
  std::ostringstream os;
  os << to_string(s.kind);
  if (s.kind == SolverKind::Fvm) {
    os << " cells=" << s.cells << " grading=" << to_string(s.grading);
  } else {
    os << " order=" << s.order;
  }
  return os.str();
}

// Flags shared by every subcommand, folded into the loaded config.
struct Common {
  std::string config;
  std::optional<unsigned> jobs;
  std::optional<std::string> out;
  std::optional<std::string> solver;
  std::optional<std::size_t> cells;
  std::optional<std::string> grading;
  std::optional<int> order;

  void attach(CLI::App* app, bool solver_flags = true) {
    app->add_option("--config,-c", config, "JSON run configuration");
    app->add_option("--jobs,-j", jobs, "worker threads (0: all cores)");
    app->add_option("--out,-o", out, "output path, '-' for stdout");
    if (!solver_flags) return;
    app->add_option("--solver", solver, "fvm or spectral");
    app->add_option("--cells", cells, "FVM cell count");
    app->add_option("--grading", grading, "uniform-theta, uniform-cos or tanh");
    app->add_option("--order", order, "Legendre truncation order");
  }

  RunConfig load() const {
    RunConfig cfg = config.empty() ? RunConfig{} : load_config(config);
    if (jobs) cfg.jobs = *jobs;
    if (out) cfg.output.path = *out;
    if (solver) cfg.solver.kind = parse_solver_kind(*solver);
    if (cells) cfg.solver.cells = *cells;
    if (grading) cfg.solver.grading = parse_grading(*grading);
    if (order) cfg.solver.order = *order;
    if (cfg.solver.kind != SolverKind::Fvm && cfg.solver.kind != SolverKind::Spectral) {
      throw Error(Errc::Config, "solver must be fvm or spectral");
    }
    cfg.solver.jobs = cfg.jobs;
    return cfg;
  }
};

void print_warnings(const DeviceParams& params, std::ostream& err) {
  for (const auto& w : params.warnings()) err << "warning: " << w << "\n";
}

std::vector<double> sample_taus(double tau_end, std::size_t samples) {
  if (!(tau_end > 0.0)) throw Error(Errc::Config, "tau end must be > 0");
  if (samples == 0) throw Error(Errc::Config, "samples must be >= 1");
  std::vector<double> taus(samples + 1);
  for (std::size_t k = 0; k <= samples; ++k) {
    taus[k] = tau_end * static_cast<double>(k) / static_cast<double>(samples);
  }
  return taus;
}

// ---- solve-fpe -----------------------------------------------------------

struct SolveFpe {
  Common common;
  std::optional<std::size_t> samples;
  std::optional<double> tau_end;
  std::string snapshot_out;
  std::string coeff_out;

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("--samples", samples, "number of output intervals");
    app->add_option("--tau-end", tau_end, "end of the run in units of tau_d");
    app->add_option("--snapshot-out", snapshot_out, "final distribution CSV");
    app->add_option("--coeff-out", coeff_out, "final Legendre coefficients CSV (spectral)");
  }

  int run(std::ostream& out, std::ostream& err) const {
    const RunConfig cfg = common.load();
    const DeviceParams params = cfg.device_params();
    print_warnings(params, err);
    const NormalizedDrive drive = normalize(params, cfg.drive_current(params), cfg.drive.h_ext_z);
    const double end = tau_end ? *tau_end : time_to_tau(cfg.pulse_length(params), drive);
    const auto taus = sample_taus(end, samples.value_or(cfg.sweep.samples));
    const auto series = switching_series(params, drive, taus, cfg.solver);
    if (series.warning) err << "warning: " << *series.warning << "\n";

    Sink sink(cfg.output.path, out);
    *sink << "tau,t_s,switched_fraction\n";
    for (std::size_t k = 0; k < taus.size(); ++k) {
      *sink << csv_number(taus[k]) << ',' << csv_number(tau_to_time(taus[k], drive)) << ','
            << csv_number(series.switched[k]) << "\n";
    }
    if (!snapshot_out.empty()) {
      Sink snap(snapshot_out, out);
      if (series.final_grid) {
        write_snapshot(*snap, *series.final_grid);
      } else {
        write_snapshot(*snap, *series.final_state, build_mesh(cfg.solver.cells, cfg.solver.grading));
      }
    }
    if (!coeff_out.empty()) {
      if (!series.final_state) throw Error(Errc::Config, "--coeff-out needs the spectral solver");
      Sink coeff(coeff_out, out);
      write_coefficients(*coeff, *series.final_state);
    }
    return kExitOk;
  }
};

// ---- compare-solvers -----------------------------------------------------

struct CompareSolvers {
  Common common;
  std::optional<std::size_t> samples;
  std::optional<double> tau_end;
  std::optional<std::size_t> cells;
  std::optional<int> order;
  std::optional<std::size_t> walks;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app) {
    common.attach(app, false);
    app->add_option("--samples", samples, "number of output intervals");
    app->add_option("--tau-end", tau_end, "end of the run in units of tau_d");
    app->add_option("--cells", cells, "FVM cell count");
    app->add_option("--order", order, "Legendre truncation order");
    app->add_option("--walks", walks, "s-LLGS ensemble size (0: skip)");
    app->add_option("--seed", seed, "s-LLGS base seed");
  }

  int run(std::ostream& out, std::ostream& err) const {
    RunConfig cfg = common.load();
    const DeviceParams params = cfg.device_params();
    print_warnings(params, err);
    const double current = cfg.drive_current(params);
    const NormalizedDrive drive = normalize(params, current, cfg.drive.h_ext_z);
    const double end = tau_end ? *tau_end : time_to_tau(cfg.pulse_length(params), drive);
    const auto taus = sample_taus(end, samples.value_or(cfg.sweep.samples));

    SolverSettings fvm = cfg.solver;
    fvm.kind = SolverKind::Fvm;
    if (cells) fvm.cells = *cells;
    SolverSettings spectral = cfg.solver;
    spectral.kind = SolverKind::Spectral;
    if (order) spectral.order = *order;

    auto t0 = std::chrono::steady_clock::now();
    const auto a = switching_series(params, drive, taus, fvm);
    const double t_fvm = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const auto b = switching_series(params, drive, taus, spectral);
    const double t_spectral = seconds_since(t0);
    if (b.warning) err << "warning: " << *b.warning << "\n";

    double worst = 0.0;
    for (std::size_t k = 0; k < taus.size(); ++k) {
      worst = std::max(worst, std::abs(a.switched[k] - b.switched[k]));
    }

    const double dt = cfg.sllgs.dt_s > 0.0 ? cfg.sllgs.dt_s : default_time_step(params);
    const double horizon = tau_to_time(end, drive);
    const auto wave = DriveWaveform::constant(current, horizon, Vec3(0.0, 0.0, cfg.drive.h_ext_z));
    const std::uint64_t base = seed.value_or(cfg.sllgs.seed);
    TransientOptions topt;
    topt.start = start_well(drive);
    t0 = std::chrono::steady_clock::now();
    const auto one = run_transient(params, wave, dt, base, TransientMode::stochastic(), topt);
    const double t_one = seconds_since(t0);

    Sink sink(cfg.output.path, out);
    auto& os = *sink;
    os << "delta=" << csv_number(drive.delta) << "\n"
       << "i=" << csv_number(drive.i) << "\n"
       << "h=" << csv_number(drive.h) << "\n"
       << "tau_d_s=" << csv_number(drive.tau_d) << "\n"
       << "tau_end=" << csv_number(end) << "\n"
       << "samples=" << taus.size() - 1 << "\n"
       << "fvm_cells=" << fvm.cells << "\n"
       << "fvm_grading=" << to_string(fvm.grading) << "\n"
       << "fvm_steps=" << a.steps << "\n"
       << "spectral_order=" << spectral.order << "\n"
       << "fvm_final_switched=" << csv_number(a.switched.back()) << "\n"
       << "spectral_final_switched=" << csv_number(b.switched.back()) << "\n"
       << "max_abs_discrepancy=" << csv_number(worst) << "\n"
       << "sllgs_dt_s=" << csv_number(dt) << "\n"
       << "sllgs_seed=" << base << "\n"
       << "sllgs_switch_time_s="
       << (one.switch_time ? csv_number(*one.switch_time) : std::string("none")) << "\n";

    const std::size_t n = walks.value_or(cfg.sllgs.walks);
    double t_ens = 0.0;
    if (n > 0) {
      EnsembleOptions eopt;
      eopt.start = topt.start;
      eopt.jobs = cfg.jobs;
      t0 = std::chrono::steady_clock::now();
      const auto ens = run_ensemble(params, wave, dt, n, base, eopt);
      t_ens = seconds_since(t0);
      const double fpe = b.switched.back();
      const auto& ci = ens.switched_ci.back();
      os << "ensemble_walks=" << n << "\n"
         << "ensemble_switched_fraction=" << csv_number(ens.switched_fraction.back()) << "\n"
         << "ensemble_ci99_low=" << csv_number(ci.lo) << "\n"
         << "ensemble_ci99_high=" << csv_number(ci.hi) << "\n"
         << "fpe_within_ci=" << (ci.contains(fpe) ? "true" : "false") << "\n";
    }
    err << "time_fvm_s=" << t_fvm << "\ntime_spectral_s=" << t_spectral
        << "\ntime_sllgs_single_s=" << t_one << "\ntime_sllgs_ensemble_s=" << t_ens << "\n";
    return kExitOk;
  }
};

// ---- wer / rer -----------------------------------------------------------

struct WerCommand {
  Common common;
  std::vector<double> currents;
  std::vector<double> pulses;

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("--currents", currents, "write currents in A")->delimiter(',');
    app->add_option("--pulses", pulses, "pulse widths in s")->delimiter(',');
  }

  int run(std::ostream& out, std::ostream& err) const {
    const RunConfig cfg = common.load();
    const DeviceParams params = cfg.device_params();
    print_warnings(params, err);
    std::vector<double> is = currents.empty() ? cfg.sweep.currents_a : currents;
    if (is.empty()) is.push_back(cfg.drive_current(params));
    const std::vector<double> ts = pulses.empty() ? cfg.sweep.pulses_s : pulses;
    if (ts.empty()) throw Error(Errc::Config, "$.sweep.pulses_s: no pulse widths given");
    std::vector<double> sorted = ts;
    std::sort(sorted.begin(), sorted.end());

    std::vector<ErrorRateCurve> curves(is.size());
    SolverSettings inner = cfg.solver;
    inner.jobs = 1;
    parallel_for(is.size(), cfg.jobs,
                 [&](std::size_t k) { curves[k] = wer_curve(params, is[k], sorted, inner); });

    std::vector<ErrorRatePoint> rows;
    for (const auto& c : curves) rows.insert(rows.end(), c.points.begin(), c.points.end());
    Sink sink(cfg.output.path, out);
    write_error_rates(*sink, rows);
    return kExitOk;
  }
};

struct RerCommand {
  Common common;
  std::vector<double> currents;
  std::vector<double> t_read;

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("--read-currents", currents, "read currents in A")->delimiter(',');
    app->add_option("--t-read", t_read, "read pulse widths in s")->delimiter(',');
  }

  int run(std::ostream& out, std::ostream& err) const {
    const RunConfig cfg = common.load();
    const DeviceParams params = cfg.device_params();
    print_warnings(params, err);
    const std::vector<double> is = currents.empty() ? cfg.sweep.read_currents_a : currents;
    const std::vector<double> ts = t_read.empty() ? cfg.sweep.t_read_s : t_read;
    if (is.empty()) throw Error(Errc::Config, "$.sweep.read_currents_a: no read currents given");
    if (ts.empty()) throw Error(Errc::Config, "$.sweep.t_read_s: no read pulse widths given");

    std::vector<ErrorRateCurve> curves;
    for (double t : ts) curves.push_back(rer_curve(params, is, t, cfg.solver));
    std::vector<ErrorRatePoint> rows;
    for (std::size_t k = 0; k < is.size(); ++k) {
      for (const auto& c : curves) rows.push_back(c.points[k]);
    }
    Sink sink(cfg.output.path, out);
    write_error_rates(*sink, rows);
    return kExitOk;
  }
};

// ---- fit -----------------------------------------------------------------

struct FitCommand {
  Common common;
  std::string data;
  std::optional<std::uint64_t> seed;
  std::optional<int> hops;
  std::optional<double> target_loss;
  std::string residuals;
  std::string report;

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("--data", data, "measured error rates CSV")->required();
    app->add_option("--seed", seed, "basin-hopping seed");
    app->add_option("--hops", hops, "basin-hopping hops");
    app->add_option("--target-loss", target_loss, "stop once the loss is at or below this");
    app->add_option("--residuals", residuals, "per-point residual CSV");
    app->add_option("--report", report, "fit summary (default: stderr)");
  }

  int run(std::ostream& out, std::ostream& err) const {
    RunConfig cfg = common.load();
    if (seed) cfg.fit.seed = *seed;
    if (hops) cfg.fit.budget.hops = *hops;
    if (target_loss) cfg.fit.budget.target_loss = *target_loss;
    const DeviceParams params = cfg.device_params();
    print_warnings(params, err);
    const auto points = read_error_rates_file(data);
    if (points.size() < 3) {
      throw Error(Errc::Config, data + ": need >= 3 points, found " + std::to_string(points.size()));
    }
    LossOptions opt;
    opt.solver = cfg.solver;
    if (cfg.fit.order) opt.solver.order = *cfg.fit.order;
    opt.preset = cfg.fit.weights;
    const auto result =
        fit_parameters(points, *cfg.device, cfg.fit_space(), cfg.fit.budget, cfg.fit.seed, opt);

    {
      Sink sink(cfg.output.path, out);
      *sink << device_json(result.best) << "\n";
    }
    if (!residuals.empty()) {
      Sink sink(residuals, out);
      *sink << "current_A,pulse_s,rate,model_pulse_s,log10_residual\n";
      for (std::size_t k = 0; k < points.size(); ++k) {
        const auto& m = result.breakdown.model_times[k];
        const auto& r = result.breakdown.residuals[k];
        *sink << csv_number(points[k].current) << ',' << csv_number(points[k].pulse_width) << ','
              << csv_number(points[k].rate) << ',' << (m ? csv_number(*m) : "") << ','
              << (r ? csv_number(*r) : "") << "\n";
      }
    }
    std::ofstream report_file;
    std::ostream* rep = &err;
    if (!report.empty()) {
      report_file.open(report);
      if (!report_file) throw Error(Errc::Config, "cannot write '" + report + "'");
      rep = &report_file;
    }
    *rep << "status=" << to_string(result.status) << "\n"
         << "initial_loss=" << csv_number(result.initial_loss) << "\n"
         << "loss=" << csv_number(result.loss) << "\n"
         << "evaluations=" << result.evaluations << "\n"
         << "hops=" << result.hops << "\n"
         << "iterations=" << result.iterations << "\n"
         << "seed=" << cfg.fit.seed << "\n";
    if (result.status == FitStatus::BudgetExhausted && !result.improved()) {
      err << "error: fit budget exhausted without improving the initial loss\n";
      return kExitFit;
    }
    return kExitOk;
  }
};

// ---- calibrate -----------------------------------------------------------

struct CalibrateCommand {
  Common common;
  std::vector<double> targets;
  std::optional<double> current;
  std::optional<double> i_norm;
  std::optional<double> dt;
  std::string data;

  void attach(CLI::App* app) {
    common.attach(app);
    app->add_option("--targets", targets, "WER targets")->delimiter(',');
    auto* c = app->add_option("--current", current, "calibration current in A");
    app->add_option("--i", i_norm, "calibration current in units of I_c")->excludes(c);
    app->add_option("--dt", dt, "integrator step in s");
    app->add_option("--data", data, "dataset the device was fitted to (hashed into the deck)");
  }

  int run(std::ostream& out, std::ostream& err) const {
    RunConfig cfg = common.load();
    const DeviceParams params = cfg.device_params();
    print_warnings(params, err);
    const std::vector<double> ts = targets.empty() ? cfg.calibrate.targets : targets;
    if (ts.empty()) throw Error(Errc::Config, "no WER targets given");
    const double i_c = normalize(params, 1.0).i_c;
    double amps = 0.0;
    if (current) {
      amps = *current;
    } else if (i_norm) {
      amps = *i_norm * i_c;
    } else if (cfg.calibrate.current_a) {
      amps = *cfg.calibrate.current_a;
    } else if (cfg.calibrate.i_norm) {
      amps = *cfg.calibrate.i_norm * i_c;
    } else {
      amps = cfg.drive_current(params);
    }

    CalibrationOptions opt;
    opt.solver = cfg.solver;
    opt.rel_tol = cfg.calibrate.rel_tol;
    opt.dt = dt.value_or(cfg.sllgs.dt_s);

    std::vector<CfCalibration> done(ts.size());
    std::vector<std::string> failed(ts.size());
    parallel_for(ts.size(), cfg.jobs, [&](std::size_t k) {
      try {
        done[k] = calibrate_cf(params, ts[k], amps, opt);
      } catch (const Error& e) {
        if (e.code() != Errc::CalibrationNoCross && e.code() != Errc::NoBracket) throw;
        failed[k] = e.what();
      }
    });

    std::map<std::string, std::string> prov;
    prov["dataset_hash"] = data.empty() ? "none" : fnv1a_hex(read_file(data));
    prov["solver"] = solver_label(cfg.solver);
    prov["calibration_current_a"] = csv_number(amps);
    prov["dt_s"] = csv_number(opt.dt > 0.0 ? opt.dt : default_time_step(params));
    std::vector<std::pair<double, double>> cf;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      if (!failed[k].empty()) {
        err << "calibration failed for WER " << format_target(ts[k]) << ": " << failed[k] << "\n";
        continue;
      }
      cf.emplace_back(ts[k], done[k].c_f);
      prov["t_star_wer_" + format_target(ts[k])] = csv_number(done[k].t_star);
      err << cf_key(ts[k]) << " = " << csv_number(done[k].c_f) << " (t* = "
          << csv_number(done[k].t_star) << " s, " << done[k].evaluations << " transients)\n";
    }
    const ModelCard card = emit_model_card(params, cf, ts, prov);
    Sink sink(cfg.output.path, out);
    *sink << serialize_deck(card);
    return kExitOk;
  }
};

// ---- transient -----------------------------------------------------------

struct TransientCommand {
  Common common;
  std::string deck;
  std::optional<double> wer;
  std::optional<double> cf;
  bool stochastic = false;
  bool deterministic = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> current;
  std::optional<double> pulse;
  std::optional<double> dt;
  std::optional<std::size_t> decimation;

  void attach(CLI::App* app) {
    common.attach(app, false);
    app->add_option("--deck", deck, "model card written by calibrate");
    auto* w = app->add_option("--wer", wer, "fictitious mode with the deck's c_f for this WER");
    auto* c = app->add_option("--cf", cf, "fictitious mode with an explicit c_f");
    auto* s = app->add_flag("--stochastic", stochastic, "thermal noise");
    auto* d = app->add_flag("--deterministic", deterministic, "no noise");
    w->excludes(c)->excludes(s)->excludes(d);
    c->excludes(s)->excludes(d);
    s->excludes(d);
    app->add_option("--seed", seed, "noise seed (stochastic mode)");
    app->add_option("--current", current, "drive current in A");
    app->add_option("--pulse", pulse, "pulse length in s");
    app->add_option("--dt", dt, "integrator step in s");
    app->add_option("--decimation", decimation, "keep every k-th step");
  }

  int run(std::ostream& out, std::ostream& err) const {
    const RunConfig cfg = common.load();
    std::optional<ModelCard> card;
    if (!deck.empty()) card = read_deck(deck);
    const DeviceParams params = card ? DeviceParams(card->device) : cfg.device_params();
    print_warnings(params, err);

    TransientMode mode = TransientMode::deterministic();
    if (wer) {
      if (!card) throw Error(Errc::Config, "--wer needs --deck");
      const auto c_f = card->cf_for(*wer);
      if (!c_f) throw Error(Errc::Config, deck + ": no " + cf_key(*wer) + " entry");
      mode = TransientMode::fictitious(*c_f);
    } else if (cf) {
      mode = TransientMode::fictitious(*cf);
    } else if (stochastic) {
      mode = TransientMode::stochastic();
    }

    auto provenance = [&](const std::string& key) -> std::optional<double> {
      if (!card) return std::nullopt;
      const auto it = card->provenance.find(key);
      if (it == card->provenance.end()) return std::nullopt;
      try {
        return std::stod(it->second);
      } catch (const std::exception&) {
        throw Error(Errc::Config, deck + ": bad provenance value for " + key);
      }
    };

    double amps = 0.0;
    if (current) {
      amps = *current;
    } else if (const auto a = provenance("calibration_current_a")) {
      amps = *a;
    } else {
      amps = cfg.drive_current(params);
    }
    const NormalizedDrive drive = normalize(params, amps, cfg.drive.h_ext_z);

    // Default window: twice the calibrated pulse width, else the config pulse.
    double length = 0.0;
    if (pulse) {
      length = *pulse;
    } else if (const auto t = wer ? provenance("t_star_wer_" + format_target(*wer)) : std::nullopt) {
      length = 2.0 * *t;
    } else {
      length = cfg.device ? cfg.pulse_length(params) : 10.0 * drive.tau_d;
    }
    const double step = dt ? *dt : (cfg.sllgs.dt_s > 0.0 ? cfg.sllgs.dt_s : default_time_step(params));

    TransientOptions opt;
    opt.start = start_well(drive);
    opt.decimation = decimation.value_or(cfg.output.decimation);
    const auto wave = DriveWaveform::constant(amps, length, Vec3(0.0, 0.0, cfg.drive.h_ext_z));
    const auto res = run_transient(params, wave, step, seed.value_or(cfg.sllgs.seed), mode, opt);

    Sink sink(cfg.output.path, out);
    write_trajectory(*sink, res.trajectory);
    if (res.switch_time) {
      err << "switch_time_s=" << csv_number(*res.switch_time) << "\n";
    } else {
      err << "switch_time_s=none\n";
    }
    return kExitOk;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic switching of perpendicular MTJs: Fokker-Planck and s-LLGS solvers",
               "mtjfp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  SolveFpe solve;
  CompareSolvers compare;
  WerCommand wer;
  RerCommand rer;
  FitCommand fit;
  CalibrateCommand calibrate;
  TransientCommand transient;
  std::function<int()> action;
  auto bind = [&](auto& cmd, const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    cmd.attach(sub);
    sub->callback([&] { action = [&] { return cmd.run(out, err); }; });
  };
  bind(solve, "solve-fpe", "switched fraction versus time from one Fokker-Planck solver");
  bind(compare, "compare-solvers", "FVM, spectral and s-LLGS on one drive");
  bind(wer, "wer", "write error rate over currents and pulse widths");
  bind(rer, "rer", "read disturb rate over read currents");
  bind(fit, "fit", "fit device parameters to measured error rates");
  bind(calibrate, "calibrate", "calibrate fictitious-noise coefficients and write a model card");
  bind(transient, "transient", "single macrospin transient");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    return action();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}

}  // namespace mtjfp
