#include "mtjfp/stats.hpp"

#include "mtjfp/error.hpp"
#include "mtjfp/legendre.hpp"
#include "mtjfp/parallel.hpp"
#include "mtjfp/sllgs.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <type_traits>

namespace mtjfp {

const char* to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::Fvm: return "fvm";
    case SolverKind::Spectral: return "spectral";
    case SolverKind::MonteCarlo: return "monte-carlo";
    case SolverKind::Measured: return "measured";
  }
  return "?";
}

const char* to_string(RateKind kind) { return kind == RateKind::Wer ? "WER" : "RER"; }

SolverKind parse_solver_kind(const std::string& s) {
  if (s == "fvm") return SolverKind::Fvm;
  if (s == "spectral") return SolverKind::Spectral;
  if (s == "monte-carlo") return SolverKind::MonteCarlo;
  if (s == "measured") return SolverKind::Measured;
  throw Error(Errc::InvalidArgument, "unknown solver '" + s + "'");
}

RateKind parse_rate_kind(const std::string& s) {
  if (s == "WER" || s == "wer") return RateKind::Wer;
  if (s == "RER" || s == "rer") return RateKind::Rer;
  throw Error(Errc::InvalidArgument, "unknown rate kind '" + s + "'");
}

Well start_well(const NormalizedDrive& drive) {
  return drive.i < 0.0 ? Well::Antiparallel : Well::Parallel;
}

namespace {

Well opposite(Well w) { return w == Well::Parallel ? Well::Antiparallel : Well::Parallel; }

// int_0^1 exp(-delta u (2 - u)) du, the hemisphere normalization in u = 1 - |x|.
double hemisphere_norm(double delta) {
  const double c = std::min(1.0, 40.0 / delta);
  const auto& gl = gauss_legendre(256);
  auto integrate = [&](double a, double b) {
    double s = 0.0;
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double u = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[q];
      s += gl.weights[q] * std::exp(-delta * u * (2.0 - u));
    }
    return 0.5 * (b - a) * s;
  };
  double z = integrate(0.0, c);
  if (c < 1.0) z += integrate(c, 1.0);
  return z;
}

}  // namespace

double boltzmann_density(double x, double delta, Well well) {
  if (!(delta > 0.0)) throw Error(Errc::InvalidArgument, "delta must be > 0");
  const double s = well == Well::Parallel ? x : -x;
  if (s < 0.0 || s > 1.0) return 0.0;
  const double u = 1.0 - s;
  return std::exp(-delta * u * (2.0 - u)) / hemisphere_norm(delta);
}

GridDistribution boltzmann_grid(const ThetaMesh& mesh, double delta, Well well) {
  if (!(delta > 0.0)) throw Error(Errc::InvalidArgument, "delta must be > 0");
  const auto& f = mesh.faces();
  const auto& gl = gauss_legendre(32);
  GridDistribution g{mesh, std::vector<double>(mesh.size(), 0.0), 0.0};
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    // Cell k spans x in [cos f_{k+1}, cos f_k]; clip to the well.
    double a = std::cos(f[k + 1]);
    double b = std::cos(f[k]);
    if (well == Well::Parallel) {
      a = std::max(a, 0.0);
    } else {
      b = std::min(b, 0.0);
    }
    if (!(b > a)) continue;
    double s = 0.0;
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double x = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[q];
      const double u = 1.0 - std::abs(x);
      s += gl.weights[q] * std::exp(-delta * u * (2.0 - u));
    }
    g.p[k] = 0.5 * (b - a) * s;
  }
  double total = 0.0;
  for (double v : g.p) total += v;
  for (double& v : g.p) v /= total;
  return g;
}

LegendreState boltzmann_legendre(double delta, Well well, int order) {
  const double z = hemisphere_norm(delta);
  const double sign = well == Well::Parallel ? 1.0 : -1.0;
  auto rho = [&](double x) {
    const double u = 1.0 - sign * x;
    return std::exp(-delta * u * (2.0 - u)) / z;
  };
  return well == Well::Parallel ? project(rho, order, 0.0, 1.0) : project(rho, order, -1.0, 0.0);
}

double well_mass(const GridDistribution& dist, Well well) {
  const auto& c = dist.mesh.centers();
  constexpr double half_pi = std::numbers::pi / 2.0;
  double s = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const bool upper = c[k] < half_pi;
    if (c[k] == half_pi) {
      s += 0.5 * dist.p[k];
    } else if (upper == (well == Well::Parallel)) {
      s += dist.p[k];
    }
  }
  return s;
}

double well_mass(const LegendreState& state, Well well) {
  return well == Well::Parallel ? parallel_fraction(state) : switched_fraction(state);
}

double clamp_rate(double r) {
  if (!(r > DBL_MIN)) return DBL_MIN;
  return std::min(r, std::nextafter(1.0, 0.0));
}

namespace {

// Solver-neutral stepping used for curves and inversions.  State copies are
// cheap (vectors); propagators are cached per step length.
class SpectralMarch {
 public:
  using State = LegendreState;

  SpectralMarch(const DeviceParams& params, const NormalizedDrive& drive,
                const SolverSettings& s, Well well)
      : gen_(build_generator(s.order, drive)), well_(well),
        init_(boltzmann_legendre(drive.delta, well, s.order)) {
    if (s.relax_time > 0.0) {
      NormalizedDrive idle = normalize(params, 0.0, drive.h * params.h_k_eff());
      relax_ = propagator(build_generator(s.order, idle), s.relax_time / drive.tau_d);
    }
  }

  State initial() const { return init_; }

  void step(State& s, double h) {
    if (h <= 0.0) return;
    auto it = props_.find(h);
    if (it == props_.end()) it = props_.emplace(h, propagator(gen_, h)).first;
    s.r = it->second * s.r;
    s.tau += h;
  }

  double mass(const State& s, Well w) const {
    if (!relax_) return well_mass(s, w);
    LegendreState r{*relax_ * s.r, s.tau};
    return well_mass(r, w);
  }
  double wer(const State& s) const { return mass(s, well_); }
  double switched(const State& s) const { return mass(s, opposite(well_)); }

 private:
  GeneratorMatrix gen_;
  Well well_;
  LegendreState init_;
  std::map<double, Eigen::MatrixXd> props_;
  std::optional<Eigen::MatrixXd> relax_;
};

class FvmMarch {
 public:
  using State = GridDistribution;

  FvmMarch(const DeviceParams& params, const NormalizedDrive& drive, const SolverSettings& s,
           Well well)
      : mesh_(build_mesh(s.cells, s.grading)), op_(assemble(mesh_, drive)), well_(well),
        w_(s.theta_weight), init_(boltzmann_grid(mesh_, drive.delta, well)) {
    target_ = s.dtau > 0.0 ? s.dtau : default_dtau(mesh_, drive);
    if (s.relax_time > 0.0) {
      const NormalizedDrive idle = normalize(params, 0.0, drive.h * params.h_k_eff());
      relax_op_ = assemble(mesh_, idle);
      relax_tau_ = s.relax_time / drive.tau_d;
      relax_dtau_ = s.dtau > 0.0 ? s.dtau : default_dtau(mesh_, idle);
    }
  }

  State initial() const { return init_; }

  void step(State& g, double h) {
    if (h <= 0.0) return;
    advance(g, h, op_, target_, steppers_);
  }

  double mass(const State& g, Well w) const {
    if (!relax_op_) return well_mass(g, w);
    State r = g;
    advance(r, relax_tau_, *relax_op_, relax_dtau_, relax_steppers_);
    return well_mass(r, w);
  }
  double wer(const State& g) const { return mass(g, well_); }
  double switched(const State& g) const { return mass(g, opposite(well_)); }
  std::size_t steps() const { return steps_; }

 private:
  void advance(State& g, double len, const FvmOperator& op, double target,
               std::map<double, CnStepper>& cache) const {
    const auto n = static_cast<std::size_t>(std::ceil(len / target - 1e-9));
    const double h = len / static_cast<double>(n);
    auto it = cache.find(h);
    if (it == cache.end()) it = cache.emplace(h, CnStepper(op, h, w_)).first;
    const double t0 = g.tau;
    steps_ += n;
    for (std::size_t k = 0; k < n; ++k) {
      it->second.step(g.p);
      g.tau = t0 + h * static_cast<double>(k + 1);
      clip_negative(g.p, g.tau);
    }
    g.tau = t0 + len;
  }

  ThetaMesh mesh_;
  FvmOperator op_;
  Well well_;
  double w_;
  State init_;
  double target_ = 0.1;
  mutable std::map<double, CnStepper> steppers_;
  std::optional<FvmOperator> relax_op_;
  double relax_tau_ = 0.0;
  double relax_dtau_ = 0.1;
  mutable std::map<double, CnStepper> relax_steppers_;
  mutable std::size_t steps_ = 0;
};

template <class March>
std::vector<double> rates_at(March& m, const std::vector<double>& taus, bool want_switched) {
  std::vector<std::size_t> order(taus.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return taus[a] < taus[b]; });
  std::vector<double> out(taus.size());
  auto s = m.initial();
  for (std::size_t k : order) {
    m.step(s, taus[k] - s.tau);
    out[k] = want_switched ? m.switched(s) : m.wer(s);
  }
  return out;
}

void check_solver(const SolverSettings& s) {
  if (s.kind != SolverKind::Fvm && s.kind != SolverKind::Spectral) {
    throw Error(Errc::InvalidArgument,
                std::string("error rates need an FPE solver, got ") + to_string(s.kind));
  }
}

template <class Fn>
auto with_march(const DeviceParams& params, const NormalizedDrive& drive, const SolverSettings& s,
                Well well, Fn&& fn) {
  check_solver(s);
  try {
    if (s.kind == SolverKind::Fvm) {
      FvmMarch m(params, drive, s, well);
      return fn(m);
    }
    SpectralMarch m(params, drive, s, well);
    return fn(m);
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidArgument) throw;
    throw Error(Errc::SolverDiverged, e.what());
  }
}

void check_pulses(const std::vector<double>& pulses) {
  for (double t : pulses) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw Error(Errc::InvalidArgument, "pulse widths must be finite and > 0");
    }
  }
}

}  // namespace

SwitchingSeries switching_series(const DeviceParams& params, const NormalizedDrive& drive,
                                 const std::vector<double>& taus, const SolverSettings& settings) {
  if (!std::is_sorted(taus.begin(), taus.end()) || (!taus.empty() && taus.front() < 0.0)) {
    throw Error(Errc::InvalidArgument, "sample taus must be ascending and >= 0");
  }
  SwitchingSeries out;
  out.taus = taus;
  with_march(params, drive, settings, start_well(drive), [&](auto& m) {
    auto s = m.initial();
    for (double t : taus) {
      m.step(s, t - s.tau);
      out.switched.push_back(m.switched(s));
    }
    if constexpr (std::is_same_v<std::decay_t<decltype(m)>, FvmMarch>) {
      out.final_grid = s;
      out.steps = m.steps();
    } else {
      out.final_state = s;
      out.warning = ringing_warning(s);
    }
    return 0;
  });
  return out;
}

ErrorRateCurve wer_curve(const DeviceParams& params, double current,
                         const std::vector<double>& pulse_widths, const SolverSettings& settings) {
  check_pulses(pulse_widths);
  const NormalizedDrive drive = normalize(params, current);
  std::vector<double> taus;
  for (double t : pulse_widths) taus.push_back(time_to_tau(t, drive));
  const auto rates = with_march(params, drive, settings, start_well(drive),
                                [&](auto& m) { return rates_at(m, taus, false); });
  ErrorRateCurve c{RateKind::Wer, settings.kind, {}, {}};
  for (std::size_t k = 0; k < rates.size(); ++k) {
    c.points.push_back({current, pulse_widths[k], params.temperature(), clamp_rate(rates[k]),
                        RateKind::Wer, settings.kind});
  }
  return c;
}

ErrorRateCurve rer_curve(const DeviceParams& params, const std::vector<double>& read_currents,
                         double t_read, const SolverSettings& settings) {
  check_pulses({t_read});
  std::vector<double> rates(read_currents.size());
  parallel_for(read_currents.size(), settings.jobs, [&](std::size_t k) {
    const NormalizedDrive drive = normalize(params, read_currents[k]);
    const std::vector<double> taus{time_to_tau(t_read, drive)};
    rates[k] = with_march(params, drive, settings, start_well(drive),
                          [&](auto& m) { return rates_at(m, taus, true); })[0];
  });
  ErrorRateCurve c{RateKind::Rer, settings.kind, {}, {}};
  for (std::size_t k = 0; k < rates.size(); ++k) {
    c.points.push_back({read_currents[k], t_read, params.temperature(), clamp_rate(rates[k]),
                        RateKind::Rer, settings.kind});
  }
  return c;
}

namespace {

constexpr double kCoarseStep = 0.5;
constexpr double kRefine = 16.0;
constexpr double kTimeResolution = 0.002;  // finest step relative to the crossing time
constexpr int kMaxLevels = 8;

double interpolate_crossing(double t0, double w0, double t1, double w1, double target) {
  if (w0 > 0.0 && w1 > 0.0 && w0 != w1) {
    const double l0 = std::log(w0), l1 = std::log(w1), lt = std::log(target);
    return t0 + (t1 - t0) * (l0 - lt) / (l0 - l1);
  }
  if (w0 == w1) return t1;
  return t0 + (t1 - t0) * (w0 - target) / (w0 - w1);
}

template <class March>
WerInversion invert_with(March& m, const std::vector<double>& targets) {
  WerInversion out;
  out.times.assign(targets.size(), std::nullopt);
  std::vector<std::size_t> order(targets.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return targets[a] > targets[b]; });

  auto lo = m.initial();
  double w_lo = m.wer(lo);
  auto hi = lo;
  double w_hi = w_lo;
  bool have_hi = false;

  for (std::size_t idx : order) {
    const double target = targets[idx];
    if (w_lo <= target) {
      out.times[idx] = lo.tau;
      continue;
    }
    // Coarse march until the bracket [lo, hi] contains the crossing.
    for (;;) {
      if (!have_hi) {
        if (lo.tau >= kMaxSearchTau - 1e-9) break;
        hi = lo;
        m.step(hi, std::min(kCoarseStep, kMaxSearchTau - lo.tau));
        w_hi = m.wer(hi);
        have_hi = true;
      }
      if (w_hi <= target) break;
      lo = hi;
      w_lo = w_hi;
      have_hi = false;
    }
    if (!have_hi || w_hi > target) continue;

    // Refine inside the coarse bracket without disturbing it.
    auto a = lo;
    double wa = w_lo;
    double b_tau = hi.tau, wb = w_hi;
    double h = hi.tau - lo.tau;
    for (int level = 0; level < kMaxLevels && h > kTimeResolution * b_tau; ++level) {
      h /= kRefine;
      auto s = a;
      double ws = wa;
      for (int k = 0; k < static_cast<int>(kRefine); ++k) {
        auto next = s;
        m.step(next, h);
        const double wn = m.wer(next);
        if (wn <= target) {
          a = s;
          wa = ws;
          b_tau = next.tau;
          wb = wn;
          break;
        }
        s = std::move(next);
        ws = wn;
      }
    }
    out.times[idx] = interpolate_crossing(a.tau, wa, b_tau, wb, target);
  }
  // Report the state at the search limit for penalty construction.
  if (std::any_of(out.times.begin(), out.times.end(), [](const auto& t) { return !t; })) {
    out.wer_at_t_max = have_hi && hi.tau > lo.tau ? w_hi : w_lo;
  }
  out.t_max = kMaxSearchTau;
  return out;
}

}  // namespace

WerInversion invert_wer(const DeviceParams& params, double current,
                        const std::vector<double>& targets, const SolverSettings& settings) {
  for (double t : targets) {
    if (!(t > 0.0 && t < 1.0)) throw Error(Errc::InvalidArgument, "WER targets must lie in (0, 1)");
  }
  const NormalizedDrive drive = normalize(params, current);
  WerInversion inv = with_march(params, drive, settings, start_well(drive),
                                [&](auto& m) { return invert_with(m, targets); });
  for (auto& t : inv.times) {
    if (t) *t = tau_to_time(*t, drive);
  }
  inv.t_max = tau_to_time(inv.t_max, drive);
  return inv;
}

double time_to_wer(const DeviceParams& params, double current, double target,
                   const SolverSettings& settings) {
  const WerInversion inv = invert_wer(params, current, {target}, settings);
  if (!inv.times[0]) {
    std::ostringstream os;
    os << "WER stays at " << inv.wer_at_t_max << " > " << target << " up to t = " << inv.t_max
       << " s (" << kMaxSearchTau << " tau_d) at I = " << current << " A";
    throw Error(Errc::NoBracket, os.str());
  }
  return *inv.times[0];
}

std::size_t min_walks(double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) throw Error(Errc::InvalidArgument, "rate must lie in (0, 1]");
  return static_cast<std::size_t>(std::ceil(5.0 / rate - 1e-9));
}

McValidation mc_validate(const DeviceParams& params, double current, double pulse_width,
                         std::size_t n_walks, std::uint64_t seed, const SolverSettings& settings,
                         double dt) {
  const double fpe = wer_curve(params, current, {pulse_width}, settings).points[0].rate;
  if (static_cast<double>(n_walks) * fpe < 5.0) {
    std::ostringstream os;
    os << "expected error count " << static_cast<double>(n_walks) * fpe << " < 5 at WER " << fpe
       << "; need n_walks >= " << min_walks(fpe);
    throw Error(Errc::InsufficientWalks, os.str());
  }
  const NormalizedDrive drive = normalize(params, current);
  EnsembleOptions eo;
  eo.start = start_well(drive);
  eo.jobs = settings.jobs;
  const double step = dt > 0.0 ? dt : default_time_step(params);
  const EnsembleResult ens = run_ensemble(params, DriveWaveform::constant(current, pulse_width),
                                          step, n_walks, seed, eo);
  McValidation v;
  v.n_walks = n_walks;
  const auto stayed = static_cast<std::size_t>(
      std::llround((1.0 - ens.switched_fraction[0]) * static_cast<double>(n_walks)));
  v.empirical = static_cast<double>(stayed) / static_cast<double>(n_walks);
  v.ci = wilson_interval(stayed, n_walks);
  v.fpe_rate = fpe;
  v.agree = v.ci.contains(fpe);
  return v;
}

}  // namespace mtjfp
