#include "mtjfp/fit.hpp"

#include "mtjfp/error.hpp"
#include "mtjfp/parallel.hpp"
#include "mtjfp/rng.hpp"
#include "mtjfp/sllgs.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace mtjfp {

const std::vector<std::string>& parameter_names() {
  static const std::vector<std::string> names = {"msat_a_per_m", "volume_m3", "alpha",
                                                 "hk_eff_a_per_m", "delta", "temp_k",
                                                 "pol_p", "eps_prime"};
  return names;
}

double get_parameter(const DeviceInputs& in, const std::string& name) {
  if (name == "msat_a_per_m") return in.m_s;
  if (name == "volume_m3") return in.volume;
  if (name == "alpha") return in.alpha;
  if (name == "hk_eff_a_per_m") return in.h_k_eff;
  if (name == "delta") {
    return in.delta ? *in.delta
                    : barrier_delta(in.m_s, in.h_k_eff, in.volume, in.temperature);
  }
  if (name == "temp_k") return in.temperature;
  if (name == "pol_p") return in.polarization;
  if (name == "eps_prime") return in.eps_prime;
  throw Error(Errc::InvalidArgument, "unknown parameter '" + name + "'");
}

void set_parameter(DeviceInputs& in, const std::string& name, double value) {
  if (name == "msat_a_per_m") {
    in.m_s = value;
  } else if (name == "volume_m3") {
    in.volume = value;
  } else if (name == "alpha") {
    in.alpha = value;
  } else if (name == "hk_eff_a_per_m") {
    in.h_k_eff = value;
  } else if (name == "delta") {
    in.delta = value;
  } else if (name == "temp_k") {
    in.temperature = value;
  } else if (name == "pol_p") {
    in.polarization = value;
  } else if (name == "eps_prime") {
    in.eps_prime = value;
  } else {
    throw Error(Errc::InvalidArgument, "unknown parameter '" + name + "'");
  }
}

FitSpace FitSpace::defaults(const DeviceInputs& center, double span) {
  FitSpace s;
  auto around = [&](const std::string& name, double hi_cap) {
    const double v = get_parameter(center, name);
    return FitParameter{name, v / span, std::min(v * span, hi_cap), ParamScale::Log, false};
  };
  const double inf = std::numeric_limits<double>::infinity();
  s.params.push_back(around("msat_a_per_m", inf));
  s.params.push_back(around("volume_m3", inf));
  s.params.push_back(around("alpha", inf));
  s.params.push_back(around("hk_eff_a_per_m", inf));
  s.params.push_back(around("pol_p", 1.0));
  return s;
}

std::size_t FitSpace::free_count() const {
  return static_cast<std::size_t>(
      std::count_if(params.begin(), params.end(), [](const auto& p) { return !p.frozen; }));
}

void FitSpace::validate() const {
  const auto& names = parameter_names();
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& p = params[k];
    if (std::find(names.begin(), names.end(), p.name) == names.end()) {
      throw Error(Errc::InvalidArgument, "unknown fit parameter '" + p.name + "'");
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (params[j].name == p.name) {
        throw Error(Errc::InvalidArgument, "fit parameter '" + p.name + "' listed twice");
      }
    }
    if (!std::isfinite(p.lower) || !std::isfinite(p.upper) || !(p.lower < p.upper)) {
      throw Error(Errc::InvalidArgument, "fit bounds of '" + p.name + "' must be finite, lower < upper");
    }
    if (p.scale == ParamScale::Log && !(p.lower > 0.0)) {
      throw Error(Errc::InvalidArgument, "log-scaled '" + p.name + "' needs a positive lower bound");
    }
  }
}

bool FitSpace::derives_delta() const {
  for (const auto& p : params) {
    if (p.name == "delta" && !p.frozen) return false;
  }
  return true;
}

double to_scaled(const FitParameter& p, double value) {
  double z = p.scale == ParamScale::Log
                 ? (std::log(value) - std::log(p.lower)) / (std::log(p.upper) - std::log(p.lower))
                 : (value - p.lower) / (p.upper - p.lower);
  return std::clamp(z, 0.0, 1.0);
}

double from_scaled(const FitParameter& p, double z) {
  z = std::clamp(z, 0.0, 1.0);
  if (p.scale == ParamScale::Log) {
    if (z == 1.0) return p.upper;
    return std::exp(std::log(p.lower) + z * (std::log(p.upper) - std::log(p.lower)));
  }
  return z == 1.0 ? p.upper : p.lower + z * (p.upper - p.lower);
}

std::vector<double> resolve_weights(const std::vector<ErrorRatePoint>& data,
                                    const LossOptions& options) {
  if (!options.weights.empty()) {
    if (options.weights.size() != data.size()) {
      throw Error(Errc::InvalidArgument, "weight count differs from the dataset size");
    }
    return options.weights;
  }
  std::vector<double> w(data.size(), 1.0);
  if (options.preset == WeightPreset::InverseTime && !data.empty()) {
    double mean = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
      w[k] = 1.0 / data[k].pulse_width;
      mean += w[k];
    }
    mean /= static_cast<double>(data.size());
    for (double& v : w) v /= mean;
  }
  return w;
}

LossBreakdown evaluate_loss(const DeviceInputs& device, const std::vector<ErrorRatePoint>& data,
                            const LossOptions& options) {
  if (data.empty()) throw Error(Errc::InvalidArgument, "dataset is empty");
  const auto w = resolve_weights(data, options);

  // One inversion per (current, temperature) group.
  std::map<std::pair<double, double>, std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (data[k].kind != RateKind::Wer) {
      throw Error(Errc::InvalidArgument, "regression uses WER points only");
    }
    groups[{data[k].current, data[k].temperature}].push_back(k);
  }
  std::vector<std::pair<std::pair<double, double>, std::vector<std::size_t>>> jobs(groups.begin(),
                                                                                 groups.end());

  LossBreakdown out;
  out.residuals.assign(data.size(), std::nullopt);
  out.model_times.assign(data.size(), std::nullopt);
  std::vector<double> contrib(data.size(), 0.0);

  parallel_for(jobs.size(), options.solver.jobs, [&](std::size_t g) {
    const auto& [key, idx] = jobs[g];
    std::vector<double> targets;
    for (auto k : idx) targets.push_back(data[k].rate);
    try {
      DeviceInputs in = device;
      in.temperature = key.second;
      const DeviceParams params(in);
      SolverSettings s = options.solver;
      s.jobs = 1;
      const WerInversion inv = invert_wer(params, key.first, targets, s);
      for (std::size_t j = 0; j < idx.size(); ++j) {
        const auto k = idx[j];
        const double t_meas = data[k].pulse_width;
        if (inv.times[j] && *inv.times[j] > 0.0) {
          const double r = std::log10(*inv.times[j] / t_meas);
          out.residuals[k] = r;
          out.model_times[k] = inv.times[j];
          contrib[k] = w[k] * r * r;
        } else {
          const double a = std::log10(inv.t_max / t_meas);
          const double b = std::log10(std::max(inv.wer_at_t_max, 1e-300) / targets[j]);
          contrib[k] = w[k] * (a * a + b * b);
        }
      }
    } catch (const Error&) {
      for (auto k : idx) contrib[k] = w[k] * kFailurePenalty;
    }
  });
  for (double c : contrib) out.loss += c;
  return out;
}

double loss(const DeviceInputs& device, const std::vector<ErrorRatePoint>& data,
            const LossOptions& options) {
  return evaluate_loss(device, data, options).loss;
}

const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::Converged: return "converged";
    case FitStatus::TargetReached: return "target-reached";
    case FitStatus::BudgetExhausted: return "budget-exhausted";
  }
  return "?";
}

namespace {

struct BudgetHit {};

class CountingObjective {
 public:
  CountingObjective(const ScaledObjective& f, std::size_t limit) : f_(f), limit_(limit) {}

  double operator()(const std::vector<double>& z) {
    if (count_ >= limit_) throw BudgetHit{};
    ++count_;
    const double v = f_(z);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  }
  std::size_t count() const { return count_; }

 private:
  const ScaledObjective& f_;
  std::size_t limit_;
  std::size_t count_ = 0;
};

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

Vec project_box(Vec z) {
  for (double& v : z) v = std::clamp(v, 0.0, 1.0);
  return z;
}

Vec gradient(CountingObjective& f, const Vec& z, double h) {
  Vec g(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    Vec a = z, b = z;
    const double up = std::min(1.0, z[k] + h);
    const double dn = std::max(0.0, z[k] - h);
    a[k] = up;
    b[k] = dn;
    g[k] = (f(a) - f(b)) / (up - dn);
  }
  return g;
}

struct LocalResult {
  Vec z;
  double f;
  int iterations;
};

// Projected BFGS: bound-active coordinates are held fixed, the inverse
// Hessian is reset whenever the curvature condition fails.
// A target of zero or below disables the early stop.
bool reached(double loss, const FitBudget& b) { return b.target_loss > 0.0 && loss <= b.target_loss; }

LocalResult local_search(CountingObjective& f, Vec z, double fz, const FitBudget& b) {
  const std::size_t n = z.size();
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                   static_cast<Eigen::Index>(n));
  Vec g = gradient(f, z, b.gradient_step);
  int it = 0;
  for (; it < b.local_iterations; ++it) {
    if (reached(fz, b)) break;
    std::vector<bool> active(n, false);
    for (std::size_t k = 0; k < n; ++k) {
      active[k] = (z[k] <= 0.0 && g[k] > 0.0) || (z[k] >= 1.0 && g[k] < 0.0);
    }
    double pg = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k]) pg = std::max(pg, std::abs(g[k]));
    }
    if (pg < 1e-9) break;

    Vec d(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      if (active[r]) continue;
      for (std::size_t c = 0; c < n; ++c) {
        if (!active[c]) d[r] -= hinv(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * g[c];
      }
    }
    if (dot(d, g) >= 0.0) {
      hinv.setIdentity();
      for (std::size_t k = 0; k < n; ++k) d[k] = active[k] ? 0.0 : -g[k];
    }
    // Keep the first trial inside a modest trust region of the unit box.
    double dn = std::sqrt(dot(d, d));
    double t = dn > 0.5 ? 0.5 / dn : 1.0;

    Vec z_new;
    double f_new = fz;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls) {
      z_new = project_box(z);
      for (std::size_t k = 0; k < n; ++k) z_new[k] = std::clamp(z[k] + t * d[k], 0.0, 1.0);
      Vec step(n);
      for (std::size_t k = 0; k < n; ++k) step[k] = z_new[k] - z[k];
      f_new = f(z_new);
      if (f_new <= fz + 1e-4 * dot(g, step)) {
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;

    Vec g_new = gradient(f, z_new, b.gradient_step);
    Vec s(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = z_new[k] - z[k];
      y[k] = g_new[k] - g[k];
    }
    const double sy = dot(s, y);
    const double df = fz - f_new;
    z = std::move(z_new);
    g = std::move(g_new);
    fz = f_new;
    if (sy > 1e-12) {
      Eigen::Map<Eigen::VectorXd> sv(s.data(), static_cast<Eigen::Index>(n));
      Eigen::Map<Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                           static_cast<Eigen::Index>(n));
      const Eigen::MatrixXd left = id - rho * sv * yv.transpose();
      hinv = left * hinv * left.transpose() + rho * sv * sv.transpose();
    }
    if (df <= 1e-14 * std::max(1.0, std::abs(fz))) {
      ++it;
      break;
    }
  }
  return {z, fz, it};
}

}  // namespace

BoxResult minimize_box(const ScaledObjective& objective, std::vector<double> z0,
                       const FitBudget& budget, std::uint64_t seed) {
  if (budget.hops < 0) throw Error(Errc::InvalidArgument, "hop budget must be >= 0");
  if (budget.max_evaluations < 1) throw Error(Errc::InvalidArgument, "evaluation budget must be >= 1");
  z0 = project_box(std::move(z0));
  CountingObjective f(objective, budget.max_evaluations);
  NormalSource rng(seed);

  BoxResult r;
  r.z = z0;
  r.loss = f(z0);
  r.initial_loss = r.loss;
  r.evaluations = f.count();
  if (z0.empty()) {
    r.trace.push_back({0, r.loss, r.loss, true, 0, f.count()});
    r.status = FitStatus::Converged;
    return r;
  }

  Vec cur = z0;
  double f_cur = r.loss;
  auto consider = [&](const Vec& z, double v) {
    if (v < r.loss) {
      r.loss = v;
      r.z = z;
    }
  };

  try {
    LocalResult lr = local_search(f, cur, f_cur, budget);
    r.iterations += lr.iterations;
    cur = lr.z;
    f_cur = lr.f;
    consider(cur, f_cur);
    r.trace.push_back({0, f_cur, f_cur, true, lr.iterations, f.count()});

    for (int hop = 1; hop <= budget.hops; ++hop) {
      if (reached(r.loss, budget)) break;
      Vec trial = cur;
      for (double& v : trial) v += budget.step_sigma * rng.normal();
      trial = project_box(std::move(trial));
      const double f_trial = f(trial);
      lr = local_search(f, trial, f_trial, budget);
      r.iterations += lr.iterations;
      r.hops = hop;
      consider(lr.z, lr.f);
      bool accept = lr.f < f_cur;
      const double u = rng.uniform();
      if (!accept && budget.temperature > 0.0) {
        accept = u < std::exp(-(lr.f - f_cur) / budget.temperature);
      }
      if (accept) {
        cur = lr.z;
        f_cur = lr.f;
      }
      r.trace.push_back({hop, lr.f, f_cur, accept, lr.iterations, f.count()});
    }
    r.status = reached(r.loss, budget) ? FitStatus::TargetReached : FitStatus::Converged;
  } catch (const BudgetHit&) {
    r.status = FitStatus::BudgetExhausted;
  }
  r.evaluations = f.count();
  return r;
}

FitResult fit_parameters(const std::vector<ErrorRatePoint>& data, const DeviceInputs& start,
                         const FitSpace& space, const FitBudget& budget, std::uint64_t seed,
                         const LossOptions& options) {
  space.validate();
  if (data.empty()) throw Error(Errc::InvalidArgument, "dataset is empty");
  DeviceInputs base = start;
  if (space.derives_delta()) base.delta.reset();

  std::vector<const FitParameter*> free;
  for (const auto& p : space.params) {
    if (!p.frozen) free.push_back(&p);
  }
  auto inputs_at = [&](const std::vector<double>& z) {
    DeviceInputs in = base;
    for (std::size_t k = 0; k < free.size(); ++k) set_parameter(in, free[k]->name, from_scaled(*free[k], z[k]));
    return in;
  };
  const ScaledObjective objective = [&](const std::vector<double>& z) {
    try {
      return loss(inputs_at(z), data, options);
    } catch (const Error&) {
      return kFailurePenalty * static_cast<double>(data.size());
    }
  };

  std::vector<double> z0;
  for (const auto* p : free) z0.push_back(to_scaled(*p, get_parameter(base, p->name)));
  const BoxResult box = minimize_box(objective, z0, budget, seed);

  FitResult out;
  out.best = inputs_at(box.z);
  out.loss = box.loss;
  out.initial_loss = box.initial_loss;
  out.trace = box.trace;
  out.evaluations = box.evaluations;
  out.hops = box.hops;
  out.iterations = box.iterations;
  out.status = box.status;
  try {
    out.breakdown = evaluate_loss(out.best, data, options);
  } catch (const Error&) {
    out.breakdown.loss = out.loss;
  }
  return out;
}

std::optional<double> fictitious_switch_time(const DeviceParams& params, double current, double c_f,
                                             double horizon, double dt) {
  const NormalizedDrive drive = normalize(params, current);
  TransientOptions opt;
  opt.start = start_well(drive);
  opt.stop_at_switch = true;
  const auto r = run_transient(params, DriveWaveform::constant(current, horizon), dt, 0,
                               TransientMode::fictitious(c_f), opt);
  return r.switch_time;
}

CfCalibration calibrate_cf(const DeviceParams& params, double wer_target, double current,
                           const CalibrationOptions& options) {
  if (!(options.lower < options.upper)) {
    throw Error(Errc::InvalidArgument, "c_f bracket needs lower < upper");
  }
  CfCalibration cal;
  cal.target = wer_target;
  cal.t_star = time_to_wer(params, current, wer_target, options.solver);
  const double t_star = cal.t_star;
  const double horizon = 10.0 * t_star;
  const double dt = options.dt > 0.0 ? options.dt : default_time_step(params);

  // Switching time, +inf when no crossing by the horizon.  Decreasing in c_f.
  auto t_sw = [&](double c) {
    ++cal.evaluations;
    const auto t = fictitious_switch_time(params, current, c, horizon, dt);
    return t ? *t : std::numeric_limits<double>::infinity();
  };
  auto fail = [&](const std::string& why) {
    std::ostringstream os;
    os << "WER " << wer_target << " at I = " << current << " A (t* = " << t_star << " s): " << why;
    return Error(Errc::CalibrationNoCross, os.str());
  };

  double lo = options.lower, hi = options.upper;
  double t_lo = t_sw(lo);
  double t_hi = t_sw(hi);
  const double width = options.upper - options.lower;
  if (t_lo <= t_star) {
    // Even the lower bracket end switches too early: expand downwards.
    int k = 0;
    for (; k < options.max_expansions && t_lo <= t_star; ++k) {
      hi = lo;
      t_hi = t_lo;
      lo = options.lower - width * std::ldexp(1.0, k) / 4.0;
      t_lo = t_sw(lo);
    }
    if (t_lo <= t_star) throw fail("no c_f down to " + std::to_string(lo) + " switches late enough");
  }
  if (t_hi > t_star) {
    int k = 0;
    for (; k < options.max_expansions && t_hi > t_star; ++k) {
      lo = hi;
      t_lo = t_hi;
      hi = options.upper + width * std::ldexp(1.0, k);
      t_hi = t_sw(hi);
    }
    if (t_hi > t_star) {
      throw fail("no c_f up to " + std::to_string(hi) + " switches by 10 t*");
    }
  }

  // Bisection: t_sw(lo) > t* >= t_sw(hi).
  double best_c = hi, best_t = t_hi;
  for (int it = 0; it < options.max_iterations; ++it) {
    if (std::abs(best_t - t_star) <= options.rel_tol * t_star) break;
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double tm = t_sw(mid);
    if (tm > t_star) {
      lo = mid;
      t_lo = tm;
    } else {
      hi = mid;
      t_hi = tm;
    }
    if (std::isfinite(tm) && std::abs(tm - t_star) < std::abs(best_t - t_star)) {
      best_c = mid;
      best_t = tm;
    }
  }
  if (!std::isfinite(best_t) || std::abs(best_t - t_star) > 10.0 * options.rel_tol * t_star) {
    throw fail("bisection did not converge");
  }
  cal.c_f = best_c;
  cal.t_switch = best_t;
  return cal;
}

}  // namespace mtjfp
