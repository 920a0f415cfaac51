#include "mtjfp/sllgs.hpp"

#include "mtjfp/error.hpp"
#include "mtjfp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mtjfp {

namespace {

struct Coefficients {
  double gp;
  double alpha;
  double hk;
  double k_stt;
  double eps_prime;
  Vec3 m_p;

  explicit Coefficients(const DeviceParams& p)
      : gp(gamma_prime(p)),
        alpha(p.alpha()),
        hk(p.h_k_eff()),
        k_stt(stt_prefactor(p)),
        eps_prime(p.eps_prime()),
        m_p(p.m_p()) {}
};

// h is every field except anisotropy (external + thermal/fictitious).
Vec3 rhs(const Coefficients& c, const Vec3& m, double current, const Vec3& h) {
  const Vec3 field = h + Vec3(0.0, 0.0, c.hk * m.z());
  const Vec3 m_x_h = m.cross(field);
  const double a_j = -c.k_stt * current;
  const double b_j = c.eps_prime * a_j;
  const Vec3 m_x_mp = m.cross(c.m_p);
  const Vec3 damping_like = -m.cross(m_x_mp);  // m x (m_p x m)
  return -c.gp * m_x_h - c.alpha * c.gp * m.cross(m_x_h) +
         c.gp * (a_j + c.alpha * b_j) * damping_like - c.gp * (b_j - c.alpha * a_j) * m_x_mp;
}

template <class ExtraField>
Vec3 heun(const Coefficients& c, const Vec3& m, const DriveSegment& seg, double dt,
          ExtraField&& extra, double t) {
  const Vec3 f0 = rhs(c, m, seg.current, seg.h_ext + extra(m));
  const Vec3 predicted = m + dt * f0;
  const Vec3 f1 = rhs(c, predicted, seg.current, seg.h_ext + extra(predicted));
  const Vec3 next = m + 0.5 * dt * (f0 + f1);
  if (!next.allFinite()) {
    std::ostringstream os;
    os << "magnetization diverged at t = " << t << " s";
    throw Error(Errc::NonFiniteState, os.str());
  }
  if ((next - m).norm() > 0.5) {
    std::ostringstream os;
    os << "|dm| = " << (next - m).norm() << " > 0.5 at t = " << t << " s with dt = " << dt
       << " s; reduce the time step";
    throw Error(Errc::StepRejected, os.str());
  }
  return next.normalized();
}

Vec3 azimuthal_unit(const Vec3& m) {
  const double rho = std::hypot(m.x(), m.y());
  if (rho < 1e-300) return Vec3::Zero();
  return Vec3(-m.y() / rho, m.x() / rho, 0.0);
}

double well_sign(Well w) { return w == Well::Parallel ? 1.0 : -1.0; }

}  // namespace

DriveWaveform::DriveWaveform(std::vector<DriveSegment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw Error(Errc::InvalidArgument, "waveform needs at least one segment");
  for (const auto& s : segments_) {
    if (!(s.duration > 0.0) || !std::isfinite(s.duration)) {
      throw Error(Errc::InvalidArgument, "waveform segment durations must be finite and > 0");
    }
    if (!std::isfinite(s.current) || !s.h_ext.allFinite()) {
      throw Error(Errc::InvalidArgument, "waveform segment values must be finite");
    }
    total_ += s.duration;
    ends_.push_back(total_);
  }
}

DriveWaveform DriveWaveform::constant(double current, double duration, const Vec3& h_ext) {
  return DriveWaveform({DriveSegment{current, h_ext, duration}});
}

const DriveSegment& DriveWaveform::at(double t) const {
  const auto it = std::upper_bound(ends_.begin(), ends_.end(), t);
  if (it == ends_.end()) return segments_.back();
  return segments_[static_cast<std::size_t>(it - ends_.begin())];
}

double seed_polar_angle(double delta) { return std::asin(std::sqrt(1.0 / (2.0 * delta))); }

double default_time_step(const DeviceParams& params) {
  // Heun's amplitude error on the precession, ~(w dt)^4 / 8 per step, acts
  // as anti-damping against alpha w dt; w dt = 0.025 keeps it below 0.03%
  // of the damping at alpha = 0.01.
  const double omega = gamma_prime(params) * params.h_k_eff();
  return std::min(1.0 / (params.alpha() * omega) / 1000.0, 0.025 / omega);
}

Vec3 effective_field(const Vec3& m, const DeviceParams& params, const Vec3& h_ext,
                     const Vec3& thermal) {
  return Vec3(0.0, 0.0, params.h_k_eff() * m.z()) + h_ext + thermal;
}

double thermal_sigma(const DeviceParams& params, double dt) {
  // kB T scaled so that the barrier seen by the walk is the stored delta.
  const double kt = PhysConstants::k_b * params.temperature() * params.delta_computed() / params.delta();
  return std::sqrt(2.0 * kt * params.alpha() /
                   (gamma_prime(params) * PhysConstants::mu0 * params.m_s() * params.volume() *
                    dt));
}

Vec3 thermal_field(const DeviceParams& params, double dt, const Vec3& gaussian3) {
  return thermal_sigma(params, dt) * gaussian3;
}

double fictitious_field_scale(const DeviceParams& params) {
  const double tau_d = 1.0 / (params.alpha() * gamma_prime(params) * params.h_k_eff());
  return thermal_sigma(params, tau_d);
}

Vec3 llgs_rhs(const Vec3& m, const DeviceParams& params, double current, const Vec3& h_ext,
              const Vec3& thermal) {
  return rhs(Coefficients(params), m, current, h_ext + thermal);
}

MagnetizationState step_heun(const MagnetizationState& state, const DeviceParams& params,
                             const DriveWaveform& drive, double dt, const Vec3& thermal) {
  if (!(dt > 0.0)) throw Error(Errc::InvalidArgument, "dt must be > 0");
  const Coefficients c(params);
  const auto& seg = drive.at(state.t + 0.5 * dt);
  const Vec3 m = heun(c, state.m, seg, dt, [&](const Vec3&) { return thermal; }, state.t);
  return {m, state.t + dt};
}

MagnetizationState step_heun(const MagnetizationState& state, const DeviceParams& params,
                             const DriveWaveform& drive, double dt, NormalSource& rng) {
  const Vec3 g(rng.normal(), rng.normal(), rng.normal());
  return step_heun(state, params, drive, dt, thermal_field(params, dt, g));
}

Vec3 sample_boltzmann_direction(double delta, Well well, NormalSource& rng) {
  // u = 1 - cos(theta) has density ~ exp(-delta u (2 - u)) on [0, 1]; propose
  // from the truncated exponential exp(-delta u), accept with exp(-delta u (1 - u)).
  const double span = -std::expm1(-delta);
  double u = 0.0;
  for (;;) {
    u = -std::log1p(-rng.uniform() * span) / delta;
    u = std::min(u, 1.0);
    if (rng.uniform() <= std::exp(-delta * u * (1.0 - u))) break;
  }
  const double sin_theta = std::sqrt(std::max(0.0, u * (2.0 - u)));
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  return Vec3(sin_theta * std::cos(phi), sin_theta * std::sin(phi), well_sign(well) * (1.0 - u));
}

TransientResult run_transient(const DeviceParams& params, const DriveWaveform& waveform,
                              double dt, std::uint64_t seed, const TransientMode& mode,
                              const TransientOptions& options) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(Errc::InvalidArgument, "dt must be > 0");
  const Coefficients c(params);
  NormalSource rng(seed);

  Vec3 m;
  if (options.initial_m) {
    m = options.initial_m->normalized();
  } else if (mode.kind == NoiseMode::Stochastic) {
    m = sample_boltzmann_direction(params.delta(), options.start, rng);
  } else {
    const double th = seed_polar_angle(params.delta());
    m = Vec3(std::sin(th), 0.0, well_sign(options.start) * std::cos(th));
  }
  const double start_sign =
      (options.initial_m && m.z() != 0.0) ? (m.z() > 0.0 ? 1.0 : -1.0) : well_sign(options.start);

  const double total = waveform.duration();
  const auto n_steps = static_cast<std::size_t>(std::ceil(total / dt - 1e-9));
  const double fict_amp = mode.kind == NoiseMode::Fictitious
                              ? mode.c_f * fictitious_field_scale(params) * start_sign
                              : 0.0;
  const double sigma_full = thermal_sigma(params, dt);

  TransientResult result;
  std::vector<double> samples = options.sample_times;
  std::sort(samples.begin(), samples.end());
  std::size_t next_sample = 0;
  while (next_sample < samples.size() && samples[next_sample] <= 0.0) {
    result.mz_samples.push_back(m.z());
    ++next_sample;
  }
  if (options.decimation > 0) result.trajectory.push_back({0.0, m});

  double t = 0.0;
  for (std::size_t n = 0; n < n_steps; ++n) {
    t = static_cast<double>(n) * dt;
    const double h = std::min(dt, total - t);
    const auto& seg = waveform.at(t + 0.5 * h);
    Vec3 next;
    if (mode.kind == NoiseMode::Stochastic) {
      const Vec3 g(rng.normal(), rng.normal(), rng.normal());
      const double sigma = h == dt ? sigma_full : thermal_sigma(params, h);
      const Vec3 th = sigma * g;
      next = heun(c, m, seg, h, [&](const Vec3&) { return th; }, t);
    } else if (mode.kind == NoiseMode::Fictitious && fict_amp != 0.0) {
      next = heun(c, m, seg, h, [&](const Vec3& v) { return Vec3(fict_amp * azimuthal_unit(v)); },
                  t);
    } else {
      next = heun(c, m, seg, h, [](const Vec3&) { return Vec3::Zero(); }, t);
    }
    const double t_end = t + h;
    if (!result.switch_time && start_sign * next.z() < 0.0) {
      const double frac = m.z() / (m.z() - next.z());
      result.switch_time = t + h * frac;
    }
    m = next;
    while (next_sample < samples.size() && samples[next_sample] <= t_end + 1e-9 * dt) {
      result.mz_samples.push_back(m.z());
      ++next_sample;
    }
    if (options.decimation > 0 && ((n + 1) % options.decimation == 0 || n + 1 == n_steps)) {
      result.trajectory.push_back({t_end, m});
    }
    t = t_end;
    if (options.stop_at_switch && result.switch_time) break;
  }
  while (next_sample < samples.size()) {
    result.mz_samples.push_back(m.z());
    ++next_sample;
  }
  if (options.decimation > 0 && result.trajectory.back().t != t) result.trajectory.push_back({t, m});
  result.final_state = {m, t};
  return result;
}

EnsembleResult run_ensemble(const DeviceParams& params, const DriveWaveform& waveform, double dt,
                            std::size_t n_walks, std::uint64_t base_seed,
                            const EnsembleOptions& options) {
  if (n_walks < 1) throw Error(Errc::InvalidArgument, "n_walks must be >= 1");
  EnsembleResult out;
  out.n_walks = n_walks;
  out.sample_times = options.sample_times;
  if (out.sample_times.empty()) out.sample_times.push_back(waveform.duration());
  std::sort(out.sample_times.begin(), out.sample_times.end());

  TransientOptions topt;
  topt.start = options.start;
  topt.sample_times = out.sample_times;

  std::vector<TransientResult> walks(n_walks);
  parallel_for(n_walks, options.jobs, [&](std::size_t k) {
    try {
      walks[k] = run_transient(params, waveform, dt, derive_seed(base_seed, k),
                               TransientMode::stochastic(), topt);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "walk " << k << ": " << e.detail();
      throw Error(e.code(), os.str());
    }
  });

  const double s0 = well_sign(options.start);
  const std::size_t ns = out.sample_times.size();
  std::vector<std::size_t> switched(ns, 0), passed(ns, 0);
  out.switch_times.reserve(n_walks);
  for (std::size_t k = 0; k < n_walks; ++k) {
    const auto& w = walks[k];
    for (std::size_t j = 0; j < ns; ++j) {
      if (s0 * w.mz_samples[j] < 0.0) ++switched[j];
      if (w.switch_time && *w.switch_time <= out.sample_times[j]) ++passed[j];
    }
    out.switch_times.push_back(w.switch_time);
  }
  const double n = static_cast<double>(n_walks);
  for (std::size_t j = 0; j < ns; ++j) {
    out.switched_fraction.push_back(static_cast<double>(switched[j]) / n);
    out.first_passage_fraction.push_back(static_cast<double>(passed[j]) / n);
    out.switched_ci.push_back(wilson_interval(switched[j], n_walks, options.confidence_z));
  }
  return out;
}

}  // namespace mtjfp
