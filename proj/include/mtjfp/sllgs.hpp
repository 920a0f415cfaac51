#pragma once

// Stochastic macrospin integrator.
//
// The implicit Gilbert form is solved for dm/dt.  With a_J = beta*eps and
// b_J = beta*eps' (see device.hpp for their per-ampere definition) the
// explicit right-hand side is
//
//   dm/dt = -g' m x H - alpha g' m x (m x H)
//           + g' (a_J + alpha b_J) m x (m_p x m)
//           - g' (b_J - alpha a_J) m x m_p
//
// where g' = gamma mu0 / (1 + alpha^2).  The alpha-weighted cross terms are
// the images of the two spin torques under the Gilbert -> Landau-Lifshitz
// inversion.  With m_p = +z and no in-plane field this reduces on the polar
// angle to d(theta)/d(tau) = sin(theta) (i - h - cos(theta)), the drift of
// the Fokker-Planck solvers.
//
// Thermal field per component: N(0,1) * sqrt(2 kB T alpha / (g' mu0 Ms V dt)).
// When delta is supplied, kB T is replaced by mu0 Ms Hk V / (2 delta) so the
// walk equilibrates to the same barrier as the Fokker-Planck solvers.

#include "mtjfp/binomial.hpp"
#include "mtjfp/device.hpp"
#include "mtjfp/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mtjfp {

struct MagnetizationState {
  Vec3 m = Vec3::UnitZ();
  double t = 0.0;  // s
};

struct DriveSegment {
  double current = 0.0;  // A
  Vec3 h_ext = Vec3::Zero();  // A/m
  double duration = 0.0;  // s
};

/// Piecewise-constant drive.
class DriveWaveform {
 public:
  explicit DriveWaveform(std::vector<DriveSegment> segments);
  static DriveWaveform constant(double current, double duration, const Vec3& h_ext = Vec3::Zero());

  /// Segment active at time t; times past the end map to the last segment.
  const DriveSegment& at(double t) const;
  double duration() const { return total_; }
  const std::vector<DriveSegment>& segments() const { return segments_; }

 private:
  std::vector<DriveSegment> segments_;
  std::vector<double> ends_;
  double total_ = 0.0;
};

enum class NoiseMode { Stochastic, Fictitious, Deterministic };

struct TransientMode {
  NoiseMode kind = NoiseMode::Stochastic;
  double c_f = 0.0;

  static TransientMode stochastic() { return {NoiseMode::Stochastic, 0.0}; }
  static TransientMode deterministic() { return {NoiseMode::Deterministic, 0.0}; }
  static TransientMode fictitious(double c_f) { return {NoiseMode::Fictitious, c_f}; }
};

struct TrajectorySample {
  double t = 0.0;
  Vec3 m = Vec3::Zero();
};

struct TransientOptions {
  /// Starting magnetization; unset draws from the Boltzmann well (stochastic
  /// mode) or uses the tilted seed angle (other modes).
  std::optional<Vec3> initial_m;
  Well start = Well::Parallel;
  /// Keep every k-th step in the trajectory (0: keep none).  The initial
  /// and final states are always included when k > 0.
  std::size_t decimation = 0;
  /// Stop integrating at the first m_z = 0 crossing.
  bool stop_at_switch = false;
  /// Times at which m_z is recorded into TransientResult::mz_samples.
  std::vector<double> sample_times;
};

struct TransientResult {
  std::vector<TrajectorySample> trajectory;
  std::optional<double> switch_time;
  MagnetizationState final_state;
  std::vector<double> mz_samples;
};

/// Polar angle of the on-axis seed for deterministic and fictitious runs:
/// arcsin(sqrt(1 / (2 Delta))).
double seed_polar_angle(double delta);

/// Default integrator step: min(tau_d / 1000, 0.025 / (g' Hk)), i.e.
/// tau_d / 4000 at alpha = 0.01.
double default_time_step(const DeviceParams& params);

Vec3 effective_field(const Vec3& m, const DeviceParams& params, const Vec3& h_ext,
                     const Vec3& thermal);

/// Standard deviation (A/m) of one thermal-field component for step dt.
double thermal_sigma(const DeviceParams& params, double dt);
Vec3 thermal_field(const DeviceParams& params, double dt, const Vec3& gaussian3);

/// Amplitude of the fictitious azimuthal field per unit c_f.  The time
/// step entering the thermal radical is fixed to tau_d so that calibrated
/// c_f values do not depend on the integrator step.
double fictitious_field_scale(const DeviceParams& params);

Vec3 llgs_rhs(const Vec3& m, const DeviceParams& params, double current, const Vec3& h_ext,
              const Vec3& thermal);

/// One stochastic Heun step; the thermal sample is held fixed across
/// predictor and corrector.  Throws StepRejected if |dm| > 0.5.
MagnetizationState step_heun(const MagnetizationState& state, const DeviceParams& params,
                             const DriveWaveform& drive, double dt, const Vec3& thermal);
MagnetizationState step_heun(const MagnetizationState& state, const DeviceParams& params,
                             const DriveWaveform& drive, double dt, NormalSource& rng);

/// Draw a unit vector from exp(-Delta sin^2 theta) restricted to `well`,
/// uniform azimuth.
Vec3 sample_boltzmann_direction(double delta, Well well, NormalSource& rng);

TransientResult run_transient(const DeviceParams& params, const DriveWaveform& waveform,
                              double dt, std::uint64_t seed, const TransientMode& mode,
                              const TransientOptions& options = {});

struct EnsembleOptions {
  std::vector<double> sample_times;  // defaults to the waveform end
  Well start = Well::Parallel;
  unsigned jobs = 0;
  double confidence_z = kZ99;
};

struct EnsembleResult {
  std::size_t n_walks = 0;
  std::vector<double> sample_times;
  /// Fraction of walks sitting in the opposite hemisphere at each time.
  std::vector<double> switched_fraction;
  std::vector<BinomialInterval> switched_ci;
  /// Fraction of walks whose first m_z = 0 crossing happened by each time.
  std::vector<double> first_passage_fraction;
  std::vector<std::optional<double>> switch_times;  // per walk, walk-index order
};

/// n_walks independent stochastic transients with seeds derive_seed(base_seed, k).
EnsembleResult run_ensemble(const DeviceParams& params, const DriveWaveform& waveform, double dt,
                            std::size_t n_walks, std::uint64_t base_seed,
                            const EnsembleOptions& options = {});

}  // namespace mtjfp
