#pragma once

// Error-rate layer on top of the two Fokker-Planck solvers.
//
// A write starts in the Boltzmann well the current pushes away from.  WER
// is the probability still in that hemisphere when the pulse ends; RER is
// the probability that left it during a read pulse.  With identical drive
// and pulse the two are complements, RER = 1 - WER.

#include "mtjfp/binomial.hpp"
#include "mtjfp/device.hpp"
#include "mtjfp/fvm.hpp"
#include "mtjfp/spectral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mtjfp {

enum class SolverKind { Fvm, Spectral, MonteCarlo, Measured };
enum class RateKind { Wer, Rer };

const char* to_string(SolverKind kind);
const char* to_string(RateKind kind);
SolverKind parse_solver_kind(const std::string& s);
RateKind parse_rate_kind(const std::string& s);

struct SolverSettings {
  SolverKind kind = SolverKind::Spectral;
  std::size_t cells = 1024;
  Grading grading = Grading::UniformTheta;
  int order = kDefaultLegendreOrder;
  double dtau = 0.0;  // FVM only; 0 selects the default policy
  double theta_weight = 0.5;
  /// Zero-current relaxation appended after the pulse before the rate is
  /// read out (seconds, 0 = none).
  double relax_time = 0.0;
  unsigned jobs = 1;
};

struct ErrorRatePoint {
  double current = 0.0;      // A
  double pulse_width = 0.0;  // s
  double temperature = 300.0;
  double rate = 0.5;
  RateKind kind = RateKind::Wer;
  SolverKind source = SolverKind::Measured;
};

struct ErrorRateCurve {
  RateKind kind = RateKind::Wer;
  SolverKind solver = SolverKind::Spectral;
  std::string device_id;
  std::vector<ErrorRatePoint> points;
};

/// Well a current of this sign writes away from (parallel for i >= 0).
Well start_well(const NormalizedDrive& drive);

/// Normalized Boltzmann density exp(-Delta sin^2 theta) on one hemisphere,
/// as a function of x = cos(theta).
double boltzmann_density(double x, double delta, Well well);

GridDistribution boltzmann_grid(const ThetaMesh& mesh, double delta, Well well);
LegendreState boltzmann_legendre(double delta, Well well, int order);

/// Mass on the hemisphere of `well`.
double well_mass(const GridDistribution& dist, Well well);
double well_mass(const LegendreState& state, Well well);

/// Rates are kept inside the open interval (0, 1).
double clamp_rate(double r);

/// WER at each pulse width for one current (monotone non-increasing).
ErrorRateCurve wer_curve(const DeviceParams& params, double current,
                         const std::vector<double>& pulse_widths,
                         const SolverSettings& settings = {});

/// RER at each read current for a fixed read pulse.
ErrorRateCurve rer_curve(const DeviceParams& params, const std::vector<double>& read_currents,
                         double t_read, const SolverSettings& settings = {});

struct SwitchingSeries {
  std::vector<double> taus;
  /// Probability outside the starting well at each tau.
  std::vector<double> switched;
  std::optional<GridDistribution> final_grid;   // FVM runs
  std::optional<LegendreState> final_state;     // spectral runs
  std::optional<std::string> warning;
  std::size_t steps = 0;
};

/// Switched fraction at ascending sample taus for one drive, starting from
/// the Boltzmann well the drive writes away from.
SwitchingSeries switching_series(const DeviceParams& params, const NormalizedDrive& drive,
                                 const std::vector<double>& taus, const SolverSettings& settings);

/// Upper end of the time_to_wer search, in units of tau_d.
inline constexpr double kMaxSearchTau = 1000.0;

struct WerInversion {
  /// Pulse width reaching each target, unset when the target is not reached
  /// by kMaxSearchTau * tau_d.
  std::vector<std::optional<double>> times;
  double t_max = 0.0;
  double wer_at_t_max = 1.0;
};

/// Pulse widths at which WER falls to each target (one solver march).
WerInversion invert_wer(const DeviceParams& params, double current,
                        const std::vector<double>& targets, const SolverSettings& settings = {});

/// Single-target form; throws NoBracket when the target is not reached.
double time_to_wer(const DeviceParams& params, double current, double target,
                   const SolverSettings& settings = {});

struct McValidation {
  std::size_t n_walks = 0;
  double empirical = 0.0;
  BinomialInterval ci;
  double fpe_rate = 0.0;
  bool agree = false;
};

/// Smallest walk count with n * rate >= 5.
std::size_t min_walks(double rate);

/// Empirical WER of an s-LLGS ensemble against the Fokker-Planck WER.
/// Throws InsufficientWalks when n_walks * WER_fpe < 5.
McValidation mc_validate(const DeviceParams& params, double current, double pulse_width,
                         std::size_t n_walks, std::uint64_t seed,
                         const SolverSettings& settings = {}, double dt = 0.0);

}  // namespace mtjfp
