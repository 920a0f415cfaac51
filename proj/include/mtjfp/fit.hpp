#pragma once

// Parameter regression against measured error-rate points and calibration
// of the fictitious thermal field coefficient c_f.
//
// The optimizer works in scaled coordinates z in [0, 1] per free parameter
// (linear or logarithmic map onto [lower, upper]).  The global phase is
// basin hopping: Gaussian jumps of width step_sigma in z, a local search
// from every jump, Metropolis acceptance at `temperature` on the loss.  The
// local phase is a projected BFGS with central-difference gradients.

#include "mtjfp/device.hpp"
#include "mtjfp/stats.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mtjfp {

enum class ParamScale { Linear, Log };

struct FitParameter {
  std::string name;  // deck key, e.g. "msat_a_per_m"
  double lower = 0.0;
  double upper = 1.0;
  ParamScale scale = ParamScale::Linear;
  bool frozen = false;
};

/// Keys accepted by get_parameter / set_parameter, in deck order.
const std::vector<std::string>& parameter_names();
double get_parameter(const DeviceInputs& in, const std::string& name);
void set_parameter(DeviceInputs& in, const std::string& name, double value);

struct FitSpace {
  std::vector<FitParameter> params;

  /// Free {msat, hk_eff, alpha, pol_p, volume} on log scales spanning a
  /// factor `span` around `center`; delta is derived.
  static FitSpace defaults(const DeviceInputs& center, double span = 3.0);

  std::size_t free_count() const;
  /// Throws InvalidArgument on bad bounds or unknown names.
  void validate() const;
  /// True when delta is derived from the physical parameters during the fit.
  bool derives_delta() const;
};

double to_scaled(const FitParameter& p, double value);
double from_scaled(const FitParameter& p, double z);

enum class WeightPreset { Uniform, InverseTime };

struct LossOptions {
  SolverSettings solver;
  std::vector<double> weights;  // empty: preset
  WeightPreset preset = WeightPreset::Uniform;
};

/// Per-point weights for a dataset (explicit weights win over the preset;
/// the inverse-time preset is normalized to mean 1).
std::vector<double> resolve_weights(const std::vector<ErrorRatePoint>& data,
                                    const LossOptions& options);

struct LossBreakdown {
  double loss = 0.0;
  /// log10(t_model / t_meas); unset where the target was not reached.
  std::vector<std::optional<double>> residuals;
  std::vector<std::optional<double>> model_times;
};

/// Sum of w_k (log10 t_model - log10 t_meas)^2 with t_model from
/// invert_wer.  Unreached targets add
/// (log10(t_max / t_meas))^2 + (log10 WER(t_max) - log10 target)^2 and
/// solver failures add a fixed penalty, so the result is always finite.
LossBreakdown evaluate_loss(const DeviceInputs& device, const std::vector<ErrorRatePoint>& data,
                            const LossOptions& options = {});
double loss(const DeviceInputs& device, const std::vector<ErrorRatePoint>& data,
            const LossOptions& options = {});

/// Added per point whose model cannot be evaluated at all.
inline constexpr double kFailurePenalty = 1.0e3;

struct FitBudget {
  int hops = 50;
  std::size_t max_evaluations = 100000;
  int local_iterations = 40;
  double target_loss = 0.0;  // stop once the best loss is <= this (0: off)
  double step_sigma = 0.1;
  double temperature = 1.0;
  double gradient_step = 1e-4;
};

enum class FitStatus { Converged, TargetReached, BudgetExhausted };
const char* to_string(FitStatus s);

struct TraceEntry {
  int hop = 0;  // 0 is the initial local search
  double loss = 0.0;
  double current_loss = 0.0;  // loss of the Markov chain state after this hop
  bool accepted = true;
  int local_iterations = 0;
  std::size_t evaluations = 0;  // cumulative
};

struct BoxResult {
  std::vector<double> z;
  double loss = 0.0;
  std::vector<TraceEntry> trace;
  std::size_t evaluations = 0;
  int hops = 0;
  int iterations = 0;
  FitStatus status = FitStatus::Converged;
  double initial_loss = 0.0;
};

using ScaledObjective = std::function<double(const std::vector<double>&)>;

/// Basin hopping over the unit box.
BoxResult minimize_box(const ScaledObjective& f, std::vector<double> z0, const FitBudget& budget,
                       std::uint64_t seed);

struct FitResult {
  DeviceInputs best;
  double loss = 0.0;
  double initial_loss = 0.0;
  LossBreakdown breakdown;
  std::vector<TraceEntry> trace;
  std::size_t evaluations = 0;
  int hops = 0;
  int iterations = 0;
  FitStatus status = FitStatus::Converged;

  bool improved() const { return loss < initial_loss; }
};

/// Fits the free parameters of `space`, starting from `start`.  Frozen
/// parameters keep their value in `start`.
FitResult fit_parameters(const std::vector<ErrorRatePoint>& data, const DeviceInputs& start,
                         const FitSpace& space, const FitBudget& budget, std::uint64_t seed,
                         const LossOptions& options = {});

struct CfCalibration {
  double target = 0.5;
  double c_f = 0.0;
  double t_star = 0.0;    // FPE pulse width reaching the target, s
  double t_switch = 0.0;  // fictitious-mode crossing time at c_f, s
  int evaluations = 0;
};

struct CalibrationOptions {
  SolverSettings solver;
  double dt = 0.0;  // 0: default_time_step
  double rel_tol = 1e-3;
  double lower = 0.0;
  double upper = 20.0;
  int max_expansions = 8;
  int max_iterations = 100;
};

/// Crossing time of the fictitious-mode transient with coefficient c_f,
/// unset when m_z has not crossed zero by `horizon`.
std::optional<double> fictitious_switch_time(const DeviceParams& params, double current, double c_f,
                                             double horizon, double dt);

/// c_f such that the fictitious-mode transient switches at the pulse width
/// where the FPE WER reaches `wer_target`.
CfCalibration calibrate_cf(const DeviceParams& params, double wer_target, double current,
                           const CalibrationOptions& options = {});

}  // namespace mtjfp
