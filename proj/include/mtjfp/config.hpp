#pragma once

// Run configuration: one JSON document with the sections below, every key
// optional unless noted.  Unknown keys are rejected with their JSON path.
//
//   device    msat_a_per_m*, alpha*, hk_eff_a_per_m*, volume_m3 or
//             (diameter_m, thickness_m)*, delta, temp_k (300), pol_p (0.6),
//             eps_prime (0), m_p ([0,0,1])
//   drive     current_a or i (units of I_c), h_ext_z_a_per_m (0),
//             pulse_s or pulse_tau (10 tau_d)
//   solver    kind ("spectral"|"fvm"), cells (1024), grading
//             ("uniform-theta" default, "uniform-cos", "tanh"), order (200),
//             dtau (0 = policy), theta_weight (0.5), relax_s (0)
//   sweep     currents_a, pulses_s, read_currents_a, t_read_s, samples (100)
//   fit       seed (1), hops (50), max_evaluations, local_iterations (40),
//             target_loss (0), step_sigma (0.1), temperature (1.0),
//             weights ("uniform"|"inverse-time"), order, span (3),
//             free {name: {lower, upper, scale ("log"|"linear")}},
//             frozen [names]
//   sllgs     dt_s (0: precession-resolving default), walks (1000), seed (1)
//   calibrate targets ([0.5, 1e-6, 1e-8]), current_a or i, rel_tol (1e-3)
//   output    path ("-"), decimation (10)
//   jobs      worker threads for sweeps and ensembles (1)
//
// (* required by commands that need a device.)

#include "mtjfp/device.hpp"
#include "mtjfp/fit.hpp"
#include "mtjfp/stats.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mtjfp {

struct DriveConfig {
  std::optional<double> current_a;
  std::optional<double> i_norm;
  double h_ext_z = 0.0;
  std::optional<double> pulse_s;
  std::optional<double> pulse_tau;
};

struct SweepConfig {
  std::vector<double> currents_a;
  std::vector<double> pulses_s;
  std::vector<double> read_currents_a;
  std::vector<double> t_read_s;
  std::size_t samples = 100;
};

struct FitConfig {
  std::uint64_t seed = 1;
  FitBudget budget;
  WeightPreset weights = WeightPreset::Uniform;
  std::optional<int> order;
  double span = 3.0;
  std::vector<FitParameter> free;  // empty: defaults around the device
  std::vector<std::string> frozen;
};

struct SllgsConfig {
  double dt_s = 0.0;
  std::size_t walks = 1000;
  std::uint64_t seed = 1;
};

struct CalibrateConfig {
  std::vector<double> targets{0.5, 1e-6, 1e-8};
  std::optional<double> current_a;
  std::optional<double> i_norm;
  double rel_tol = 1e-3;
};

struct OutputConfig {
  std::string path = "-";
  std::size_t decimation = 10;
};

struct RunConfig {
  std::optional<DeviceInputs> device;
  DriveConfig drive;
  SolverSettings solver;
  SweepConfig sweep;
  FitConfig fit;
  SllgsConfig sllgs;
  CalibrateConfig calibrate;
  OutputConfig output;
  unsigned jobs = 1;

  /// Device parameters; throws Config "device: section missing" when absent.
  DeviceParams device_params() const;
  /// Drive current in amperes (from current_a or i); Config error if neither.
  double drive_current(const DeviceParams& params) const;
  /// Pulse length in seconds (pulse_s, pulse_tau * tau_d, or 10 tau_d).
  double pulse_length(const DeviceParams& params) const;
  FitSpace fit_space() const;
};

Grading parse_grading(const std::string& s);
const char* to_string(Grading g);

/// Parses a JSON document.  Throws Config with a JSON path on any problem.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

/// JSON object for the device section, suitable for parse_config.
std::string device_json(const DeviceInputs& in, int indent = 2);

}  // namespace mtjfp
