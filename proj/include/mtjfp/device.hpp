#pragma once

// Physical MTJ description and the normalization layer between lab units
// (A, s, A/m) and the dimensionless Fokker-Planck quantities (i, h, tau).
//
// Spin-transfer torque convention
// -------------------------------
// The Slonczewski prefactor of the LLGS equation is written per ampere:
//
//     a_J = beta * eps = -k * I,      k = hbar * P / (2 * q * mu0 * Ms * V)   [A/m per A]
//
// and the field-like prefactor is b_J = beta * eps' = eps_prime * a_J.  The
// minus sign makes a positive current push the free layer away from m_p, so
// with the default m_p = +z a positive current writes theta: 0 -> pi.  After
// the implicit Gilbert term is folded into gamma' the damping-like
// coefficient becomes a_J * (1 + alpha * eps_prime), hence
//
//     I_c = alpha * Hk_eff / (k * (1 + alpha * eps_prime)),
//     i   = (I / I_c) * m_p.z,
//     h   = H_ext_z / Hk_eff,
//     tau_d = 1 / (alpha * gamma' * Hk_eff).
//
// k may be overridden with an explicit value (stt_per_amp).

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace mtjfp {

using Vec3 = Eigen::Vector3d;

/// Energy well a distribution or walk starts in: parallel is theta < pi/2
/// (m_z > 0), antiparallel is theta > pi/2.
enum class Well { Parallel, Antiparallel };

struct PhysConstants {
  static constexpr double gamma = 1.760859644e11;  // rad s^-1 T^-1
  static constexpr double mu0 = 4.0e-7 * std::numbers::pi;
  static constexpr double k_b = 1.380649e-23;
  static constexpr double hbar = 1.054571817e-34;
  static constexpr double q_e = 1.602176634e-19;
};

/// Raw, unvalidated device description as it arrives from a config file,
/// a deck or the optimizer.
struct DeviceInputs {
  double m_s = 0.0;        // A/m
  double volume = 0.0;     // m^3
  double alpha = 0.0;
  double h_k_eff = 0.0;    // A/m
  std::optional<double> delta;
  double temperature = 300.0;  // K
  double polarization = 0.6;
  double eps_prime = 0.0;
  Vec3 m_p = Vec3::UnitZ();
  std::optional<double> stt_per_amp;  // A/m per A, overrides the hbar*P formula
};

/// Validated, immutable device parameters.
class DeviceParams {
 public:
  explicit DeviceParams(const DeviceInputs& in);

  double m_s() const { return in_.m_s; }
  double volume() const { return in_.volume; }
  double alpha() const { return in_.alpha; }
  double h_k_eff() const { return in_.h_k_eff; }
  double temperature() const { return in_.temperature; }
  double polarization() const { return in_.polarization; }
  double eps_prime() const { return in_.eps_prime; }
  const Vec3& m_p() const { return in_.m_p; }

  /// Effective thermal stability factor: the supplied value if any,
  /// otherwise the energy-barrier formula.
  double delta() const { return delta_; }
  double delta_computed() const { return delta_computed_; }
  bool delta_supplied() const { return in_.delta.has_value(); }

  const DeviceInputs& inputs() const { return in_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  DeviceInputs in_;
  double delta_ = 0.0;
  double delta_computed_ = 0.0;
  std::vector<std::string> warnings_;
};

/// mu0 * Ms * Hk * V / (2 kB T)
double barrier_delta(double m_s, double h_k_eff, double volume, double temperature);

/// gamma * mu0 / (1 + alpha^2), in m A^-1 s^-1.
double gamma_prime(const DeviceParams& params);

/// Per-ampere Slonczewski prefactor k (A/m per A).
double stt_prefactor(const DeviceParams& params);

struct NormalizedDrive {
  double i = 0.0;
  double h = 0.0;
  double delta = 1.0;
  double i_c = 1.0;    // A
  double tau_d = 1.0;  // s
};

NormalizedDrive normalize(const DeviceParams& params, double current, double h_ext_z,
                          double stt_per_amp);
NormalizedDrive normalize(const DeviceParams& params, double current, double h_ext_z = 0.0);

inline double time_to_tau(double t, const NormalizedDrive& drive) { return t / drive.tau_d; }
inline double tau_to_time(double tau, const NormalizedDrive& drive) { return tau * drive.tau_d; }

/// The device used throughout the solver comparison: Hk_eff = 177415 A/m,
/// Delta = 63, alpha = 0.01, Ms = 1.2e6 A/m on a 50 nm x 50 nm x 1 nm
/// elliptic cylinder at 300 K.
DeviceInputs reference_device_inputs();

}  // namespace mtjfp
