#include "mtjfp/device.hpp"

#include "mtjfp/error.hpp"

#include <cmath>
#include <sstream>

namespace mtjfp {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ZeroCriticalCurrent: return "ZeroCriticalCurrent";
    case Errc::StepRejected: return "StepRejected";
    case Errc::NonFiniteState: return "NonFiniteState";
    case Errc::BadGrading: return "BadGrading";
    case Errc::PoleEvaluation: return "PoleEvaluation";
    case Errc::SolverSingular: return "SolverSingular";
    case Errc::NegativeMass: return "NegativeMass";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::ExpmFailure: return "ExpmFailure";
    case Errc::SolverDiverged: return "SolverDiverged";
    case Errc::NoBracket: return "NoBracket";
    case Errc::InsufficientWalks: return "InsufficientWalks";
    case Errc::BudgetExhausted: return "BudgetExhausted";
    case Errc::CalibrationNoCross: return "CalibrationNoCross";
    case Errc::IncompleteCalibration: return "IncompleteCalibration";
    case Errc::Config: return "ConfigError";
  }
  return "Unknown";
}

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << name << " must be finite and > 0 (got " << v << ")";
    throw Error(Errc::InvalidArgument, os.str());
  }
}

}  // namespace

double barrier_delta(double m_s, double h_k_eff, double volume, double temperature) {
  return PhysConstants::mu0 * m_s * h_k_eff * volume / (2.0 * PhysConstants::k_b * temperature);
}

DeviceParams::DeviceParams(const DeviceInputs& in) : in_(in) {
  require_positive(in.m_s, "m_s");
  require_positive(in.volume, "volume");
  require_positive(in.alpha, "alpha");
  require_positive(in.h_k_eff, "h_k_eff");
  require_positive(in.temperature, "temperature");
  if (!(in.polarization > 0.0 && in.polarization <= 1.0)) {
    throw Error(Errc::InvalidArgument, "polarization must lie in (0, 1]");
  }
  if (!std::isfinite(in.eps_prime)) {
    throw Error(Errc::InvalidArgument, "eps_prime must be finite");
  }
  if (!in.m_p.allFinite() || std::abs(in.m_p.norm() - 1.0) > 1e-12) {
    throw Error(Errc::InvalidArgument, "m_p must be a unit vector (|m_p| - 1 within 1e-12)");
  }
  if (in.stt_per_amp) require_positive(*in.stt_per_amp, "stt_per_amp");

  delta_computed_ = barrier_delta(in.m_s, in.h_k_eff, in.volume, in.temperature);
  if (in.delta) {
    require_positive(*in.delta, "delta");
    delta_ = *in.delta;
    const double rel = std::abs(delta_ - delta_computed_) / delta_computed_;
    if (rel > 0.2) {
      std::ostringstream os;
      os << "supplied delta " << delta_ << " deviates " << rel * 100.0
         << "% from mu0*Ms*Hk*V/(2kT) = " << delta_computed_;
      warnings_.push_back(os.str());
    }
  } else {
    delta_ = delta_computed_;
  }
}

double gamma_prime(const DeviceParams& params) {
  const double a = params.alpha();
  return PhysConstants::gamma * PhysConstants::mu0 / (1.0 + a * a);
}

double stt_prefactor(const DeviceParams& params) {
  if (params.inputs().stt_per_amp) return *params.inputs().stt_per_amp;
  return PhysConstants::hbar * params.polarization() /
         (2.0 * PhysConstants::q_e * PhysConstants::mu0 * params.m_s() * params.volume());
}

NormalizedDrive normalize(const DeviceParams& params, double current, double h_ext_z,
                          double stt_per_amp) {
  const double damping_like = stt_per_amp * (1.0 + params.alpha() * params.eps_prime());
  const double i_c = params.alpha() * params.h_k_eff() / damping_like;
  if (!(std::abs(damping_like) > 0.0) || !std::isfinite(i_c) || i_c <= 0.0) {
    std::ostringstream os;
    os << "critical current undefined: alpha=" << params.alpha() << " Hk=" << params.h_k_eff()
       << " stt_per_amp=" << stt_per_amp << " eps_prime=" << params.eps_prime();
    throw Error(Errc::ZeroCriticalCurrent, os.str());
  }
  NormalizedDrive d;
  d.i_c = i_c;
  d.i = current / i_c * params.m_p().z();
  d.h = h_ext_z / params.h_k_eff();
  d.delta = params.delta();
  d.tau_d = 1.0 / (params.alpha() * gamma_prime(params) * params.h_k_eff());
  return d;
}

NormalizedDrive normalize(const DeviceParams& params, double current, double h_ext_z) {
  return normalize(params, current, h_ext_z, stt_prefactor(params));
}

DeviceInputs reference_device_inputs() {
  DeviceInputs in;
  in.m_s = 1.2e6;
  in.h_k_eff = 177415.0;
  in.alpha = 0.01;
  in.delta = 63.0;
  in.volume = std::numbers::pi / 4.0 * 50e-9 * 50e-9 * 1.0e-9;
  in.temperature = 300.0;
  in.polarization = 0.6;
  in.eps_prime = 0.0;
  return in;
}

}  // namespace mtjfp
