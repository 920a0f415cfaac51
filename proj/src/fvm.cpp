#include "mtjfp/fvm.hpp"

#include "mtjfp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

namespace mtjfp {

namespace {

constexpr double kPi = std::numbers::pi;

// Integral of U_eff / D over [a, b] for drift coefficient (i - h).
double integrated_peclet(double a, double b, double drift, double delta) {
  const double sa = std::sin(a), sb = std::sin(b);
  const double advect = drift * (std::cos(a) - std::cos(b)) - 0.5 * (sb * sb - sa * sa);
  return 2.0 * delta * advect + std::log(sb / sa);
}

}  // namespace

ThetaMesh::ThetaMesh(std::vector<double> faces, Grading grading)
    : faces_(std::move(faces)), grading_(grading) {
  if (faces_.size() < 3) throw Error(Errc::BadGrading, "mesh needs at least 2 cells");
  if (faces_.front() != 0.0 || faces_.back() != kPi) {
    throw Error(Errc::BadGrading, "first face must be 0 and last face pi");
  }
  for (std::size_t k = 1; k < faces_.size(); ++k) {
    if (!(faces_[k] > faces_[k - 1])) {
      throw Error(Errc::BadGrading, "faces must increase strictly");
    }
    centers_.push_back(0.5 * (faces_[k] + faces_[k - 1]));
    widths_.push_back(faces_[k] - faces_[k - 1]);
  }
}

double ThetaMesh::min_width() const { return *std::min_element(widths_.begin(), widths_.end()); }

ThetaMesh build_mesh(std::size_t cells, Grading grading) {
  if (cells < 2) {
    std::ostringstream os;
    os << "cell count " << cells << " too small (need >= 2)";
    throw Error(Errc::BadGrading, os.str());
  }
  const double m = static_cast<double>(cells);
  std::vector<double> faces(cells + 1);
  for (std::size_t k = 0; k <= cells; ++k) {
    const double s = static_cast<double>(k) / m;
    switch (grading) {
      case Grading::UniformTheta:
        faces[k] = kPi * s;
        break;
      case Grading::UniformCos:
        faces[k] = std::acos(std::clamp(1.0 - 2.0 * s, -1.0, 1.0));
        break;
      case Grading::TanhRefined:
        faces[k] = 0.5 * kPi *
                   (1.0 + std::tanh(kTanhRefinement * (2.0 * s - 1.0)) / std::tanh(kTanhRefinement));
        break;
    }
  }
  faces.front() = 0.0;
  faces.back() = kPi;
  if (cells % 2 == 0) faces[cells / 2] = 0.5 * kPi;
  return ThetaMesh(std::move(faces), grading);
}

double GridDistribution::total_mass() const {
  double s = 0.0;
  for (double v : p) s += v;
  return s;
}

double GridDistribution::switched_fraction() const {
  double s = 0.0;
  const auto& c = mesh.centers();
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (c[k] > 0.5 * kPi) {
      s += p[k];
    } else if (c[k] == 0.5 * kPi) {
      s += 0.5 * p[k];
    }
  }
  return s;
}

DriftDiffusion drift_diffusion(double theta, double i, double h, double delta) {
  if (!(theta > 0.0 && theta < kPi)) {
    std::ostringstream os;
    os << "U_eff is singular at theta = " << theta;
    throw Error(Errc::PoleEvaluation, os.str());
  }
  const double d = 1.0 / (2.0 * delta);
  const double v = std::sin(theta) * (i - h - std::cos(theta));
  return {v + d * std::cos(theta) / std::sin(theta), d};
}

double bernoulli(double z) {
  if (std::abs(z) < 1e-4) {
    const double z2 = z * z;
    return 1.0 - 0.5 * z + z2 / 12.0 - z2 * z2 / 720.0;
  }
  return z / std::expm1(z);
}

std::vector<double> FvmOperator::apply(const std::vector<double>& p) const {
  const std::size_t m = size();
  std::vector<double> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    double v = diag[k] * p[k];
    if (k > 0) v += lower[k] * p[k - 1];
    if (k + 1 < m) v += upper[k] * p[k + 1];
    out[k] = v;
  }
  return out;
}

std::vector<double> FvmOperator::column_sums() const {
  const std::size_t m = size();
  std::vector<double> s(m);
  for (std::size_t k = 0; k < m; ++k) {
    double v = diag[k];
    if (k > 0) v += upper[k - 1];
    if (k + 1 < m) v += lower[k + 1];
    s[k] = v;
  }
  return s;
}

double FvmOperator::positivity_bound(double theta_weight) const {
  double worst = 0.0;
  for (double d : diag) worst = std::max(worst, -d);
  const double explicit_part = 1.0 - theta_weight;
  if (worst == 0.0 || explicit_part <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (explicit_part * worst);
}

FvmOperator assemble(const ThetaMesh& mesh, const NormalizedDrive& drive) {
  if (!(drive.delta > 0.0)) throw Error(Errc::InvalidArgument, "delta must be > 0");
  const std::size_t m = mesh.size();
  const auto& c = mesh.centers();
  const auto& w = mesh.widths();
  const double d = 1.0 / (2.0 * drive.delta);
  const double drift = drive.i - drive.h;

  FvmOperator op;
  op.lower.assign(m, 0.0);
  op.diag.assign(m, 0.0);
  op.upper.assign(m, 0.0);
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const double dx = c[k + 1] - c[k];
    const double pe = integrated_peclet(c[k], c[k + 1], drift, drive.delta);
    const double g = d / dx;
    const double from_left = g * bernoulli(-pe) / w[k];
    const double from_right = g * bernoulli(pe) / w[k + 1];
    op.diag[k] -= from_left;
    op.lower[k + 1] += from_left;
    op.upper[k] += from_right;
    op.diag[k + 1] -= from_right;
  }
  return op;
}

std::vector<double> stationary_masses(const FvmOperator& op) {
  const std::size_t m = op.size();
  std::vector<double> logp(m, 0.0);
  for (std::size_t k = 0; k + 1 < m; ++k) {
    logp[k + 1] = logp[k] + std::log(op.lower[k + 1]) - std::log(op.upper[k]);
  }
  const double top = *std::max_element(logp.begin(), logp.end());
  std::vector<double> p(m);
  double s = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    p[k] = std::exp(logp[k] - top);
    s += p[k];
  }
  for (double& v : p) v /= s;
  return p;
}

CnStepper::CnStepper(const FvmOperator& op, double dtau, double theta_weight)
    : op_(&op), dtau_(dtau), w_(theta_weight) {
  if (!(dtau != 0.0) || !std::isfinite(dtau)) {
    throw Error(Errc::InvalidArgument, "dtau must be finite and nonzero");
  }
  if (!(theta_weight >= 0.5 && theta_weight <= 1.0)) {
    throw Error(Errc::InvalidArgument, "theta weight must lie in [0.5, 1]");
  }
  const std::size_t m = op.size();
  c_prime_.assign(m, 0.0);
  denom_.assign(m, 0.0);
  const double s = w_ * dtau_;
  double prev_c = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double a = k > 0 ? -s * op.lower[k] : 0.0;
    const double b = 1.0 - s * op.diag[k];
    const double cc = k + 1 < m ? -s * op.upper[k] : 0.0;
    const double den = b - a * prev_c;
    if (!std::isfinite(den) || std::abs(den) < 1e-300) {
      std::ostringstream os;
      os << "zero pivot in tridiagonal solve at row " << k << " (dtau = " << dtau
         << ", cells = " << m << ")";
      throw Error(Errc::SolverSingular, os.str());
    }
    denom_[k] = den;
    c_prime_[k] = cc / den;
    prev_c = c_prime_[k];
  }
}

void CnStepper::step(std::vector<double>& p) const {
  const auto& op = *op_;
  const std::size_t m = op.size();
  const double e = (1.0 - w_) * dtau_;
  const double s = w_ * dtau_;
  std::vector<double> d(m);
  for (std::size_t k = 0; k < m; ++k) {
    double v = (1.0 + e * op.diag[k]) * p[k];
    if (k > 0) v += e * op.lower[k] * p[k - 1];
    if (k + 1 < m) v += e * op.upper[k] * p[k + 1];
    d[k] = v;
  }
  double prev = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double a = k > 0 ? -s * op.lower[k] : 0.0;
    prev = (d[k] - a * prev) / denom_[k];
    d[k] = prev;
  }
  p[m - 1] = d[m - 1];
  for (std::size_t k = m - 1; k-- > 0;) p[k] = d[k] - c_prime_[k] * p[k + 1];
}

void clip_negative(std::vector<double>& p, double tau) {
  double lowest = 0.0;
  for (double v : p) lowest = std::min(lowest, v);
  if (lowest >= 0.0) return;
  if (lowest < -1e-12) {
    std::ostringstream os;
    os << "cell mass " << lowest << " below -1e-12 at tau = " << tau
       << "; reduce dtau below the positivity bound";
    throw Error(Errc::NegativeMass, os.str());
  }
  double s = 0.0;
  for (double& v : p) {
    if (v < 0.0) v = 0.0;
    s += v;
  }
  for (double& v : p) v /= s;
}

GridDistribution step_cn(const GridDistribution& dist, const FvmOperator& op, double dtau,
                         double theta_weight) {
  if (op.size() != dist.p.size()) throw Error(Errc::InvalidArgument, "operator/mesh size mismatch");
  GridDistribution out = dist;
  CnStepper(op, dtau, theta_weight).step(out.p);
  out.tau += dtau;
  clip_negative(out.p, out.tau);
  return out;
}

double default_dtau(const ThetaMesh& mesh, const NormalizedDrive& drive) {
  double u_max = 0.0;
  const auto& f = mesh.faces();
  for (std::size_t k = 1; k + 1 < f.size(); ++k) {
    u_max = std::max(u_max, std::abs(drift_diffusion(f[k], drive.i, drive.h, drive.delta).u_eff));
  }
  if (u_max == 0.0) return 0.1;
  return std::min(0.1, 0.25 * mesh.min_width() / u_max);
}

FvmEvolveResult evolve(const GridDistribution& rho0, const std::vector<FvmSegment>& schedule,
                       const FvmEvolveOptions& options) {
  FvmEvolveResult res{rho0, {}, {}, 0};
  GridDistribution& cur = res.final;

  std::vector<double> samples = options.sample_taus;
  std::sort(samples.begin(), samples.end());
  std::size_t next_sample = 0;
  auto record = [&](double upto) {
    while (next_sample < samples.size() && samples[next_sample] <= upto) {
      res.samples.push_back({samples[next_sample], cur.switched_fraction()});
      if (options.keep_snapshots) res.snapshots.push_back(cur);
      ++next_sample;
    }
  };
  // Samples before the start are reported on the initial state.
  record(cur.tau + 1e-12 * std::max(1.0, std::abs(cur.tau)));

  for (const auto& seg : schedule) {
    if (!(seg.duration_tau > 0.0) || !std::isfinite(seg.duration_tau)) {
      throw Error(Errc::InvalidArgument, "schedule durations must be finite and > 0");
    }
    const FvmOperator op = assemble(cur.mesh, seg.drive);
    const double target = options.dtau > 0.0 ? options.dtau : default_dtau(cur.mesh, seg.drive);
    const double t_begin = cur.tau;
    const double t_end = t_begin + seg.duration_tau;

    std::vector<double> events;
    for (std::size_t k = next_sample; k < samples.size() && samples[k] < t_end; ++k) {
      if (samples[k] > t_begin) events.push_back(samples[k]);
    }
    events.push_back(t_end);

    double last_step = -1.0;
    std::optional<CnStepper> stepper;
    double t = t_begin;
    for (double ev : events) {
      const double len = ev - t;
      if (len <= 0.0) {
        record(ev);
        continue;
      }
      const auto n = static_cast<std::size_t>(std::ceil(len / target - 1e-9));
      const double h = len / static_cast<double>(n);
      try {
        if (h != last_step) {
          stepper.emplace(op, h, options.theta_weight);
          last_step = h;
        }
        for (std::size_t s = 0; s < n; ++s) {
          stepper->step(cur.p);
          cur.tau = t + h * static_cast<double>(s + 1);
          clip_negative(cur.p, cur.tau);
        }
      } catch (const Error& e) {
        std::ostringstream os;
        os << "at tau = " << cur.tau << ": " << e.detail();
        throw Error(e.code(), os.str());
      }
      res.steps += n;
      t = ev;
      cur.tau = ev;
      record(ev + 1e-12 * std::max(1.0, std::abs(ev)));
    }
  }
  return res;
}

}  // namespace mtjfp
