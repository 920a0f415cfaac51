#pragma once

// Conservative finite-volume Fokker-Planck solver on the polar angle.
//
// Unknowns are cell probability masses of P(theta) = rho * sin(theta), the
// mass per unit angle, so that
//
//   dP/dtau = -dJ/dtheta,   J = U_eff P - D dP/dtheta,
//   U_eff   = sin(theta) (i - h - cos(theta)) + cot(theta) / (2 Delta),
//   D       = 1 / (2 Delta).
//
// Interior faces use the Scharfetter-Gummel flux
//
//   J = (D / dx) [B(-Pe) P_L - B(Pe) P_R],   Pe = U dx / D,   B(z) = z / (e^z - 1)
//
// where dx is the centre-to-centre distance and U is U_eff averaged over
// [theta_L, theta_R] (closed form, including the log(sin) primitive of the
// cot term).  With this face drift the zero-flux steady state reproduces
// sin(theta) exp(Delta cos^2 theta) exactly at the cell centres.  The pole
// faces carry no flux.

#include "mtjfp/device.hpp"

#include <cstddef>
#include <vector>

namespace mtjfp {

enum class Grading { UniformTheta, UniformCos, TanhRefined };

class ThetaMesh {
 public:
  /// Faces must start at 0, end at pi and increase strictly.
  explicit ThetaMesh(std::vector<double> faces, Grading grading = Grading::UniformTheta);

  std::size_t size() const { return centers_.size(); }
  const std::vector<double>& faces() const { return faces_; }
  const std::vector<double>& centers() const { return centers_; }
  const std::vector<double>& widths() const { return widths_; }
  Grading grading() const { return grading_; }
  double min_width() const;

 private:
  std::vector<double> faces_;
  std::vector<double> centers_;
  std::vector<double> widths_;
  Grading grading_;
};

/// Tanh stretching strength of the pole-refined grading.
inline constexpr double kTanhRefinement = 1.5;

/// Throws BadGrading for cells < 2.
ThetaMesh build_mesh(std::size_t cells, Grading grading);

struct GridDistribution {
  ThetaMesh mesh;
  std::vector<double> p;  // cell masses
  double tau = 0.0;

  double total_mass() const;
  /// Mass with theta > pi/2 (a cell centred on pi/2 counts half).
  double switched_fraction() const;
};

struct DriftDiffusion {
  double u_eff;
  double d;
};

/// Pointwise U_eff and D.  Throws PoleEvaluation outside (0, pi).
DriftDiffusion drift_diffusion(double theta, double i, double h, double delta);

/// Bernoulli function z / (e^z - 1), series branch for |z| < 1e-4.
double bernoulli(double z);

/// Tridiagonal operator dp/dtau = A p on cell masses.
struct FvmOperator {
  std::vector<double> lower;  // A(k, k-1), lower[0] unused
  std::vector<double> diag;
  std::vector<double> upper;  // A(k, k+1), upper[M-1] unused

  std::size_t size() const { return diag.size(); }
  std::vector<double> apply(const std::vector<double>& p) const;
  std::vector<double> column_sums() const;
  /// Largest dtau for which the explicit half of a theta-weighted step keeps
  /// its diagonal non-negative.
  double positivity_bound(double theta_weight = 0.5) const;
};

FvmOperator assemble(const ThetaMesh& mesh, const NormalizedDrive& drive);

/// Zero-flux steady state of the assembled operator (normalized masses).
std::vector<double> stationary_masses(const FvmOperator& op);

/// Factorized theta-weighted step (I - w dtau A) p' = (I + (1-w) dtau A) p.
class CnStepper {
 public:
  CnStepper(const FvmOperator& op, double dtau, double theta_weight = 0.5);
  void step(std::vector<double>& p) const;
  double dtau() const { return dtau_; }

 private:
  const FvmOperator* op_;
  double dtau_;
  double w_;
  std::vector<double> c_prime_;
  std::vector<double> denom_;
};

/// Masses in [-1e-12, 0) are clipped to zero and the vector renormalized;
/// anything more negative throws NegativeMass.
void clip_negative(std::vector<double>& p, double tau);

GridDistribution step_cn(const GridDistribution& dist, const FvmOperator& op, double dtau,
                         double theta_weight = 0.5);

struct FvmSegment {
  NormalizedDrive drive;
  double duration_tau = 0.0;
};

struct FvmEvolveOptions {
  double dtau = 0.0;  // 0: min(0.1, 0.25 h_min / max|U_eff|) per segment
  double theta_weight = 0.5;
  std::vector<double> sample_taus;  // absolute tau values
  bool keep_snapshots = false;
};

struct FvmSample {
  double tau;
  double switched_fraction;
};

struct FvmEvolveResult {
  GridDistribution final;
  std::vector<FvmSample> samples;
  std::vector<GridDistribution> snapshots;
  std::size_t steps = 0;
};

/// Default step policy for one drive on a mesh.
double default_dtau(const ThetaMesh& mesh, const NormalizedDrive& drive);

FvmEvolveResult evolve(const GridDistribution& rho0, const std::vector<FvmSegment>& schedule,
                       const FvmEvolveOptions& options = {});

}  // namespace mtjfp
