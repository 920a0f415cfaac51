#pragma once

// Legendre-spectral Fokker-Planck solver in x = cos(theta).
//
// The density rho(x), normalized as int_{-1}^{1} rho dx = 1, obeys
//
//   d rho / d tau = d/dx [ (1 - x^2) ( (i - h - x) rho + (1 / 2 Delta) d rho / dx ) ].
//
// Writing rho = sum_n r_n P_n(x) and testing against P_m gives dr/dtau = A r
// with A_mn = (2m + 1)/2 int P_m L[P_n] dx.  Integrating by parts and using
//
//   (1 - x^2) P_m' = m(m+1)/(2m+1) (P_{m-1} - P_{m+1}),
//   x P_n          = ((n+1) P_{n+1} + n P_{n-1}) / (2n+1),
//
// the nonzero entries are, with a = i - h and D = 1 / (2 Delta),
//
//   A_{m,m-2} =  (m-1) m (m+1) / ((2m-3)(2m-1))
//   A_{m,m-1} = -a m (m+1) / (2m-1)
//   A_{m,m}   =  m (m+1) / ((2m-1)(2m+3)) - D m (m+1)
//   A_{m,m+1} =  a m (m+1) / (2m+3)
//   A_{m,m+2} = -m (m+1) (m+2) / ((2m+3)(2m+5))
//
// Row index m is the tested (output) mode, column n the expanded (input)
// mode.  Row 0 vanishes, so r_0 = 1/2 is conserved.

#include "mtjfp/device.hpp"
#include "mtjfp/fvm.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mtjfp {

struct LegendreState {
  Eigen::VectorXd r;
  double tau = 0.0;

  int order() const { return static_cast<int>(r.size()) - 1; }
};

struct GeneratorMatrix {
  Eigen::MatrixXd a;
  double drift = 0.0;  // i - h
  double delta = 1.0;

  int order() const { return static_cast<int>(a.rows()) - 1; }
};

inline constexpr int kDefaultLegendreOrder = 200;

GeneratorMatrix build_generator(int order, const NormalizedDrive& drive);

/// r_n = (2n+1)/2 int rho P_n dx over the support [lo, hi] of rho.  Uses
/// max(2(N+1), 1024) Gauss-Legendre nodes unless `nodes` is given.  Throws
/// NotNormalized when |2 r_0 - 1| > 1e-6; r_0 is then set to exactly 1/2.
LegendreState project(const std::function<double(double)>& rho, int order, double lo = -1.0,
                      double hi = 1.0, std::size_t nodes = 0);

/// Projection of a finite-volume distribution.  The cumulative mass at the
/// faces is interpolated by a cubic spline in x, and its derivative is
/// projected exactly interval by interval, so cell masses are preserved up
/// to series truncation.
LegendreState project(const GridDistribution& grid, int order);

/// exp(A tau).  Row 0 of A vanishes, so row 0 of the propagator is set to
/// e_0 exactly instead of carrying round-off from the Pade solve.
Eigen::MatrixXd propagator(const GeneratorMatrix& gen, double tau);

/// r(tau) = exp(A tau) r(0).
LegendreState evolve(const LegendreState& state, const GeneratorMatrix& gen, double tau);

/// exp(A dtau) cached for repeated fixed-size advances.
class SpectralPropagator {
 public:
  SpectralPropagator(const GeneratorMatrix& gen, double dtau);
  LegendreState advance(const LegendreState& state) const;
  double dtau() const { return dtau_; }

 private:
  Eigen::MatrixXd step_;
  double dtau_;
};

/// w_n = int_{-1}^{0} P_n dx.
const std::vector<double>& hemisphere_weights(int order);

/// Probability with x < 0 (theta > pi/2).
double switched_fraction(const LegendreState& state);
/// Probability with x > 0; computed directly rather than as 1 - switched.
double parallel_fraction(const LegendreState& state);

std::vector<double> reconstruct(const LegendreState& state, const std::vector<double>& xs);
/// P(theta) = rho(cos theta) sin(theta).
std::vector<double> reconstruct_theta(const LegendreState& state,
                                      const std::vector<double>& thetas);
/// Exact integral of the series over every cell of the mesh.
std::vector<double> reconstruct_cell_masses(const LegendreState& state, const ThetaMesh& mesh);

/// Warning text when the reconstructed density dips below -1e-6 on a
/// 1024-point grid (series truncated too early).
std::optional<std::string> ringing_warning(const LegendreState& state);

}  // namespace mtjfp
