#include "mtjfp/spectral.hpp"

#include "mtjfp/error.hpp"
#include "mtjfp/expm.hpp"
#include "mtjfp/legendre.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

namespace mtjfp {

GeneratorMatrix build_generator(int order, const NormalizedDrive& drive) {
  if (order < 2) throw Error(Errc::InvalidArgument, "Legendre order must be >= 2");
  if (!(drive.delta > 0.0)) throw Error(Errc::InvalidArgument, "delta must be > 0");
  const int n = order + 1;
  const double a = drive.i - drive.h;
  const double d = 1.0 / (2.0 * drive.delta);

  GeneratorMatrix g;
  g.a = Eigen::MatrixXd::Zero(n, n);
  g.drift = a;
  g.delta = drive.delta;
  for (int m = 1; m < n; ++m) {
    const double mm = m;
    const double mm1 = mm * (mm + 1.0);
    if (m >= 2) g.a(m, m - 2) = (mm - 1.0) * mm1 / ((2.0 * mm - 3.0) * (2.0 * mm - 1.0));
    g.a(m, m - 1) = -a * mm1 / (2.0 * mm - 1.0);
    g.a(m, m) = mm1 / ((2.0 * mm - 1.0) * (2.0 * mm + 3.0)) - d * mm1;
    if (m + 1 < n) g.a(m, m + 1) = a * mm1 / (2.0 * mm + 3.0);
    if (m + 2 < n) g.a(m, m + 2) = -mm1 * (mm + 2.0) / ((2.0 * mm + 3.0) * (2.0 * mm + 5.0));
  }
  return g;
}

namespace {

void finish_normalization(LegendreState& s) {
  const double err = std::abs(2.0 * s.r(0) - 1.0);
  if (err > 1e-6) {
    std::ostringstream os;
    os << "integral of rho is " << 2.0 * s.r(0) << " (|2 r_0 - 1| = " << err << " > 1e-6)";
    throw Error(Errc::NotNormalized, os.str());
  }
  s.r(0) = 0.5;
}

}  // namespace

LegendreState project(const std::function<double(double)>& rho, int order, double lo, double hi,
                      std::size_t nodes) {
  if (order < 0) throw Error(Errc::InvalidArgument, "Legendre order must be >= 0");
  if (!(lo < hi) || lo < -1.0 || hi > 1.0) {
    throw Error(Errc::InvalidArgument, "projection support must satisfy -1 <= lo < hi <= 1");
  }
  if (nodes == 0) nodes = std::max<std::size_t>(2 * static_cast<std::size_t>(order + 1), 1024);
  const auto& gl = gauss_legendre(nodes);
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);

  LegendreState s;
  s.r = Eigen::VectorXd::Zero(order + 1);
  for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
    const double x = mid + half * gl.nodes[q];
    const double f = rho(x) * gl.weights[q] * half;
    if (f == 0.0) continue;
    const auto p = legendre_values(order, x);
    for (int n = 0; n <= order; ++n) s.r(n) += f * p[static_cast<std::size_t>(n)];
  }
  for (int n = 0; n <= order; ++n) s.r(n) *= 0.5 * (2.0 * n + 1.0);
  finish_normalization(s);
  return s;
}

LegendreState project(const GridDistribution& grid, int order) {
  const auto& faces = grid.mesh.faces();
  const std::size_t m = grid.p.size();
  if (std::abs(grid.total_mass() - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "grid mass " << grid.total_mass() << " differs from 1 by more than 1e-6";
    throw Error(Errc::NotNormalized, os.str());
  }
  // Knots ordered by increasing x = cos(theta): face k of the mesh sits at
  // knot m - k.  F(x) is the mass with cos(theta) < x.
  std::vector<double> xs(m + 1), cum(m + 1);
  double acc = 0.0;
  for (std::size_t j = 0; j <= m; ++j) {
    const std::size_t face = m - j;
    xs[j] = std::cos(faces[face]);
    cum[j] = acc;
    if (j < m) acc += grid.p[face - 1];
  }
  xs.front() = -1.0;
  xs.back() = 1.0;
  const CubicSpline spline(xs, cum);

  const auto& gl = gauss_legendre(static_cast<std::size_t>(order) / 2 + 3);
  LegendreState s;
  s.r = Eigen::VectorXd::Zero(order + 1);
  for (std::size_t j = 0; j < m; ++j) {
    const double half = 0.5 * (xs[j + 1] - xs[j]);
    const double mid = 0.5 * (xs[j + 1] + xs[j]);
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double x = mid + half * gl.nodes[q];
      const double f = spline.derivative(x) * gl.weights[q] * half;
      const auto p = legendre_values(order, x);
      for (int n = 0; n <= order; ++n) s.r(n) += f * p[static_cast<std::size_t>(n)];
    }
  }
  for (int n = 0; n <= order; ++n) s.r(n) *= 0.5 * (2.0 * n + 1.0);
  s.tau = grid.tau;
  finish_normalization(s);
  return s;
}

Eigen::MatrixXd propagator(const GeneratorMatrix& gen, double tau) {
  Eigen::MatrixXd e = expm(gen.a * tau);
  e.row(0).setZero();
  e(0, 0) = 1.0;
  return e;
}

LegendreState evolve(const LegendreState& state, const GeneratorMatrix& gen, double tau) {
  if (state.order() != gen.order()) {
    throw Error(Errc::InvalidArgument, "state and generator orders differ");
  }
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw Error(Errc::InvalidArgument, "tau must be >= 0");
  if (tau == 0.0) return state;
  LegendreState out;
  out.r = propagator(gen, tau) * state.r;
  out.tau = state.tau + tau;
  return out;
}

SpectralPropagator::SpectralPropagator(const GeneratorMatrix& gen, double dtau)
    : step_(propagator(gen, dtau)), dtau_(dtau) {
  if (!(dtau >= 0.0)) throw Error(Errc::InvalidArgument, "dtau must be >= 0");
}

LegendreState SpectralPropagator::advance(const LegendreState& state) const {
  if (state.r.size() != step_.rows()) {
    throw Error(Errc::InvalidArgument, "state and propagator orders differ");
  }
  return {step_ * state.r, state.tau + dtau_};
}

const std::vector<double>& hemisphere_weights(int order) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[order];
  if (!slot) {
    const auto p0 = legendre_at_zero(order + 1);
    auto w = std::make_unique<std::vector<double>>(static_cast<std::size_t>(order) + 1);
    (*w)[0] = 1.0;
    for (int n = 1; n <= order; ++n) {
      const auto nn = static_cast<std::size_t>(n);
      (*w)[nn] = (p0[nn + 1] - p0[nn - 1]) / (2.0 * n + 1.0);
    }
    slot = std::move(w);
  }
  return *slot;
}

double switched_fraction(const LegendreState& state) {
  const auto& w = hemisphere_weights(state.order());
  double s = 0.0;
  for (int n = 0; n <= state.order(); ++n) s += state.r(n) * w[static_cast<std::size_t>(n)];
  return s;
}

double parallel_fraction(const LegendreState& state) {
  // int_0^1 P_n = delta_n0 - w_n for n >= 1 (odd-n weights flip sign, even vanish).
  const auto& w = hemisphere_weights(state.order());
  double s = state.r(0);
  for (int n = 1; n <= state.order(); ++n) s -= state.r(n) * w[static_cast<std::size_t>(n)];
  return s;
}

std::vector<double> reconstruct(const LegendreState& state, const std::vector<double>& xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) {
    // Clenshaw-free: accumulate along the recurrence.
    double p0 = 1.0, p1 = x;
    double v = state.r(0);
    if (state.order() >= 1) v += state.r(1) * x;
    for (int k = 1; k < state.order(); ++k) {
      const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
      v += state.r(k + 1) * p2;
      p0 = p1;
      p1 = p2;
    }
    out.push_back(v);
  }
  return out;
}

std::vector<double> reconstruct_theta(const LegendreState& state,
                                      const std::vector<double>& thetas) {
  std::vector<double> xs;
  xs.reserve(thetas.size());
  for (double t : thetas) xs.push_back(std::cos(t));
  auto rho = reconstruct(state, xs);
  for (std::size_t k = 0; k < rho.size(); ++k) rho[k] *= std::sin(thetas[k]);
  return rho;
}

std::vector<double> reconstruct_cell_masses(const LegendreState& state, const ThetaMesh& mesh) {
  const int order = state.order();
  // Q_n(x) = int_{-1}^{x} P_n = (P_{n+1} - P_{n-1}) / (2n+1), Q_0 = x + 1.
  auto primitive = [&](double x) {
    const auto p = legendre_values(order + 1, x);
    double v = state.r(0) * (x + 1.0);
    for (int n = 1; n <= order; ++n) {
      const auto nn = static_cast<std::size_t>(n);
      v += state.r(n) * (p[nn + 1] - p[nn - 1]) / (2.0 * n + 1.0);
    }
    return v;
  };
  const auto& faces = mesh.faces();
  std::vector<double> q(faces.size());
  for (std::size_t k = 0; k < faces.size(); ++k) q[k] = primitive(std::cos(faces[k]));
  std::vector<double> masses(mesh.size());
  for (std::size_t k = 0; k < mesh.size(); ++k) masses[k] = q[k] - q[k + 1];
  return masses;
}

std::optional<std::string> ringing_warning(const LegendreState& state) {
  constexpr std::size_t kPoints = 1024;
  std::vector<double> xs(kPoints);
  for (std::size_t k = 0; k < kPoints; ++k) {
    xs[k] = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(kPoints - 1);
  }
  const auto rho = reconstruct(state, xs);
  const double lowest = *std::min_element(rho.begin(), rho.end());
  if (lowest >= -1e-6) return std::nullopt;
  std::ostringstream os;
  os << "reconstructed density reaches " << lowest << " (order " << state.order()
     << "); increase the Legendre order";
  return os.str();
}

}  // namespace mtjfp
