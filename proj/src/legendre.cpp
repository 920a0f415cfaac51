#include "mtjfp/legendre.hpp"

#include "mtjfp/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace mtjfp {

std::vector<double> legendre_values(int n, double x) {
  std::vector<double> p(static_cast<std::size_t>(n) + 1);
  p[0] = 1.0;
  if (n >= 1) p[1] = x;
  for (int k = 1; k < n; ++k) {
    p[k + 1] = ((2.0 * k + 1.0) * x * p[k] - k * p[k - 1]) / (k + 1.0);
  }
  return p;
}

std::vector<double> legendre_at_zero(int n_max) { return legendre_values(n_max, 0.0); }

const GaussLegendre& gauss_legendre(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<GaussLegendre>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (slot) return *slot;

  auto rule = std::make_unique<GaussLegendre>();
  rule->nodes.resize(n);
  rule->weights.resize(n);
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < (n + 1) / 2; ++k) {
    // Tricomi initial guess, then Newton.
    double x = std::cos(std::numbers::pi * (static_cast<double>(k) + 0.75) / (nn + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t j = 1; j < n; ++j) {
        const double jj = static_cast<double>(j);
        const double p2 = ((2.0 * jj + 1.0) * x * p1 - jj * p0) / (jj + 1.0);
        p0 = p1;
        p1 = p2;
      }
      dp = nn * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (std::size_t j = 1; j < n; ++j) {
      const double jj = static_cast<double>(j);
      const double p2 = ((2.0 * jj + 1.0) * x * p1 - jj * p0) / (jj + 1.0);
      p0 = p1;
      p1 = p2;
    }
    dp = nn * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule->nodes[k] = -x;
    rule->nodes[n - 1 - k] = x;
    rule->weights[k] = w;
    rule->weights[n - 1 - k] = w;
  }
  if (n % 2 == 1) rule->nodes[n / 2] = 0.0;
  slot = std::move(rule);
  return *slot;
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw Error(Errc::InvalidArgument, "spline needs >= 2 knots");
  m_.assign(n, 0.0);
  if (n == 2) return;
  // Tridiagonal system for interior second derivatives (natural ends).
  std::vector<double> c(n, 0.0), d(n, 0.0);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double h0 = x_[k] - x_[k - 1];
    const double h1 = x_[k + 1] - x_[k];
    const double a = h0 / 6.0;
    const double b = (h0 + h1) / 3.0;
    const double cc = h1 / 6.0;
    const double rhs = (y_[k + 1] - y_[k]) / h1 - (y_[k] - y_[k - 1]) / h0;
    const double den = b - a * c[k - 1];
    c[k] = cc / den;
    d[k] = (rhs - a * d[k - 1]) / den;
  }
  for (std::size_t k = n - 2; k >= 1; --k) {
    m_[k] = d[k] - c[k] * m_[k + 1];
  }
}

std::size_t CubicSpline::interval(double x) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  if (it == x_.begin()) return 0;
  const auto k = static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(k, x_.size() - 2);
}

double CubicSpline::value(double x) const {
  const std::size_t k = interval(x);
  const double h = x_[k + 1] - x_[k];
  const double a = (x_[k + 1] - x) / h;
  const double b = (x - x_[k]) / h;
  return a * y_[k] + b * y_[k + 1] +
         ((a * a * a - a) * m_[k] + (b * b * b - b) * m_[k + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double x) const {
  const std::size_t k = interval(x);
  const double h = x_[k + 1] - x_[k];
  const double a = (x_[k + 1] - x) / h;
  const double b = (x - x_[k]) / h;
  return (y_[k + 1] - y_[k]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m_[k] +
         (3.0 * b * b - 1.0) / 6.0 * h * m_[k + 1];
}

}  // namespace mtjfp
