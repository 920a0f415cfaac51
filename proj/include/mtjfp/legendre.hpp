#pragma once

#include <cstddef>
#include <vector>

namespace mtjfp {

/// P_0(x) .. P_n(x) by the three-term recurrence.
std::vector<double> legendre_values(int n, double x);

/// P_n(0) for n = 0 .. n_max.
std::vector<double> legendre_at_zero(int n_max);

struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton on P_n, cached per n).
const GaussLegendre& gauss_legendre(std::size_t n);

/// Natural cubic spline through (x_k, y_k), x strictly increasing.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y);
  double value(double x) const;
  double derivative(double x) const;

 private:
  std::size_t interval(double x) const;
  std::vector<double> x_, y_, m_;  // m_: second derivatives at knots
};

}  // namespace mtjfp
