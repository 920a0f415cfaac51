#pragma once

#include <cmath>
#include <cstddef>

namespace mtjfp {

inline constexpr double kZ99 = 2.5758293035489004;  // two-sided 99% normal quantile

struct BinomialInterval {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double p) const { return p >= lo && p <= hi; }
  double half_width() const { return 0.5 * (hi - lo); }
};

/// Wilson score interval for k successes out of n trials.
inline BinomialInterval wilson_interval(std::size_t k, std::size_t n, double z = kZ99) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::fmax(0.0, centre - half), std::fmin(1.0, centre + half)};
}

}  // namespace mtjfp
