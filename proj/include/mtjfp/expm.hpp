#pragma once

#include <Eigen/Core>

namespace mtjfp {

/// Matrix exponential by scaling and squaring with the [m/m] Pade
/// approximant, m in {3, 5, 7, 9, 13} chosen from the 1-norm (Higham 2005).
/// Throws ExpmFailure if the Pade denominator is singular or the result is
/// not finite.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

}  // namespace mtjfp
