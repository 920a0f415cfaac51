#include "mtjfp/expm.hpp"

#include "mtjfp/error.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace mtjfp {

namespace {

using Eigen::MatrixXd;

void pade_low(const MatrixXd& a, const double* b, int m, MatrixXd& u, MatrixXd& v) {
  const auto n = a.rows();
  const MatrixXd id = MatrixXd::Identity(n, n);
  const MatrixXd a2 = a * a;
  MatrixXd odd = b[1] * id;
  MatrixXd even = b[0] * id;
  MatrixXd pw = id;
  for (int k = 1; 2 * k <= m; ++k) {
    pw = pw * a2;
    odd += b[2 * k + 1] * pw;
    even += b[2 * k] * pw;
  }
  u = a * odd;
  v = even;
}

void pade13(const MatrixXd& a, MatrixXd& u, MatrixXd& v) {
  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  const auto n = a.rows();
  const MatrixXd id = MatrixXd::Identity(n, n);
  const MatrixXd a2 = a * a;
  const MatrixXd a4 = a2 * a2;
  const MatrixXd a6 = a4 * a2;
  const MatrixXd inner_u = b[13] * a6 + b[11] * a4 + b[9] * a2;
  u = a * (a6 * inner_u + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const MatrixXd inner_v = b[12] * a6 + b[10] * a4 + b[8] * a2;
  v = a6 * inner_v + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

}  // namespace

MatrixXd expm(const MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error(Errc::InvalidArgument, "expm needs a square matrix");
  if (!a.allFinite()) throw Error(Errc::ExpmFailure, "matrix has non-finite entries");
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();

  static constexpr double b3[] = {120.0, 60.0, 12.0, 1.0};
  static constexpr double b5[] = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
  static constexpr double b7[] = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                  25200.0,    1512.0,    56.0,      1.0};
  static constexpr double b9[] = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                  30270240.0,    2162160.0,    110880.0,     3960.0,
                                  90.0,          1.0};

  MatrixXd u, v;
  int squarings = 0;
  if (norm1 <= 1.495585217958292e-2) {
    pade_low(a, b3, 3, u, v);
  } else if (norm1 <= 2.539398330063230e-1) {
    pade_low(a, b5, 5, u, v);
  } else if (norm1 <= 9.504178996162932e-1) {
    pade_low(a, b7, 7, u, v);
  } else if (norm1 <= 2.097847961257068) {
    pade_low(a, b9, 9, u, v);
  } else {
    constexpr double theta13 = 5.371920351148152;
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
    pade13(std::ldexp(1.0, -squarings) * a, u, v);
  }

  const Eigen::PartialPivLU<MatrixXd> lu(v - u);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    std::ostringstream os;
    os << "Pade denominator ill-conditioned (rcond = " << rcond << ", |A|_1 = " << norm1
       << ", squarings = " << squarings << ")";
    throw Error(Errc::ExpmFailure, os.str());
  }
  MatrixXd r = lu.solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  if (!r.allFinite()) {
    std::ostringstream os;
    os << "non-finite result (|A|_1 = " << norm1 << ", squarings = " << squarings << ")";
    throw Error(Errc::ExpmFailure, os.str());
  }
  return r;
}

}  // namespace mtjfp
