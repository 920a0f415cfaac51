#include "mtjfp/error.hpp"
#include "mtjfp/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace mtjfp;

namespace {

DeviceParams reference() { return DeviceParams(reference_device_inputs()); }

SolverSettings spectral(int order = 120) {
  SolverSettings s;
  s.order = order;
  return s;
}

}  // namespace

TEST_CASE("wilson interval") {
  const auto ci = wilson_interval(5000, 10000);
  CHECK(ci.contains(0.5));
  CHECK(ci.half_width() == doctest::Approx(0.0129).epsilon(0.01));
  const auto zero = wilson_interval(0, 100);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi > 0.0);
  CHECK(wilson_interval(0, 0).hi == 1.0);
}

TEST_CASE("minimum walk count") {
  CHECK(min_walks(0.5) == 10);
  CHECK(min_walks(1e-6) == 5000000);
  CHECK_THROWS_AS(min_walks(0.0), Error);
}

TEST_CASE("boltzmann density is normalized on its hemisphere") {
  for (double delta : {5.0, 63.0}) {
    double s = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
      const double x = (k + 0.5) / n;
      s += boltzmann_density(x, delta, Well::Parallel) / n;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(boltzmann_density(-0.3, delta, Well::Parallel) == 0.0);
    CHECK(boltzmann_density(-0.3, delta, Well::Antiparallel) ==
          doctest::Approx(boltzmann_density(0.3, delta, Well::Parallel)));
  }
  const auto g = boltzmann_grid(build_mesh(100, Grading::UniformTheta), 63.0, Well::Antiparallel);
  CHECK(well_mass(g, Well::Antiparallel) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("write error rate falls with pulse width and current") {
  const auto p = reference();
  const double ic = normalize(p, 0.0).i_c;
  const std::vector<double> pulses{2e-9, 5e-9, 1e-8, 2e-8};
  const auto a = wer_curve(p, 2.0 * ic, pulses, spectral());
  const auto b = wer_curve(p, 3.0 * ic, pulses, spectral());
  REQUIRE(a.points.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(a.points[k].rate > 0.0);
    CHECK(a.points[k].rate < 1.0);
    CHECK(b.points[k].rate < a.points[k].rate);
    if (k > 0) CHECK(a.points[k].rate <= a.points[k - 1].rate);
    CHECK(a.points[k].kind == RateKind::Wer);
  }
}

TEST_CASE("negative current writes from the antiparallel well") {
  const auto p = reference();
  const double ic = normalize(p, 0.0).i_c;
  const auto pos = wer_curve(p, 2.0 * ic, {1e-8}, spectral());
  const auto neg = wer_curve(p, -2.0 * ic, {1e-8}, spectral());
  CHECK(neg.points[0].rate == doctest::Approx(pos.points[0].rate).epsilon(1e-9));
}

TEST_CASE("read disturb is the complement of the write error at the same drive") {
  const auto p = reference();
  const double ic = normalize(p, 0.0).i_c;
  const auto w = wer_curve(p, 0.8 * ic, {5e-8}, spectral());
  const auto r = rer_curve(p, {0.8 * ic}, 5e-8, spectral());
  CHECK(r.points[0].kind == RateKind::Rer);
  CHECK(r.points[0].rate + w.points[0].rate == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("inversion finds the pulse width of each target") {
  const auto p = reference();
  const double ic = normalize(p, 0.0).i_c;
  const auto inv = invert_wer(p, 2.0 * ic, {0.5, 1e-2, 1e-4}, spectral(160));
  REQUIRE(inv.times.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) REQUIRE(inv.times[k]);
  CHECK(*inv.times[0] < *inv.times[1]);
  CHECK(*inv.times[1] < *inv.times[2]);
  const auto check = wer_curve(p, 2.0 * ic, {*inv.times[0], *inv.times[1], *inv.times[2]},
                               spectral(160));
  CHECK(check.points[0].rate == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(check.points[1].rate == doctest::Approx(1e-2).epsilon(2e-3));
  CHECK(check.points[2].rate == doctest::Approx(1e-4).epsilon(2e-3));
}

TEST_CASE("unreachable target raises NoBracket") {
  const auto p = reference();
  try {
    time_to_wer(p, 0.0, 1e-3, spectral(60));
    FAIL("expected NoBracket");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoBracket);
  }
}

TEST_CASE("switching series agrees between solvers") {
  const auto p = reference();
  const auto d = normalize(p, 2.0 * normalize(p, 0.0).i_c);
  std::vector<double> taus;
  for (int k = 0; k <= 20; ++k) taus.push_back(0.5 * k);
  SolverSettings fvm;
  fvm.kind = SolverKind::Fvm;
  fvm.cells = 512;
  const auto a = switching_series(p, d, taus, fvm);
  const auto b = switching_series(p, d, taus, spectral(200));
  for (std::size_t k = 0; k < taus.size(); ++k) {
    CHECK(std::abs(a.switched[k] - b.switched[k]) < 2e-3);
  }
  CHECK(a.final_grid.has_value());
  CHECK(b.final_state.has_value());
}

TEST_CASE("monte carlo validation refuses tiny expected counts") {
  const auto p = reference();
  const double ic = normalize(p, 0.0).i_c;
  try {
    mc_validate(p, 2.0 * ic, 3e-8, 100, 1, spectral());
    FAIL("expected InsufficientWalks");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InsufficientWalks);
  }
}
