#include "mtjfp/error.hpp"
#include "mtjfp/expm.hpp"
#include "mtjfp/fvm.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

using namespace mtjfp;

namespace {

NormalizedDrive drive(double i, double h, double delta) {
  NormalizedDrive d;
  d.i = i;
  d.h = h;
  d.delta = delta;
  return d;
}

// Composite Simpson integral of exp(delta x^2) on [a, b].
double simpson_exp(double a, double b, double delta, int n = 400) {
  const double h = (b - a) / n;
  double s = std::exp(delta * a * a) + std::exp(delta * b * b);
  for (int k = 1; k < n; ++k) {
    const double x = a + k * h;
    s += (k % 2 ? 4.0 : 2.0) * std::exp(delta * x * x);
  }
  return s * h / 3.0;
}

// Cell masses of P(theta) ~ sin(theta) exp(delta cos^2 theta).
std::vector<double> exact_masses(const ThetaMesh& mesh, double delta) {
  const auto& f = mesh.faces();
  std::vector<double> p(mesh.size());
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = simpson_exp(std::cos(f[k + 1]), std::cos(f[k]), delta);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

Eigen::MatrixXd dense(const FvmOperator& op) {
  const auto m = static_cast<Eigen::Index>(op.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    a(k, k) = op.diag[k];
    if (k > 0) a(k, k - 1) = op.lower[k];
    if (k + 1 < m) a(k, k + 1) = op.upper[k];
  }
  return a;
}

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s;
}

}  // namespace

TEST_CASE("mesh construction") {
  for (auto g : {Grading::UniformTheta, Grading::UniformCos, Grading::TanhRefined}) {
    const auto m = build_mesh(64, g);
    REQUIRE(m.size() == 64);
    CHECK(m.faces().front() == 0.0);
    CHECK(m.faces().back() == doctest::Approx(std::numbers::pi));
    for (std::size_t k = 0; k < m.size(); ++k) {
      CHECK(m.faces()[k + 1] > m.faces()[k]);
      CHECK(m.centers()[k] > m.faces()[k]);
      CHECK(m.centers()[k] < m.faces()[k + 1]);
    }
  }
  CHECK_THROWS_AS(build_mesh(1, Grading::UniformTheta), Error);
}

TEST_CASE("bernoulli function") {
  CHECK(bernoulli(0.0) == 1.0);
  CHECK(bernoulli(1e-12) == doctest::Approx(1.0 - 0.5e-12));
  for (double z : {1e-6, 0.3, 2.0, 40.0, 800.0}) {
    CHECK(bernoulli(z) - bernoulli(-z) == doctest::Approx(-z).epsilon(1e-12));
  }
  CHECK(bernoulli(1000.0) >= 0.0);
}

TEST_CASE("operator columns sum to zero") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (auto g : {Grading::UniformTheta, Grading::TanhRefined}) {
    const auto mesh = build_mesh(200, g);
    for (int t = 0; t < 5; ++t) {
      const auto op = assemble(mesh, drive(u(gen), 0.2 * u(gen), 10.0 + 20.0 * std::abs(u(gen))));
      for (double c : op.column_sums()) CHECK(std::abs(c) < 1e-13 * std::max(1.0, std::abs(op.diag[0])) + 1e-13);
      for (std::size_t k = 1; k < op.size(); ++k) CHECK(op.lower[k] >= 0.0);
      for (std::size_t k = 0; k + 1 < op.size(); ++k) CHECK(op.upper[k] >= 0.0);
    }
  }
}

TEST_CASE("stationary distribution matches the Boltzmann cell integrals") {
  const auto mesh = build_mesh(256, Grading::UniformTheta);
  const auto op = assemble(mesh, drive(0.0, 0.0, 63.0));
  const auto p = stationary_masses(op);
  CHECK(l1(p, exact_masses(mesh, 63.0)) < 2e-3);
  for (double v : p) CHECK(v >= 0.0);
}

TEST_CASE("equilibrium input is left unchanged by a step") {
  const auto mesh = build_mesh(128, Grading::UniformTheta);
  const auto op = assemble(mesh, drive(0.0, 0.0, 40.0));
  GridDistribution g{mesh, stationary_masses(op), 0.0};
  const auto out = step_cn(g, op, 0.05);
  CHECK(l1(out.p, g.p) < 1e-10);
}

TEST_CASE("crank-nicolson converges to the matrix exponential") {
  const auto mesh = build_mesh(32, Grading::UniformTheta);
  const auto d = drive(1.5, 0.1, 20.0);
  const auto op = assemble(mesh, d);
  std::vector<double> p0(mesh.size(), 0.0);
  p0[2] = 0.5;
  p0[3] = 0.5;
  const double tau = 0.5;
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(p0.data(), p0.size());
  const Eigen::VectorXd exact = expm(dense(op) * tau) * v;

  auto run = [&](int n) {
    std::vector<double> p = p0;
    CnStepper s(op, tau / n);
    for (int k = 0; k < n; ++k) s.step(p);
    double err = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) err = std::max(err, std::abs(p[k] - exact[k]));
    return err;
  };
  const double e1 = run(200);
  const double e2 = run(400);
  CHECK(e1 < 1e-4);
  // Second order in dtau.
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("evolution conserves mass and records samples") {
  const auto mesh = build_mesh(256, Grading::UniformTheta);
  const auto d0 = drive(0.0, 0.0, 63.0);
  GridDistribution g{mesh, std::vector<double>(mesh.size(), 0.0), 0.0};
  for (std::size_t k = 0; k < 20; ++k) g.p[k] = 0.05;

  FvmEvolveOptions opt;
  opt.sample_taus = {0.0, 1.0, 2.0, 3.0};
  const auto res = evolve(g, {{drive(2.0, 0.0, 63.0), 2.0}, {d0, 1.0}}, opt);
  CHECK(std::abs(res.final.total_mass() - 1.0) < 1e-12);
  REQUIRE(res.samples.size() == 4);
  CHECK(res.samples[0].switched_fraction == 0.0);
  CHECK(res.samples[2].switched_fraction > 0.3);
  CHECK(res.final.tau == doctest::Approx(3.0));
  CHECK(res.steps > 0);

  const auto same = evolve(g, {}, opt);
  CHECK(same.final.p == g.p);
}
