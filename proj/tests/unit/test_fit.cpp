#include "mtjfp/error.hpp"
#include "mtjfp/fit.hpp"
#include "mtjfp/sllgs.hpp"

#include <doctest.h>

#include <cmath>

using namespace mtjfp;

TEST_CASE("scaled coordinates round trip") {
  const FitParameter lin{"alpha", 0.005, 0.02, ParamScale::Linear, false};
  const FitParameter lg{"volume_m3", 1e-25, 1e-23, ParamScale::Log, false};
  CHECK(to_scaled(lin, 0.005) == 0.0);
  CHECK(to_scaled(lin, 0.02) == 1.0);
  CHECK(from_scaled(lin, to_scaled(lin, 0.013)) == doctest::Approx(0.013));
  CHECK(to_scaled(lg, 1e-24) == doctest::Approx(0.5));
  CHECK(from_scaled(lg, to_scaled(lg, 3e-24)) == doctest::Approx(3e-24));
}

TEST_CASE("parameter access by deck name") {
  auto in = reference_device_inputs();
  for (const auto& name : parameter_names()) {
    const double v = get_parameter(in, name);
    set_parameter(in, name, v * 1.1);
    CHECK(get_parameter(in, name) == doctest::Approx(v * 1.1));
  }
  CHECK_THROWS_AS(get_parameter(in, "nope"), Error);
}

TEST_CASE("default fit space") {
  auto in = reference_device_inputs();
  in.delta.reset();
  const auto space = FitSpace::defaults(in);
  CHECK(space.free_count() == 5);
  CHECK(space.derives_delta());
  space.validate();
  for (const auto& p : space.params) {
    const double v = get_parameter(in, p.name);
    CHECK(p.lower < v);
    CHECK(p.upper >= v);
  }
  FitSpace bad{{{"alpha", 0.1, 0.01, ParamScale::Linear, false}}};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("loss arithmetic on a shifted dataset") {
  const DeviceParams p(reference_device_inputs());
  const double ic = normalize(p, 0.0).i_c;
  LossOptions opt;
  opt.solver.order = 120;
  const std::vector<double> targets{0.5, 1e-2, 1e-3};
  const auto inv = invert_wer(p, 2.0 * ic, targets, opt.solver);
  std::vector<ErrorRatePoint> data;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    ErrorRatePoint pt;
    pt.current = 2.0 * ic;
    pt.pulse_width = 2.0 * *inv.times[k];
    pt.rate = targets[k];
    data.push_back(pt);
  }
  const auto b = evaluate_loss(reference_device_inputs(), data, opt);
  const double r = std::log10(2.0);
  CHECK(b.loss == doctest::Approx(3.0 * r * r).epsilon(1e-9));
  for (const auto& res : b.residuals) CHECK(*res == doctest::Approx(-r).epsilon(1e-9));

  opt.preset = WeightPreset::InverseTime;
  const auto w = resolve_weights(data, opt);
  double mean = 0.0;
  for (double v : w) mean += v / 3.0;
  CHECK(mean == doctest::Approx(1.0));
  CHECK(w[0] > w[2]);
}

TEST_CASE("basin hopping minimizes a bowl") {
  const std::vector<double> c{0.3, 0.7, 0.55};
  std::size_t calls = 0;
  auto f = [&](const std::vector<double>& z) {
    ++calls;
    double s = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) s += (z[k] - c[k]) * (z[k] - c[k]);
    return s;
  };
  FitBudget budget;
  budget.hops = 5;
  const auto r = minimize_box(f, {0.9, 0.1, 0.2}, budget, 42);
  CHECK(r.loss < 1e-10);
  for (std::size_t k = 0; k < c.size(); ++k) CHECK(r.z[k] == doctest::Approx(c[k]).epsilon(1e-4));
  CHECK(r.evaluations == calls);
  CHECK(r.trace.front().hop == 0);

  const auto again = minimize_box(f, {0.9, 0.1, 0.2}, budget, 42);
  CHECK(again.z == r.z);
  CHECK(again.evaluations == r.evaluations);
}

TEST_CASE("basin hopping respects the box and the budget") {
  auto f = [](const std::vector<double>& z) { return -z[0] - z[1]; };
  FitBudget budget;
  budget.hops = 3;
  const auto r = minimize_box(f, {0.5, 0.5}, budget, 1);
  CHECK(r.z[0] == doctest::Approx(1.0));
  CHECK(r.z[1] == doctest::Approx(1.0));

  budget.max_evaluations = 7;
  const auto cut = minimize_box([](const std::vector<double>& z) { return std::sin(9 * z[0]); },
                                {0.5}, budget, 1);
  CHECK(cut.evaluations <= 7);
  CHECK(cut.status == FitStatus::BudgetExhausted);

  FitBudget target;
  target.target_loss = 0.5;
  const auto early = minimize_box([](const std::vector<double>& z) { return z[0]; }, {0.9}, target, 1);
  CHECK(early.status == FitStatus::TargetReached);
}

TEST_CASE("all-frozen space returns after one evaluation") {
  const DeviceParams p(reference_device_inputs());
  const double ic = normalize(p, 0.0).i_c;
  std::vector<ErrorRatePoint> data(3);
  for (std::size_t k = 0; k < 3; ++k) {
    data[k].current = 2.0 * ic;
    data[k].pulse_width = 1e-8 * (k + 1);
    data[k].rate = std::pow(10.0, -1.0 - k);
  }
  auto space = FitSpace::defaults(reference_device_inputs());
  for (auto& q : space.params) q.frozen = true;
  LossOptions opt;
  opt.solver.order = 80;
  const auto r = fit_parameters(data, reference_device_inputs(), space, FitBudget{}, 1, opt);
  CHECK(r.evaluations == 1);
  CHECK(r.loss == r.initial_loss);
  CHECK(r.best.m_s == reference_device_inputs().m_s);
}

TEST_CASE("calibrated c_f reproduces the target crossing time") {
  const DeviceParams p(reference_device_inputs());
  const double ic = normalize(p, 0.0).i_c;
  CalibrationOptions opt;
  opt.solver.order = 120;
  const auto c = calibrate_cf(p, 0.5, 2.0 * ic, opt);
  CHECK(std::abs(c.t_switch - c.t_star) <= 1e-3 * c.t_star);
  const auto t = fictitious_switch_time(p, 2.0 * ic, c.c_f, 10.0 * c.t_star, default_time_step(p));
  REQUIRE(t);
  CHECK(*t == c.t_switch);
}
