//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include "dhn/error.hpp"
#include "dhn/problem.hpp"
#include "test_support.hpp"

using namespace dhn;

namespace {

// Trajectory with every node at `supply` except the plant return at `ret`.
StateTrajectory plant_split(const ThermalModel& m, double supply, double ret) {
  StateTrajectory y{Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(m.graph().num_nodes()),
                                              static_cast<Eigen::Index>(m.grid().steps + 1),
                                              supply)};
  y.temp_c.row(static_cast<Eigen::Index>(m.boundary().plant_return_nodes[0])).setConstant(ret);
  return y;
}

PriceModel two_level(double alpha, double beta) {
  PriceModel p;
  p.is_static = false;
  p.base_price_eur_mwh = TimeSeries({0.0, 3600.0, 3601.0, 7200.0}, {40.0, 40.0, 90.0, 90.0});
  p.alpha = alpha;
  p.beta = beta;
  return p;
}

}  // namespace

TEST_CASE("loss over one hour of constant extraction") {
  SyntheticNetwork net = pipe_chain({});
  const ThermalModel m(net.graph, net.flow, {}, {900.0, 4});
  const PriceModel price;
  const StateTrajectory y = plant_split(m, 80.0, 40.0);
  CHECK(loss_energy(m, y, price, price.sample_steps(m.grid()))
        == doctest::Approx(602.784e6).epsilon(1e-14));
  CHECK(loss_energy(m, plant_split(m, 60.0, 60.0), price, price.sample_steps(m.grid())) == 0.0);

  SUBCASE("rectangle rule is consistent under coarser steps") {
    const ThermalModel coarse(net.graph, net.flow, {}, {1800.0, 2});
    CHECK(loss_energy(coarse, plant_split(coarse, 80.0, 40.0), price,
                      price.sample_steps(coarse.grid()))
          == doctest::Approx(602.784e6).epsilon(1e-14));
  }
}

TEST_CASE("price weight") {
  const PriceModel p = two_level(1.5, 0.0);
  CHECK(price_weight(1800.0, 80.0, 40.0, p) == doctest::Approx(60.0));
  CHECK(price_weight(7200.0, 80.0, 80.0, p) == doctest::Approx(135.0));
  CHECK(price_weight(7200.0, 40.0, 80.0, p) == 0.0);
  CHECK(price_weight(7200.0, 40.0, 80.0, two_level(1.0, 0.5)) == doctest::Approx(45.0));
  CHECK(price_weight(123.0, 40.0, 80.0, PriceModel{}) == 1.0);
  CHECK(price_weight(9e9, 80.0, 40.0, PriceModel{}) == 1.0);

  SUBCASE("steps sample the price at their end") {
    const std::vector<double> s = p.sample_steps({3600.0, 2});
    CHECK(s[0] == doctest::Approx(40.0));
    CHECK(s[1] == doctest::Approx(90.0));
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(p.validate(10000.0), ValidationError);
    CHECK_NOTHROW(p.validate(7200.0));
    CHECK_THROWS_AS(two_level(0.0, 0.0).validate(7200.0), ValidationError);
  }
}

TEST_CASE("tikhonov") {
  const TimeGrid grid{900.0, 5};
  ControlTrajectory u{Eigen::MatrixXd::Constant(2, 5, 90.0)};
  CHECK(tikhonov(u, grid) == 0.0);
  u.supply_c(1, 3) += 6.0;  // up and back down: two jumps
  CHECK(tikhonov(u, grid) == doctest::Approx(2.0 * 36.0 / (900.0 * 900.0)).epsilon(1e-15));
  u.supply_c(1, 4) += 6.0;  // now a single jump
  CHECK(tikhonov(u, grid) == doctest::Approx(36.0 / (900.0 * 900.0)).epsilon(1e-15));

  SUBCASE("quadratic homogeneity about a constant shift") {
    test::Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      ControlTrajectory v{Eigen::MatrixXd(2, 5)};
      for (Eigen::Index i = 0; i < v.supply_c.size(); ++i)
        v.supply_c.data()[i] = rng.uniform(50, 120);
      const double c = rng.uniform(-3, 3), shift = rng.uniform(-20, 20);
      ControlTrajectory w{(c * v.supply_c).array() + shift};
      CHECK(tikhonov(w, grid) == doctest::Approx(c * c * tikhonov(v, grid)).epsilon(1e-12));
    }
  }
}

TEST_CASE("constraint values and penalty") {
  SyntheticNetwork net = pipe_chain({});
  const ThermalModel m(net.graph, net.flow, {}, {900.0, 3});
  const auto cs = static_cast<Eigen::Index>(m.graph().node_index("cs"));
  const auto cr = static_cast<Eigen::Index>(m.graph().node_index("cr"));
  StateTrajectory y{Eigen::MatrixXd::Constant(4, 4, 50.0)};
  y.temp_c(cs, 1) = 85.0;
  y.temp_c(cs, 2) = 78.0;
  y.temp_c(cs, 3) = 80.0;
  y.temp_c(cr, 1) = 30.0;
  y.temp_c(cr, 2) = 31.0;
  y.temp_c(cr, 3) = 27.5;
  const ConstraintValues c = constraint_violations(m, y, ConstraintSet{});
  CHECK(c.consumer_supply(0, 0) == -5.0);
  CHECK(c.consumer_supply(0, 1) == 2.0);
  CHECK(c.consumer_supply(0, 2) == 0.0);
  CHECK(c.consumer_return(0, 0) == 0.0);
  CHECK(c.consumer_return(0, 2) == 2.5);
  CHECK(c.max_violation() == 2.5);
  CHECK(penalty(c, 100.0) == doctest::Approx(50.0 * (4.0 + 6.25)).epsilon(1e-15));

  CHECK(penalty(std::vector<double>{2.0}, 100.0) == 200.0);
  CHECK(penalty(std::vector<double>{-1.0, 0.0, -3.0}, 100.0) == 0.0);

  SUBCASE("penalty divided by its weight does not depend on the weight") {
    test::Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> v(10);
      for (double& x : v)
        x = rng.uniform(-5, 5);
      const double l1 = rng.uniform(1, 1e3), l2 = rng.uniform(1, 1e6);
      CHECK(penalty(v, l1) / l1 == doctest::Approx(penalty(v, l2) / l2).epsilon(1e-13));
    }
  }
}

TEST_CASE("projection clamps and is idempotent") {
  const ConstraintSet k{};
  test::Rng rng(4);
  ControlTrajectory u{Eigen::MatrixXd(3, 30)};
  for (Eigen::Index i = 0; i < u.supply_c.size(); ++i)
    u.supply_c.data()[i] = rng.uniform(0, 200);
  u.supply_c(0, 0) = 150.0;
  u.supply_c(0, 1) = 100.0;
  const ControlTrajectory p = project_control(u, k);
  CHECK(p.supply_c(0, 0) == 140.0);
  CHECK(p.supply_c(0, 1) == 100.0);
  CHECK(p.supply_c.maxCoeff() <= 140.0);
  CHECK(p.supply_c.minCoeff() >= 30.0);
  CHECK(project_control(p, k).supply_c == p.supply_c);
}

TEST_CASE("composed objective") {
  const SyntheticNetwork net = pipe_chain({});
  const Scenario s = test::scenario_from(net, {900.0, 24}, 60000.0, 10.0);
  const ControlTrajectory u = constant_control(s, 110.0);

  SUBCASE("feasible control without smoothing is the loss alone") {
    ObjectiveConfig cfg;
    cfg.tikhonov_weight = 0.0;
    const StateTrajectory y = simulate(s.thermal(), s.forcing, u, s.initial_control);
    const ObjectiveBreakdown t = evaluate(s, cfg, u, y);
    CHECK(t.max_violation_c == 0.0);
    CHECK(t.penalty == 0.0);
    CHECK(t.total == doctest::Approx(loss_energy(s.thermal(), y, s.price, s.step_price)
                                     / cfg.energy_unit_j).epsilon(1e-14));
    CHECK(total_objective(s, cfg, u) == t.total);
  }
  SUBCASE("raising the penalty weight never lowers the value") {
    const ControlTrajectory cold = constant_control(s, 75.0);
    double last = -1.0;
    for (double lambda : {1.0, 10.0, 100.0, 1e4}) {
      ObjectiveConfig cfg;
      cfg.penalty_weight = lambda;
      const double f = total_objective(s, cfg, cold);
      CHECK(f > last);
      last = f;
    }
  }
  SUBCASE("thread count does not change the value") {
    const ObjectiveConfig cfg;
    CHECK(total_objective(s, cfg, constant_control(s, 79.0), 4)
          == total_objective(s, cfg, constant_control(s, 79.0), 1));
  }
}
