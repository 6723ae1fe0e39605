//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include "dhn/error.hpp"
#include "dhn/optimizer.hpp"
#include "test_support.hpp"

using namespace dhn;

TEST_CASE("bounded quadratic bowl") {
  const Eigen::Index n = 12;
  Eigen::VectorXd weight(n), center(n);
  test::Rng rng(6);
  for (Eigen::Index i = 0; i < n; ++i) {
    weight[i] = rng.uniform(0.5, 20.0);
    center[i] = rng.uniform(60.0, 160.0);
  }
  center[0] = 150.0;  // pushes against the upper bound
  const SmoothObjective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const Eigen::VectorXd d = x - center;
    if (g)
      *g = 2.0 * weight.cwiseProduct(d);
    return d.cwiseProduct(weight).dot(d);
  };
  Box box{Eigen::VectorXd::Constant(n, 30.0), Eigen::VectorXd::Constant(n, 140.0)};
  const LbfgsResult r = lbfgs_minimize(f, Eigen::VectorXd::Constant(n, 100.0), box, {});
  CHECK(r.status == LbfgsStatus::converged);
  CHECK(r.iterations <= 30);
  CHECK(r.x[0] == 140.0);
  CHECK((r.x - box.project(center)).cwiseAbs().maxCoeff() < 1e-4);
  for (std::size_t i = 1; i < r.f_trace.size(); ++i)
    CHECK(r.f_trace[i] <= r.f_trace[i - 1]);
}

TEST_CASE("unconstrained Rosenbrock") {
  const SmoothObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    if (g)
      *g = Eigen::Vector2d(-2.0 * a - 400.0 * x[0] * b, 200.0 * b);
    return a * a + 100.0 * b * b;
  };
  LbfgsConfig cfg;
  cfg.gradient_tolerance = 1e-10;
  const LbfgsResult r = lbfgs_minimize(f, Eigen::Vector2d(-1.2, 1.0), Box::unbounded(2), cfg);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("quadratic penalty toy problem") {
  // min u^2 s.t. 1 - u <= 0; the penalized minimizer is lambda / (2 + lambda)
  for (double lambda : {10.0, 1e3, 1e6}) {
    const SmoothObjective f = [lambda](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
      const double c = std::max(0.0, 1.0 - x[0]);
      if (g)
        *g = Eigen::VectorXd::Constant(1, 2.0 * x[0] - lambda * c);
      return x[0] * x[0] + 0.5 * lambda * c * c;
    };
    LbfgsConfig cfg;
    cfg.gradient_tolerance = 1e-12;
    const LbfgsResult r =
        lbfgs_minimize(f, Eigen::VectorXd::Zero(1), Box::unbounded(1), cfg);
    CHECK(r.x[0] == doctest::Approx(lambda / (2.0 + lambda)).epsilon(1e-8));
  }
}

TEST_CASE("broken gradients end in a status, not an exception") {
  const SmoothObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g)
      *g = -2.0 * x;  // wrong sign
    return x.squaredNorm();
  };
  const LbfgsResult r =
      lbfgs_minimize(f, Eigen::VectorXd::Constant(3, 1.0), Box::unbounded(3), {});
  CHECK(r.status == LbfgsStatus::line_search_failed);
  CHECK(r.f == doctest::Approx(3.0));
}

TEST_CASE("box projection is idempotent") {
  test::Rng rng(12);
  Box box{Eigen::VectorXd::Constant(20, -1.0), Eigen::VectorXd::Constant(20, 2.0)};
  Eigen::VectorXd x(20);
  for (Eigen::Index i = 0; i < 20; ++i)
    x[i] = rng.uniform(-5, 5);
  const Eigen::VectorXd p = box.project(x);
  CHECK(box.project(p) == p);
  CHECK(p.minCoeff() >= -1.0);
  CHECK(p.maxCoeff() <= 2.0);
}

TEST_CASE("configuration checks") {
  LbfgsConfig bad;
  bad.memory = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  OptimizerConfig o;
  o.penalty_factor = 1.0;
  CHECK_THROWS_AS(o.validate(), InputError);

  const std::vector<double> schedule = penalty_schedule(OptimizerConfig{});
  REQUIRE(schedule.size() == 7);
  CHECK(schedule.front() == 10.0);
  CHECK(schedule.back() == doctest::Approx(1e7));
}

TEST_CASE("adjoint gradient matches central differences on a short chain") {
  const SyntheticNetwork net = pipe_chain({.cells = 3});
  const Scenario s = test::scenario_from(net, {900.0, 16}, 50000.0, 10.0);
  PriceModel price;
  price.is_static = false;
  price.base_price_eur_mwh = TimeSeries({0.0, 16 * 900.0}, {40.0, 90.0});
  const Scenario dynamic = with_price(s, price);

  test::Rng rng(91);
  ControlTrajectory u{Eigen::MatrixXd(1, 16)};
  for (Eigen::Index k = 0; k < 16; ++k)
    u.supply_c(0, k) = rng.uniform(78.0, 100.0);
  ObjectiveConfig cfg;
  cfg.penalty_weight = 100.0;

  for (const Scenario* sc : {&s, &dynamic}) {
    for (bool pinned : {false, true}) {
      Scenario run = *sc;
      if (pinned)
        run.initial_control = Eigen::VectorXd::Constant(1, 95.0);
      const Eigen::MatrixXd g = gradient(run, cfg, u);
      for (Eigen::Index k = 0; k < 16; ++k) {
        const double h = 1e-4;
        ControlTrajectory up = u, down = u;
        up.supply_c(0, k) += h;
        down.supply_c(0, k) -= h;
        const double fd =
            (total_objective(run, cfg, up) - total_objective(run, cfg, down)) / (2.0 * h);
        CHECK(test::relative_error(g(0, k), fd, 1e-6) < 1e-5);
      }
    }
  }
}

TEST_CASE("penalty continuation on a short chain") {
  const SyntheticNetwork net = pipe_chain({.cells = 4});
  Scenario s = test::scenario_from(net, {900.0, 48}, 60000.0, 10.0,
                                   Eigen::VectorXd::Constant(1, 110.0));
  const ControlTrajectory u0 = constant_control(s, 110.0);
  OptimizerConfig cfg;
  const OptimizationReport r = optimize(s, u0, cfg);
  REQUIRE(r.rounds.size() == 7);
  CHECK_FALSE(r.aborted);
  CHECK(r.final_max_violation() < 0.1);
  const ObjectiveConfig plain = cfg.objective(1.0);
  const StateTrajectory y0 = simulate(s.thermal(), s.forcing, u0, s.initial_control);
  const double baseline = evaluate(s, plain, u0, y0).loss;
  CHECK(r.rounds.back().terms.loss < baseline);
  CHECK(r.control.supply_c.maxCoeff() <= 140.0);
}
