//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "dhn/problem.hpp"

#include <algorithm>

#include "dhn/parallel.hpp"

namespace dhn {

ObjectiveBreakdown evaluate(const Scenario& scenario, const ObjectiveConfig& config,
                            const ControlTrajectory& u, const StateTrajectory& y,
                            int threads) {
  config.validate();
  const ThermalModel& model = scenario.thermal();
  const BoundarySpec& bc = model.boundary();
  const std::size_t steps = model.grid().steps;
  const double scale = model.constants().cp_j_per_kg_c * model.grid().dt_s;
  const ConstraintSet& cs = scenario.constraints;

  std::vector<double> loss(steps, 0.0), hinge(steps, 0.0), worst(steps, 0.0);
  parallel_for(steps, threads, [&](std::size_t k) {
    const auto col = static_cast<Eigen::Index>(k + 1);
    for (std::size_t p = 0; p < bc.num_plants(); ++p) {
      const double ys = y.temp_c(static_cast<Eigen::Index>(bc.plant_supply_nodes[p]), col);
      const double yr = y.temp_c(static_cast<Eigen::Index>(bc.plant_return_nodes[p]), col);
      loss[k] += scale * model.flow()[bc.producer_edges[p]] * (ys - yr)
                 * price_weight_sampled(scenario.step_price[k], ys, yr, scenario.price);
    }
    for (std::size_t c = 0; c < bc.num_consumers(); ++c) {
      const double cs_v = cs.consumer_supply_min_c
          - y.temp_c(static_cast<Eigen::Index>(bc.consumer_supply_nodes[c]), col);
      const double cr_v = cs.consumer_return_min_c
          - y.temp_c(static_cast<Eigen::Index>(bc.consumer_return_nodes[c]), col);
      const double a = std::max(0.0, cs_v);
      const double b = std::max(0.0, cr_v);
      hinge[k] += a * a + b * b;
      worst[k] = std::max({worst[k], cs_v, cr_v});
    }
  });

  ObjectiveBreakdown out;
  double hinge_sum = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    out.loss_raw += loss[k];
    hinge_sum += hinge[k];
    out.max_violation_c = std::max(out.max_violation_c, worst[k]);
  }
  out.loss = out.loss_raw / config.energy_unit_j;
  out.tikhonov_raw = tikhonov(u, model.grid());
  out.tikhonov = config.tikhonov_weight * out.tikhonov_raw;
  out.penalty = 0.5 * config.penalty_weight * hinge_sum;
  out.total = out.loss + out.tikhonov + out.penalty;
  return out;
}

double total_objective(const Scenario& scenario, const ObjectiveConfig& config,
                       const ControlTrajectory& u, int threads) {
  const StateTrajectory y =
      simulate(scenario.thermal(), scenario.forcing, u, scenario.initial_control);
  return evaluate(scenario, config, u, y, threads).total;
}

ControlTrajectory constant_control(const Scenario& scenario, double supply_c) {
  ControlTrajectory u;
  u.supply_c = Eigen::MatrixXd::Constant(
      static_cast<Eigen::Index>(scenario.num_plants()),
      static_cast<Eigen::Index>(scenario.grid().steps), supply_c);
  return u;
}

}  // namespace dhn
