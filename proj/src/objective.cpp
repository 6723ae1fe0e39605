//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "dhn/objective.hpp"

#include <algorithm>
#include <cmath>

#include "dhn/error.hpp"

namespace dhn {

void PriceModel::validate(double horizon_s) const {
  if (!(alpha > 0))
    throw ValidationError("price model: alpha must be > 0");
  if (!(beta >= 0))
    throw ValidationError("price model: beta must be >= 0");
  if (!is_static && !base_price_eur_mwh.covers(0.0, horizon_s))
    throw ValidationError("price curve does not cover the horizon [0, "
                          + std::to_string(horizon_s) + "] s");
}

double PriceModel::base(double t_s) const {
  return is_static ? 1.0 : base_price_eur_mwh(t_s);
}

std::vector<double> PriceModel::sample_steps(const TimeGrid& grid) const {
  std::vector<double> out(grid.steps);
  for (std::size_t k = 0; k < grid.steps; ++k)
    out[k] = base(grid.time(k + 1));
  return out;
}

double price_weight_sampled(double base_price, double y_supply_c,
                            double y_return_c, const PriceModel& model) {
  if (model.is_static)
    return 1.0;
  return base_price * (y_supply_c >= y_return_c ? model.alpha : model.beta);
}

double price_weight(double t_s, double y_supply_c, double y_return_c,
                    const PriceModel& model) {
  return price_weight_sampled(model.base(t_s), y_supply_c, y_return_c, model);
}

void ConstraintSet::validate() const {
  if (!(plant_max_c > consumer_supply_min_c
        && consumer_supply_min_c > consumer_return_min_c))
    throw ValidationError(
        "constraints must satisfy plant max > consumer supply min > consumer return min");
  if (!(plant_min_c < plant_max_c))
    throw ValidationError("plant minimum must lie below the plant maximum");
}

void ObjectiveConfig::validate() const {
  if (!(tikhonov_weight >= 0))
    throw ValidationError("tikhonov weight must be >= 0");
  if (!(penalty_weight > 0))
    throw ValidationError("penalty weight must be > 0");
  if (!(energy_unit_j > 0))
    throw ValidationError("energy unit must be > 0");
}

std::vector<double> loss_energy_steps(const ThermalModel& model,
                                      const StateTrajectory& y,
                                      const PriceModel& price,
                                      const std::vector<double>& step_price) {
  const BoundarySpec& bc = model.boundary();
  const std::size_t steps = model.grid().steps;
  if (step_price.size() != steps
      || y.temp_c.cols() != static_cast<Eigen::Index>(steps + 1))
    throw ValidationError("loss_energy: trajectory or prices do not match the grid");
  const double scale = model.constants().cp_j_per_kg_c * model.grid().dt_s;

  std::vector<double> out(steps, 0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    const auto col = static_cast<Eigen::Index>(k + 1);
    for (std::size_t p = 0; p < bc.num_plants(); ++p) {
      const double ys = y.temp_c(static_cast<Eigen::Index>(bc.plant_supply_nodes[p]), col);
      const double yr = y.temp_c(static_cast<Eigen::Index>(bc.plant_return_nodes[p]), col);
      out[k] += scale * model.flow()[bc.producer_edges[p]] * (ys - yr)
                * price_weight_sampled(step_price[k], ys, yr, price);
    }
  }
  return out;
}

double loss_energy(const ThermalModel& model, const StateTrajectory& y,
                   const PriceModel& price, const std::vector<double>& step_price) {
  double sum = 0.0;
  for (double v : loss_energy_steps(model, y, price, step_price))
    sum += v;
  return sum;
}

double tikhonov(const ControlTrajectory& u, const TimeGrid& grid) {
  double sum = 0.0;
  for (Eigen::Index p = 0; p < u.supply_c.rows(); ++p)
    for (Eigen::Index k = 1; k < u.supply_c.cols(); ++k) {
      const double rate = (u.supply_c(p, k) - u.supply_c(p, k - 1)) / grid.dt_s;
      sum += rate * rate;
    }
  return sum;
}

double ConstraintValues::max_violation() const {
  double worst = 0.0;
  if (consumer_supply.size() > 0)
    worst = std::max(worst, consumer_supply.maxCoeff());
  if (consumer_return.size() > 0)
    worst = std::max(worst, consumer_return.maxCoeff());
  return worst;
}

std::vector<double> ConstraintValues::flatten() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(consumer_supply.size() + consumer_return.size()));
  out.insert(out.end(), consumer_supply.data(),
             consumer_supply.data() + consumer_supply.size());
  out.insert(out.end(), consumer_return.data(),
             consumer_return.data() + consumer_return.size());
  return out;
}

ConstraintValues constraint_violations(const ThermalModel& model,
                                       const StateTrajectory& y,
                                       const ConstraintSet& constraints) {
  const BoundarySpec& bc = model.boundary();
  const auto consumers = static_cast<Eigen::Index>(bc.num_consumers());
  const auto steps = static_cast<Eigen::Index>(model.grid().steps);
  ConstraintValues c;
  c.consumer_supply.resize(consumers, steps);
  c.consumer_return.resize(consumers, steps);
  for (Eigen::Index k = 0; k < steps; ++k)
    for (Eigen::Index i = 0; i < consumers; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      c.consumer_supply(i, k) =
          constraints.consumer_supply_min_c
          - y.temp_c(static_cast<Eigen::Index>(bc.consumer_supply_nodes[idx]), k + 1);
      c.consumer_return(i, k) =
          constraints.consumer_return_min_c
          - y.temp_c(static_cast<Eigen::Index>(bc.consumer_return_nodes[idx]), k + 1);
    }
  return c;
}

double penalty(const std::vector<double>& c_values, double lambda) {
  double sum = 0.0;
  for (double c : c_values) {
    const double v = std::max(0.0, c);
    sum += v * v;
  }
  return 0.5 * lambda * sum;
}

double penalty(const ConstraintValues& c_values, double lambda) {
  return penalty(c_values.flatten(), lambda);
}

ControlTrajectory project_control(const ControlTrajectory& u,
                                  const ConstraintSet& constraints) {
  ControlTrajectory out = u;
  out.supply_c = u.supply_c.cwiseMax(constraints.plant_min_c)
                     .cwiseMin(constraints.plant_max_c);
  return out;
}

}  // namespace dhn
