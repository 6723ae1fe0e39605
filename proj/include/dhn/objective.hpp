//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <vector>

#include <Eigen/Core>

#include "dhn/series.hpp"
#include "dhn/thermal.hpp"

namespace dhn {

/// Price weighting of plant energy. A static model weighs every joule with 1;
/// otherwise the base price is scaled by alpha for generated heat and by beta
/// for heat taken back out of the network.
struct PriceModel {
  bool is_static = true;
  TimeSeries base_price_eur_mwh;
  double alpha = 1.0;
  double beta = 0.0;

  void validate(double horizon_s) const;
  double base(double t_s) const;
  /// Base price at the end of every step, t_1 .. t_steps.
  std::vector<double> sample_steps(const TimeGrid& grid) const;
};

double price_weight(double t_s, double y_supply_c, double y_return_c,
                    const PriceModel& model);
/// Same as above for an already sampled base price.
double price_weight_sampled(double base_price, double y_supply_c,
                            double y_return_c, const PriceModel& model);

struct ConstraintSet {
  double consumer_supply_min_c = 80.0;
  double consumer_return_min_c = 30.0;
  double plant_max_c = 140.0;
  double plant_min_c = 30.0;

  void validate() const;
};

struct ObjectiveConfig {
  double tikhonov_weight = 100.0;
  double penalty_weight = 10.0;  // lambda_p
  /// Loss units: joules (times price) are divided by this before entering the
  /// penalized objective. 3.6e9 J = 1 MWh, so static runs are in MWh and
  /// priced runs in EUR.
  double energy_unit_j = 3.6e9;

  void validate() const;
};

/// Operating loss c_p sum_plants sum_steps dt mdot (y_supply - y_return) p,
/// rectangle rule over the grid, in J times price units (J for static prices).
/// `step_price` holds the base price at t_1 .. t_steps.
double loss_energy(const ThermalModel& model, const StateTrajectory& y,
                   const PriceModel& price, const std::vector<double>& step_price);

/// Per-step contributions to loss_energy (same units), one per step.
std::vector<double> loss_energy_steps(const ThermalModel& model,
                                      const StateTrajectory& y,
                                      const PriceModel& price,
                                      const std::vector<double>& step_price);

/// sum over plants and steps of ((u_k - u_{k-1}) / dt)^2.
double tikhonov(const ControlTrajectory& u, const TimeGrid& grid);

/// c = bound - temperature for every consumer and step 1..steps; positive
/// values are violations in degC.
struct ConstraintValues {
  Eigen::MatrixXd consumer_supply;  // consumers x steps
  Eigen::MatrixXd consumer_return;  // consumers x steps

  double max_violation() const;
  std::vector<double> flatten() const;
};

ConstraintValues constraint_violations(const ThermalModel& model,
                                       const StateTrajectory& y,
                                       const ConstraintSet& constraints);

/// (lambda / 2) sum max(0, c)^2
double penalty(const std::vector<double>& c_values, double lambda);
double penalty(const ConstraintValues& c_values, double lambda);

/// Componentwise clamp into [plant_min, plant_max].
ControlTrajectory project_control(const ControlTrajectory& u,
                                  const ConstraintSet& constraints);

}  // namespace dhn
