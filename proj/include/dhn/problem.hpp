//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <Eigen/Core>

#include "dhn/objective.hpp"
#include "dhn/scenario.hpp"

namespace dhn {

/// Terms of the penalized objective at one control.
struct ObjectiveBreakdown {
  double loss_raw = 0;    // J (static price) or J * EUR/MWh
  double loss = 0;        // loss_raw / energy_unit_j
  double tikhonov_raw = 0;
  double tikhonov = 0;    // weighted
  double penalty = 0;
  double max_violation_c = 0;
  double total = 0;       // loss + tikhonov + penalty
};

/// Objective terms for an already simulated trajectory. Per-step terms are
/// computed on `threads` workers and summed in step order.
ObjectiveBreakdown evaluate(const Scenario& scenario, const ObjectiveConfig& config,
                            const ControlTrajectory& u, const StateTrajectory& y,
                            int threads = 1);

/// Simulates once and returns the penalized objective value.
double total_objective(const Scenario& scenario, const ObjectiveConfig& config,
                       const ControlTrajectory& u, int threads = 1);

/// Plant supply temperatures constant in time.
ControlTrajectory constant_control(const Scenario& scenario, double supply_c);

}  // namespace dhn
