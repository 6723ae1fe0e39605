//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dhn/problem.hpp"

namespace dhn {

struct ObjectiveGradient {
  ObjectiveBreakdown terms;
  Eigen::MatrixXd grad;  // plants x steps, shaped like the control
};

/// Value and exact gradient of the penalized objective by the discrete
/// adjoint: one forward sweep, one backward sweep with the transposed
/// factorization. When the scenario does not pin the initial control, the
/// steady initial state's dependence on the first control column is included.
ObjectiveGradient objective_gradient(const Scenario& scenario,
                                     const ObjectiveConfig& config,
                                     const ControlTrajectory& u, int threads = 1);

Eigen::MatrixXd gradient(const Scenario& scenario, const ObjectiveConfig& config,
                         const ControlTrajectory& u, int threads = 1);

// ---------------------------------------------------------------------------
// Projected L-BFGS

/// Returns f(x); writes the gradient when `grad` is not null.
using SmoothObjective = std::function<double(const Eigen::VectorXd& x,
                                             Eigen::VectorXd* grad)>;

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Box unbounded(Eigen::Index n);
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;
};

struct LbfgsConfig {
  int memory = 10;
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;  // on ||P(x - g) - x||_inf / (1 + |f|)
  double f_tolerance = 1e-13;        // relative decrease treated as stalled
  double armijo = 1e-4;
  double wolfe = 0.9;
  int max_backtracks = 40;  // trial steps per line search

  void validate() const;
};

enum class LbfgsStatus { converged, stalled, max_iterations, line_search_failed };

std::string_view to_string(LbfgsStatus status);

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0;
  double projected_gradient_norm = 0;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::max_iterations;
  std::vector<double> f_trace;  // value at every accepted iterate, x0 first
};

LbfgsResult lbfgs_minimize(const SmoothObjective& objective, const Eigen::VectorXd& x0,
                           const Box& bounds, const LbfgsConfig& config);

// ---------------------------------------------------------------------------
// Penalty continuation

struct OptimizerConfig {
  LbfgsConfig lbfgs;
  double initial_penalty = 10.0;
  double penalty_factor = 10.0;
  double penalty_stop = 1e6;  // last round is the first with lambda above this
  double tikhonov_weight = 100.0;
  double energy_unit_j = 3.6e9;
  int threads = 1;

  void validate() const;
  ObjectiveConfig objective(double penalty_weight) const;
};

struct OptimizationRound {
  double penalty_weight = 0;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::max_iterations;
  ObjectiveBreakdown terms;
  double projected_gradient_norm = 0;
};

struct OptimizationReport {
  std::vector<OptimizationRound> rounds;
  ControlTrajectory control;
  bool aborted = false;
  std::string diagnostic;
  double wall_time_s = 0;

  double final_max_violation() const {
    return rounds.empty() ? 0.0 : rounds.back().terms.max_violation_c;
  }
};

/// Penalty weights visited by the continuation loop.
std::vector<double> penalty_schedule(const OptimizerConfig& config);

OptimizationReport optimize(const Scenario& scenario, const ControlTrajectory& u0,
                            const OptimizerConfig& config);

}  // namespace dhn
