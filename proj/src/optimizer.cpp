//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "dhn/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

#include "dhn/error.hpp"
#include "dhn/parallel.hpp"

namespace dhn {

ObjectiveGradient objective_gradient(const Scenario& scenario,
                                     const ObjectiveConfig& config,
                                     const ControlTrajectory& u, int threads) {
  const ThermalModel& model = scenario.thermal();
  const BoundarySpec& bc = model.boundary();
  const std::size_t steps = model.grid().steps;
  const auto n = static_cast<Eigen::Index>(model.graph().num_nodes());
  const ConstraintSet& cs = scenario.constraints;

  const StateTrajectory y =
      simulate(model, scenario.forcing, u, scenario.initial_control);
  ObjectiveGradient out;
  out.terms = evaluate(scenario, config, u, y, threads);

  // dJ/dy_{k+1} in column k
  const double loss_scale = model.constants().cp_j_per_kg_c * model.grid().dt_s
                            / config.energy_unit_j;
  Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(steps));
  parallel_for(steps, threads, [&](std::size_t k) {
    const auto col = static_cast<Eigen::Index>(k + 1);
    auto g = dy.col(static_cast<Eigen::Index>(k));
    for (std::size_t p = 0; p < bc.num_plants(); ++p) {
      const auto is = static_cast<Eigen::Index>(bc.plant_supply_nodes[p]);
      const auto ir = static_cast<Eigen::Index>(bc.plant_return_nodes[p]);
      const double w = loss_scale * model.flow()[bc.producer_edges[p]]
          * price_weight_sampled(scenario.step_price[k], y.temp_c(is, col),
                                 y.temp_c(ir, col), scenario.price);
      g[is] += w;
      g[ir] -= w;
    }
    for (std::size_t c = 0; c < bc.num_consumers(); ++c) {
      const auto is = static_cast<Eigen::Index>(bc.consumer_supply_nodes[c]);
      const auto ir = static_cast<Eigen::Index>(bc.consumer_return_nodes[c]);
      const double vs = cs.consumer_supply_min_c - y.temp_c(is, col);
      const double vr = cs.consumer_return_min_c - y.temp_c(ir, col);
      if (vs > 0)
        g[is] -= config.penalty_weight * vs;
      if (vr > 0)
        g[ir] -= config.penalty_weight * vr;
    }
  });

  const ThermalSystem& transient = model.transient();
  const Eigen::VectorXd& storage = transient.storage_diagonal();
  out.grad = Eigen::MatrixXd::Zero(u.supply_c.rows(), u.supply_c.cols());
  Eigen::VectorXd adj = Eigen::VectorXd::Zero(n);
  for (std::size_t k = steps; k-- > 0;) {
    const Eigen::VectorXd rhs =
        dy.col(static_cast<Eigen::Index>(k)) + storage.cwiseProduct(adj);
    adj = transient.solve_transposed(rhs);
    for (std::size_t p = 0; p < bc.num_plants(); ++p)
      out.grad(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k)) =
          adj[static_cast<Eigen::Index>(bc.plant_supply_nodes[p])];
  }
  if (!scenario.initial_control && steps > 0) {
    const Eigen::VectorXd mu =
        model.steady().solve_transposed(storage.cwiseProduct(adj));
    for (std::size_t p = 0; p < bc.num_plants(); ++p)
      out.grad(static_cast<Eigen::Index>(p), 0) +=
          mu[static_cast<Eigen::Index>(bc.plant_supply_nodes[p])];
  }

  const double dt = model.grid().dt_s;
  const double tik = 2.0 * config.tikhonov_weight / (dt * dt);
  for (Eigen::Index p = 0; p < u.supply_c.rows(); ++p)
    for (Eigen::Index k = 1; k < u.supply_c.cols(); ++k) {
      const double r = tik * (u.supply_c(p, k) - u.supply_c(p, k - 1));
      out.grad(p, k) += r;
      out.grad(p, k - 1) -= r;
    }
  return out;
}

Eigen::MatrixXd gradient(const Scenario& scenario, const ObjectiveConfig& config,
                         const ControlTrajectory& u, int threads) {
  return objective_gradient(scenario, config, u, threads).grad;
}

// ---------------------------------------------------------------------------
// Projected L-BFGS

Box Box::unbounded(Eigen::Index n) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Eigen::VectorXd::Constant(n, -inf), Eigen::VectorXd::Constant(n, inf)};
}

Eigen::VectorXd Box::project(const Eigen::VectorXd& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

void LbfgsConfig::validate() const {
  if (memory < 1 || max_iterations < 1 || max_backtracks < 1)
    throw ValidationError("L-BFGS memory, iteration and backtrack limits must be positive");
  if (!(gradient_tolerance > 0) || !(f_tolerance >= 0))
    throw ValidationError("L-BFGS tolerances must be positive");
  if (!(armijo > 0 && armijo < wolfe && wolfe < 1))
    throw ValidationError("line search constants must satisfy 0 < armijo < wolfe < 1");
}

std::string_view to_string(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::converged: return "converged";
    case LbfgsStatus::stalled: return "stalled";
    case LbfgsStatus::max_iterations: return "max_iterations";
    case LbfgsStatus::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

namespace {
  double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                 const Box& box) {
    return (box.project(x - g) - x).lpNorm<Eigen::Infinity>();
  }

  // Components pinned at a bound with the gradient pushing outward.
  std::vector<bool> active_set(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                               const Box& box) {
    std::vector<bool> active(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i)
      active[static_cast<std::size_t>(i)] =
          (x[i] <= box.lower[i] && g[i] > 0) || (x[i] >= box.upper[i] && g[i] < 0);
    return active;
  }

  struct CurvaturePair {
    Eigen::VectorXd s, y;
    double rho;
  };
}  // namespace

LbfgsResult lbfgs_minimize(const SmoothObjective& objective, const Eigen::VectorXd& x0,
                           const Box& bounds, const LbfgsConfig& config) {
  config.validate();
  const Eigen::Index n = x0.size();
  if (bounds.lower.size() != n || bounds.upper.size() != n)
    throw ValidationError("bounds do not match the problem size");
  if ((bounds.lower.array() > bounds.upper.array()).any())
    throw ValidationError("lower bound above upper bound");

  LbfgsResult res;
  res.x = bounds.project(x0);
  Eigen::VectorXd g(n);
  res.f = objective(res.x, &g);
  res.evaluations = 1;
  res.f_trace.push_back(res.f);

  std::deque<CurvaturePair> memory;
  std::vector<bool> active = active_set(res.x, g, bounds);

  for (;;) {
    res.projected_gradient_norm = projected_gradient_norm(res.x, g, bounds);
    if (res.projected_gradient_norm <= config.gradient_tolerance * (1.0 + std::abs(res.f))) {
      res.status = LbfgsStatus::converged;
      return res;
    }
    if (res.iterations >= config.max_iterations) {
      res.status = LbfgsStatus::max_iterations;
      return res;
    }

    // Two-loop recursion on the free components.
    Eigen::VectorXd q = g;
    for (Eigen::Index i = 0; i < n; ++i)
      if (active[static_cast<std::size_t>(i)])
        q[i] = 0.0;
    const Eigen::VectorXd g_free = q;
    std::vector<double> alpha(memory.size());
    for (std::size_t m = memory.size(); m-- > 0;) {
      alpha[m] = memory[m].rho * memory[m].s.dot(q);
      q -= alpha[m] * memory[m].y;
    }
    if (memory.empty()) {
      const double gmax = q.lpNorm<Eigen::Infinity>();
      if (gmax > 1.0)
        q /= gmax;  // first step moves no component by more than one unit
    } else {
      const CurvaturePair& last = memory.back();
      q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t m = 0; m < memory.size(); ++m) {
      const double beta = memory[m].rho * memory[m].y.dot(q);
      q += (alpha[m] - beta) * memory[m].s;
    }
    Eigen::VectorXd d = -q;
    for (Eigen::Index i = 0; i < n; ++i)
      if (active[static_cast<std::size_t>(i)])
        d[i] = 0.0;
    if (!(d.dot(g_free) < 0)) {
      memory.clear();
      d = -g_free;
      const double gmax = d.lpNorm<Eigen::Infinity>();
      if (gmax > 1.0)
        d /= gmax;
    }

    // Weak Wolfe search along the projected path: bisect between a step that
    // is too long (Armijo fails) and one that is too short (curvature fails),
    // doubling while there is no upper bracket. Once a component is clamped
    // the Armijo condition alone decides.
    const double dg = g.dot(d);
    double step = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    bool accepted = false;
    Eigen::VectorXd x_new, g_new;
    double f_new = 0;
    Eigen::VectorXd g_try(n);
    for (int trial = 0; trial < config.max_backtracks; ++trial) {
      const Eigen::VectorXd raw = res.x + step * d;
      const Eigen::VectorXd x_try = bounds.project(raw);
      const double slope = g.dot(x_try - res.x);
      if ((x_try - res.x).lpNorm<Eigen::Infinity>() == 0.0)
        break;
      if (slope < 0) {
        const double f_try = objective(x_try, &g_try);
        ++res.evaluations;
        if (std::isfinite(f_try) && f_try <= res.f + config.armijo * slope) {
          accepted = true;
          x_new = x_try;
          g_new = g_try;
          f_new = f_try;
          if (x_try != raw || g_try.dot(d) >= config.wolfe * dg)
            break;
          lo = step;
        } else {
          hi = step;
        }
      } else {
        hi = step;
      }
      step = std::isinf(hi) ? 2.0 * step : 0.5 * (lo + hi);
    }
    if (!accepted) {
      res.status = LbfgsStatus::line_search_failed;
      return res;
    }
    ++res.iterations;

    const double f_old = res.f;
    CurvaturePair pair{x_new - res.x, g_new - g, 0.0};
    res.x = std::move(x_new);
    res.f = f_new;
    g = g_new;
    res.f_trace.push_back(res.f);

    std::vector<bool> active_new = active_set(res.x, g, bounds);
    if (active_new != active) {
      memory.clear();
      active = std::move(active_new);
    }
    const double sy = pair.s.dot(pair.y);
    if (sy > 1e-12 * pair.s.norm() * pair.y.norm() && sy > 0) {
      pair.rho = 1.0 / sy;
      memory.push_back(std::move(pair));
      if (memory.size() > static_cast<std::size_t>(config.memory))
        memory.pop_front();
    }

    if (f_old - res.f <= config.f_tolerance * std::max(1.0, std::abs(res.f))) {
      res.projected_gradient_norm = projected_gradient_norm(res.x, g, bounds);
      res.status = res.projected_gradient_norm
                           <= config.gradient_tolerance * (1.0 + std::abs(res.f))
                       ? LbfgsStatus::converged
                       : LbfgsStatus::stalled;
      return res;
    }
  }
}

// ---------------------------------------------------------------------------
// Penalty continuation

void OptimizerConfig::validate() const {
  lbfgs.validate();
  if (!(initial_penalty > 0) || !(penalty_stop > 0))
    throw ValidationError("penalty weights must be positive");
  if (!(penalty_factor > 1))
    throw ValidationError("penalty continuation factor must be > 1");
  if (!(tikhonov_weight >= 0) || !(energy_unit_j > 0))
    throw ValidationError("objective weights must be non-negative");
  if (threads < 1)
    throw ValidationError("thread count must be >= 1");
}

ObjectiveConfig OptimizerConfig::objective(double penalty_weight) const {
  ObjectiveConfig c;
  c.tikhonov_weight = tikhonov_weight;
  c.penalty_weight = penalty_weight;
  c.energy_unit_j = energy_unit_j;
  return c;
}

std::vector<double> penalty_schedule(const OptimizerConfig& config) {
  config.validate();
  std::vector<double> out;
  double lambda = config.initial_penalty;
  for (;;) {
    out.push_back(lambda);
    if (lambda > config.penalty_stop)
      return out;
    lambda *= config.penalty_factor;
  }
}

OptimizationReport optimize(const Scenario& scenario, const ControlTrajectory& u0,
                            const OptimizerConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  const ThermalModel& model = scenario.thermal();
  const Eigen::Index plants = static_cast<Eigen::Index>(scenario.num_plants());
  const Eigen::Index steps = static_cast<Eigen::Index>(model.grid().steps);
  if (u0.supply_c.rows() != plants || u0.supply_c.cols() != steps)
    throw ValidationError("initial control has the wrong shape");

  const Eigen::Index size = plants * steps;
  Box box{Eigen::VectorXd::Constant(size, scenario.constraints.plant_min_c),
          Eigen::VectorXd::Constant(size, scenario.constraints.plant_max_c)};

  auto as_control = [&](const Eigen::VectorXd& x) {
    ControlTrajectory u;
    u.supply_c = Eigen::Map<const Eigen::MatrixXd>(x.data(), plants, steps);
    return u;
  };

  OptimizationReport report;
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(u0.supply_c.data(), size);
  x = box.project(x);

  for (double lambda : penalty_schedule(config)) {
    const ObjectiveConfig oc = config.objective(lambda);
    const SmoothObjective fn = [&](const Eigen::VectorXd& v, Eigen::VectorXd* grad) {
      const ControlTrajectory u = as_control(v);
      if (grad == nullptr)
        return total_objective(scenario, oc, u, config.threads);
      ObjectiveGradient og = objective_gradient(scenario, oc, u, config.threads);
      *grad = Eigen::Map<const Eigen::VectorXd>(og.grad.data(), size);
      return og.terms.total;
    };
    const LbfgsResult res = lbfgs_minimize(fn, x, box, config.lbfgs);
    x = res.x;

    OptimizationRound round;
    round.penalty_weight = lambda;
    round.iterations = res.iterations;
    round.evaluations = res.evaluations;
    round.status = res.status;
    round.projected_gradient_norm = res.projected_gradient_norm;
    const ControlTrajectory u = as_control(x);
    round.terms = evaluate(scenario, oc, u,
                           simulate(model, scenario.forcing, u, scenario.initial_control),
                           config.threads);
    report.rounds.push_back(round);

    if (report.rounds.size() >= 2) {
      const auto& prev = report.rounds[report.rounds.size() - 2].terms;
      const auto& cur = round.terms;
      if (cur.loss > prev.loss && cur.max_violation_c > prev.max_violation_c) {
        report.aborted = true;
        report.diagnostic = "penalty round " + std::to_string(report.rounds.size())
                            + " increased both the loss and the maximum constraint"
                              " violation";
        break;
      }
    }
  }

  report.control = as_control(x);
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace dhn
