//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "dhn/thermal.hpp"

#include <cmath>
#include <string>

#include <Eigen/SparseLU>

#include "dhn/error.hpp"

namespace dhn {

void TimeGrid::validate() const {
  if (!(std::isfinite(dt_s) && dt_s > 0))
    throw ValidationError("time step must be > 0");
  if (steps < 1)
    throw ValidationError("time grid needs at least one step");
}

// ---------------------------------------------------------------------------
// BoundarySpec

BoundarySpec BoundarySpec::from_network(const NetworkGraph& graph,
                                        const FlowField& flow) {
  BoundarySpec spec;
  spec.roles.assign(graph.num_nodes(), NodeRole::dynamic);

  auto claim = [&](Index e, NodeRole role) {
    const Edge& edge = graph.edge(e);
    const std::string where = "edge '" + edge.id + "'";
    if (flow[e] <= 0)
      throw ValidationError(where + ": " + std::string(to_string(edge.kind))
                            + " edge must carry positive flow tail->head");
    if (spec.roles[edge.head] != NodeRole::dynamic)
      throw ValidationError("node '" + graph.node(edge.head).id
                            + "' is the outlet of more than one heat exchanger");
    spec.roles[edge.head] = role;
    for (Index other : graph.incident_edges(edge.head)) {
      if (other == e)
        continue;
      const Edge& o = graph.edge(other);
      const bool inflow = (o.head == edge.head) == (flow[other] > 0);
      if (inflow)
        throw ValidationError("node '" + graph.node(edge.head).id
                              + "' receives flow from edge '" + o.id
                              + "' besides its " + std::string(to_string(edge.kind))
                              + " edge '" + edge.id + "'");
    }
  };

  for (Index e = 0; e < graph.num_edges(); ++e) {
    const Edge& edge = graph.edge(e);
    if (edge.kind == EdgeKind::producer) {
      claim(e, NodeRole::plant_supply);
      spec.producer_edges.push_back(e);
      spec.plant_supply_nodes.push_back(edge.head);
      spec.plant_return_nodes.push_back(edge.tail);
    } else if (edge.kind == EdgeKind::consumer) {
      claim(e, NodeRole::consumer_return);
      spec.consumer_edges.push_back(e);
      spec.consumer_supply_nodes.push_back(edge.tail);
      spec.consumer_return_nodes.push_back(edge.head);
    }
  }
  if (spec.producer_edges.empty())
    throw ValidationError("network has no producer edge");
  return spec;
}

// ---------------------------------------------------------------------------
// ThermalSystem

struct ThermalSystem::Factorization {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

ThermalSystem::~ThermalSystem() = default;
ThermalSystem::ThermalSystem(ThermalSystem&&) noexcept = default;
ThermalSystem& ThermalSystem::operator=(ThermalSystem&&) noexcept = default;

ThermalSystem::ThermalSystem(const NetworkGraph& graph, const FlowField& flow,
                             const ControlVolumes& volumes,
                             const PhysicalConstants& constants,
                             std::optional<double> dt_s,
                             const BoundarySpec& boundary)
    : dt_s_(dt_s), boundary_(boundary) {
  const std::size_t n = graph.num_nodes();
  if (boundary_.roles.size() != n || volumes.volume_m3.size() != n
      || flow.size() != graph.num_edges())
    throw ValidationError("thermal system inputs do not match the network");
  if (dt_s_ && !(*dt_s_ > 0))
    throw ValidationError("time step must be > 0");

  storage_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  loss_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  const double cp = constants.cp_j_per_kg_c;

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(n + 2 * graph.num_edges());
  for (Index i = 0; i < n; ++i) {
    const int row = static_cast<int>(i);
    switch (boundary_.roles[i]) {
    case NodeRole::plant_supply:
      entries.emplace_back(row, row, 1.0);
      continue;
    case NodeRole::consumer_return:
      break;  // filled per consumer edge below
    case NodeRole::dynamic: {
      double diag = 0.0;
      if (dt_s_)
        storage_[row] = constants.rho_kg_m3 * cp * volumes[i] / *dt_s_;
      for (Index e : graph.incident_edges(i)) {
        const Edge& edge = graph.edge(e);
        loss_[row] += 0.5 * edge.effective_htc() * edge.pipe.length_m;
        const double m = flow[e];
        const bool leaves = (edge.tail == i) == (m > 0);
        if (leaves) {
          diag += cp * std::abs(m);
        } else {
          const Index upstream = edge.tail == i ? edge.head : edge.tail;
          entries.emplace_back(row, static_cast<int>(upstream), -cp * std::abs(m));
        }
      }
      entries.emplace_back(row, row, diag + storage_[row] + loss_[row]);
      break;
    }
    }
  }
  for (std::size_t c = 0; c < boundary_.num_consumers(); ++c) {
    const int r = static_cast<int>(boundary_.consumer_return_nodes[c]);
    const int s = static_cast<int>(boundary_.consumer_supply_nodes[c]);
    entries.emplace_back(r, r, 1.0);
    entries.emplace_back(r, s, -1.0);
  }

  matrix_.resize(static_cast<int>(n), static_cast<int>(n));
  matrix_.setFromTriplets(entries.begin(), entries.end());
  matrix_.makeCompressed();

  lu_ = std::make_unique<Factorization>();
  lu_->lu.analyzePattern(matrix_);
  lu_->lu.factorize(matrix_);
  if (lu_->lu.info() != Eigen::Success)
    throw NumericalError(std::string("thermal system is singular (")
                         + (dt_s_ ? "transient" : "steady")
                         + "): check that every node is fed from a plant; "
                         + lu_->lu.lastErrorMessage());
}

Eigen::VectorXd ThermalSystem::rhs(const Eigen::VectorXd* y_prev,
                                   const BoundaryValues& values) const {
  const auto n = static_cast<Eigen::Index>(size());
  if (values.plant_supply_c.size() != boundary_.num_plants()
      || values.consumer_delta_c.size() != boundary_.num_consumers())
    throw ValidationError("boundary values do not match the boundary structure");

  Eigen::VectorXd b = loss_ * values.ambient_c;
  if (dt_s_) {
    if (y_prev == nullptr || y_prev->size() != n)
      throw ValidationError("transient step needs the previous state");
    b.array() += storage_.array() * y_prev->array();
  }
  for (std::size_t p = 0; p < boundary_.num_plants(); ++p)
    b[static_cast<Eigen::Index>(boundary_.plant_supply_nodes[p])] =
        values.plant_supply_c[p];
  for (std::size_t c = 0; c < boundary_.num_consumers(); ++c)
    b[static_cast<Eigen::Index>(boundary_.consumer_return_nodes[c])] =
        -values.consumer_delta_c[c];
  return b;
}

Eigen::VectorXd ThermalSystem::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd y = lu_->lu.solve(rhs);
  if (!y.allFinite())
    throw NumericalError("thermal solve produced non-finite temperatures");
  return y;
}

Eigen::VectorXd ThermalSystem::solve_transposed(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = lu_->lu.transpose().solve(rhs);
  if (!x.allFinite())
    throw NumericalError("transposed thermal solve produced non-finite values");
  return x;
}

ThermalSystem assemble(const NetworkGraph& graph, const FlowField& flow,
                       const ControlVolumes& volumes,
                       const PhysicalConstants& constants,
                       std::optional<double> dt_s, const BoundarySpec& boundary) {
  return ThermalSystem(graph, flow, volumes, constants, dt_s, boundary);
}

Eigen::VectorXd solve_steady(const ThermalSystem& steady,
                             const BoundaryValues& values) {
  if (!steady.is_steady())
    throw ValidationError("solve_steady needs a system assembled without a time step");
  return steady.solve(steady.rhs(nullptr, values));
}

Eigen::VectorXd step(const ThermalSystem& transient, const Eigen::VectorXd& y_prev,
                     const BoundaryValues& values) {
  if (transient.is_steady())
    throw ValidationError("step needs a system assembled with a time step");
  return transient.solve(transient.rhs(&y_prev, values));
}

// ---------------------------------------------------------------------------
// ThermalModel

ThermalModel::ThermalModel(NetworkGraph graph, FlowField flow,
                           PhysicalConstants constants, TimeGrid grid)
    : graph_(std::move(graph)),
      flow_(std::move(flow)),
      constants_(constants),
      grid_(grid) {
  grid_.validate();
  if (!(constants_.cp_j_per_kg_c > 0 && constants_.rho_kg_m3 > 0))
    throw ValidationError("physical constants must be positive");
  volumes_ = control_volumes(graph_);
  const BoundarySpec boundary = BoundarySpec::from_network(graph_, flow_);
  transient_ = std::make_unique<ThermalSystem>(graph_, flow_, volumes_,
                                               constants_, grid_.dt_s, boundary);
  steady_ = std::make_unique<ThermalSystem>(graph_, flow_, volumes_, constants_,
                                            std::nullopt, boundary);
}

BoundaryValues ThermalModel::values_at(const Forcing& forcing, std::size_t j,
                                       std::span<const double> plant_supply_c) const {
  const auto col = static_cast<Eigen::Index>(j);
  return BoundaryValues{
      plant_supply_c,
      std::span<const double>(forcing.consumer_delta_c.col(col).data(),
                              static_cast<std::size_t>(forcing.consumer_delta_c.rows())),
      forcing.ambient_c[col]};
}

void ThermalModel::check_shapes(const Forcing& forcing,
                                const ControlTrajectory& u) const {
  const auto steps = static_cast<Eigen::Index>(grid_.steps);
  const auto plants = static_cast<Eigen::Index>(boundary().num_plants());
  const auto consumers = static_cast<Eigen::Index>(boundary().num_consumers());
  if (u.supply_c.rows() != plants || u.supply_c.cols() != steps)
    throw ValidationError("control trajectory must be " + std::to_string(plants)
                          + " plants x " + std::to_string(steps) + " steps");
  if (forcing.consumer_delta_c.rows() != consumers
      || forcing.consumer_delta_c.cols() != steps + 1
      || forcing.ambient_c.size() != steps + 1)
    throw ValidationError("forcing must cover " + std::to_string(consumers)
                          + " consumers x " + std::to_string(steps + 1)
                          + " grid points");
  if (!u.supply_c.allFinite())
    throw ValidationError("control trajectory contains non-finite values");
}

Eigen::VectorXd initial_state(const ThermalModel& model, const Forcing& forcing,
                              const ControlTrajectory& u,
                              const std::optional<Eigen::VectorXd>& initial_control) {
  Eigen::VectorXd plant0;
  if (initial_control) {
    if (static_cast<std::size_t>(initial_control->size()) != model.boundary().num_plants())
      throw ValidationError("initial control needs one value per plant");
    plant0 = *initial_control;
  } else {
    plant0 = u.supply_c.col(0);
  }
  const std::span<const double> plants(plant0.data(),
                                       static_cast<std::size_t>(plant0.size()));
  return solve_steady(model.steady(), model.values_at(forcing, 0, plants));
}

StateTrajectory simulate(const ThermalModel& model, const Forcing& forcing,
                         const ControlTrajectory& u,
                         const std::optional<Eigen::VectorXd>& initial_control) {
  model.check_shapes(forcing, u);
  const std::size_t steps = model.grid().steps;
  const auto n = static_cast<Eigen::Index>(model.graph().num_nodes());

  StateTrajectory out;
  out.temp_c.resize(n, static_cast<Eigen::Index>(steps + 1));
  out.temp_c.col(0) = initial_state(model, forcing, u, initial_control);

  Eigen::VectorXd plants(u.supply_c.rows());
  Eigen::VectorXd prev = out.temp_c.col(0);
  for (std::size_t k = 0; k < steps; ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    plants = u.supply_c.col(col);
    const BoundaryValues values = model.values_at(
        forcing, k + 1,
        std::span<const double>(plants.data(), static_cast<std::size_t>(plants.size())));
    prev = step(model.transient(), prev, values);
    out.temp_c.col(col + 1) = prev;
  }
  return out;
}

double demand_to_delta(double power_w, double massflow_kg_s,
                       const PhysicalConstants& constants) {
  if (!(massflow_kg_s > 0))
    throw ValidationError("consumer mass flow must be > 0");
  if (!(power_w >= 0))
    throw ValidationError("consumer demand must be >= 0");
  return power_w / (constants.cp_j_per_kg_c * massflow_kg_s);
}

double stored_energy(const Eigen::Ref<const Eigen::VectorXd>& y,
                     const ControlVolumes& volumes,
                     const PhysicalConstants& constants, double reference_c) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    sum += volumes.volume_m3[static_cast<std::size_t>(i)] * (y[i] - reference_c);
  return constants.rho_kg_m3 * constants.cp_j_per_kg_c * sum;
}

std::vector<EnergyBalanceStep> energy_audit(const ThermalModel& model,
                                            const Forcing& forcing,
                                            const StateTrajectory& y) {
  const NetworkGraph& graph = model.graph();
  const FlowField& flow = model.flow();
  const BoundarySpec& bc = model.boundary();
  const double cp = model.constants().cp_j_per_kg_c;
  const double rho = model.constants().rho_kg_m3;
  const double dt = model.grid().dt_s;

  // loss coefficients and storage weights, recomputed from the pipes
  std::vector<double> loss(graph.num_nodes(), 0.0);
  for (const Edge& e : graph.edges()) {
    const double half = 0.5 * e.effective_htc() * e.pipe.length_m;
    loss[e.tail] += half;
    loss[e.head] += half;
  }

  std::vector<EnergyBalanceStep> audit(model.grid().steps);
  for (std::size_t k = 0; k < audit.size(); ++k) {
    const auto now = static_cast<Eigen::Index>(k + 1);
    const auto before = static_cast<Eigen::Index>(k);
    EnergyBalanceStep& s = audit[k];
    for (std::size_t p = 0; p < bc.num_plants(); ++p) {
      const double m = flow[bc.producer_edges[p]];
      s.plant_injection_w +=
          cp * m
          * (y.temp_c(static_cast<Eigen::Index>(bc.plant_supply_nodes[p]), now)
             - y.temp_c(static_cast<Eigen::Index>(bc.plant_return_nodes[p]), now));
    }
    for (std::size_t c = 0; c < bc.num_consumers(); ++c)
      s.consumer_extraction_w += cp * flow[bc.consumer_edges[c]]
                                 * forcing.consumer_delta_c(static_cast<Eigen::Index>(c), now);
    const double ambient = forcing.ambient_c[now];
    for (Index i = 0; i < graph.num_nodes(); ++i) {
      if (bc.roles[i] != NodeRole::dynamic)
        continue;
      const auto row = static_cast<Eigen::Index>(i);
      s.ambient_loss_w += loss[i] * (y.temp_c(row, now) - ambient);
      s.storage_rate_w += rho * cp * model.volumes()[i]
                          * (y.temp_c(row, now) - y.temp_c(row, before)) / dt;
    }
  }
  return audit;
}

}  // namespace dhn
