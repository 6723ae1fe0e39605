//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "dhn/network.hpp"

namespace dhn {

struct PhysicalConstants {
  double cp_j_per_kg_c = 4186.0;
  double rho_kg_m3 = 1000.0;
};

/// Uniform grid t_k = k * dt, k = 0..steps. Step k advances t_k -> t_{k+1}.
struct TimeGrid {
  double dt_s = 900.0;
  std::size_t steps = 1;

  double time(std::size_t k) const { return static_cast<double>(k) * dt_s; }
  double horizon() const { return time(steps); }
  void validate() const;
};

/// How a node's row of the linear system is formed.
enum class NodeRole {
  dynamic,          // energy balance (storage, upwind advection, ambient loss)
  plant_supply,     // Dirichlet: temperature equals the plant control
  consumer_return,  // temperature equals consumer supply minus the delta
};

/// Boundary structure derived from the network: which nodes are plant outlets
/// and which are consumer outlets. Values are supplied per step separately.
struct BoundarySpec {
  std::vector<Index> producer_edges;
  std::vector<Index> plant_supply_nodes;  // head of each producer edge
  std::vector<Index> plant_return_nodes;  // tail of each producer edge
  std::vector<Index> consumer_edges;
  std::vector<Index> consumer_supply_nodes;  // tail of each consumer edge
  std::vector<Index> consumer_return_nodes;  // head of each consumer edge
  std::vector<NodeRole> roles;

  std::size_t num_plants() const { return producer_edges.size(); }
  std::size_t num_consumers() const { return consumer_edges.size(); }

  /// Throws ValidationError if a plant or consumer outlet is fed by anything
  /// other than its own heat-exchanger edge, or if exchanger flow runs
  /// against the edge direction.
  static BoundarySpec from_network(const NetworkGraph& graph,
                                   const FlowField& flow);
};

struct BoundaryValues {
  std::span<const double> plant_supply_c;    // one per producer
  std::span<const double> consumer_delta_c;  // one per consumer, >= 0
  double ambient_c = 10.0;
};

/// Factorized system matrix of one backward-Euler step (or of the steady
/// problem when no time step is given):
///
///   (rho cp / dt) V + cp G + S  on dynamic rows,
///   unit rows on plant outlets, +1/-1 rows on consumer outlets.
///
/// Immutable after construction; solves are const and may run concurrently.
class ThermalSystem {
 public:
  ThermalSystem(const NetworkGraph& graph, const FlowField& flow,
                const ControlVolumes& volumes, const PhysicalConstants& constants,
                std::optional<double> dt_s, const BoundarySpec& boundary);
  ~ThermalSystem();
  ThermalSystem(ThermalSystem&&) noexcept;
  ThermalSystem& operator=(ThermalSystem&&) noexcept;

  bool is_steady() const { return !dt_s_.has_value(); }
  std::size_t size() const { return static_cast<std::size_t>(matrix_.rows()); }
  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  const BoundarySpec& boundary() const { return boundary_; }

  /// rho cp V_i / dt on dynamic rows; zero elsewhere or when steady.
  const Eigen::VectorXd& storage_diagonal() const { return storage_; }
  /// Ambient loss coefficient S_ii (W/degC) on dynamic rows; zero elsewhere.
  const Eigen::VectorXd& loss_diagonal() const { return loss_; }

  /// Right-hand side for the given boundary values. `y_prev` is ignored for
  /// the steady system and required otherwise.
  Eigen::VectorXd rhs(const Eigen::VectorXd* y_prev,
                      const BoundaryValues& values) const;

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::VectorXd solve_transposed(const Eigen::VectorXd& rhs) const;

 private:
  struct Factorization;

  std::optional<double> dt_s_;
  BoundarySpec boundary_;
  Eigen::SparseMatrix<double> matrix_;
  Eigen::VectorXd storage_;
  Eigen::VectorXd loss_;
  std::unique_ptr<Factorization> lu_;
};

ThermalSystem assemble(const NetworkGraph& graph, const FlowField& flow,
                       const ControlVolumes& volumes,
                       const PhysicalConstants& constants,
                       std::optional<double> dt_s, const BoundarySpec& boundary);

Eigen::VectorXd solve_steady(const ThermalSystem& steady,
                             const BoundaryValues& values);

Eigen::VectorXd step(const ThermalSystem& transient, const Eigen::VectorXd& y_prev,
                     const BoundaryValues& values);

/// Per-step boundary data on the grid, column j at t_j (j = 0..steps).
struct Forcing {
  Eigen::MatrixXd consumer_delta_c;  // consumers x (steps + 1)
  Eigen::VectorXd ambient_c;         // steps + 1
};

/// Plant supply temperatures; column k is the plant outlet temperature
/// during step k, i.e. at t_{k+1}.
struct ControlTrajectory {
  Eigen::MatrixXd supply_c;  // plants x steps

  std::size_t plants() const { return static_cast<std::size_t>(supply_c.rows()); }
  std::size_t steps() const { return static_cast<std::size_t>(supply_c.cols()); }
};

/// Node temperatures; column j is the state at t_j, column 0 the initial state.
struct StateTrajectory {
  Eigen::MatrixXd temp_c;  // nodes x (steps + 1)
};

/// Everything needed to map controls to states: network, boundary structure,
/// and the transient and steady systems, each factorized once.
class ThermalModel {
 public:
  ThermalModel(NetworkGraph graph, FlowField flow, PhysicalConstants constants,
               TimeGrid grid);

  const NetworkGraph& graph() const { return graph_; }
  const FlowField& flow() const { return flow_; }
  const ControlVolumes& volumes() const { return volumes_; }
  const PhysicalConstants& constants() const { return constants_; }
  const TimeGrid& grid() const { return grid_; }
  const BoundarySpec& boundary() const { return transient_->boundary(); }
  const ThermalSystem& transient() const { return *transient_; }
  const ThermalSystem& steady() const { return *steady_; }

  /// Boundary values for grid column j with the given plant temperatures.
  /// The returned spans alias `forcing` and `plant_supply_c`.
  BoundaryValues values_at(const Forcing& forcing, std::size_t j,
                           std::span<const double> plant_supply_c) const;

  void check_shapes(const Forcing& forcing, const ControlTrajectory& u) const;

 private:
  NetworkGraph graph_;
  FlowField flow_;
  ControlVolumes volumes_;
  PhysicalConstants constants_;
  TimeGrid grid_;
  std::unique_ptr<ThermalSystem> transient_;
  std::unique_ptr<ThermalSystem> steady_;
};

/// Initial state: steady solve at t_0 under `initial_control` when given,
/// otherwise under the first control column.
Eigen::VectorXd initial_state(const ThermalModel& model, const Forcing& forcing,
                              const ControlTrajectory& u,
                              const std::optional<Eigen::VectorXd>& initial_control);

/// The control-to-state solution operator.
StateTrajectory simulate(const ThermalModel& model, const Forcing& forcing,
                         const ControlTrajectory& u,
                         const std::optional<Eigen::VectorXd>& initial_control =
                             std::nullopt);

/// Consumer heat extraction as a supply-to-return temperature drop.
double demand_to_delta(double power_w, double massflow_kg_s,
                       const PhysicalConstants& constants);

/// rho cp sum_i V_i (y_i - reference), in joules.
double stored_energy(const Eigen::Ref<const Eigen::VectorXd>& y,
                     const ControlVolumes& volumes,
                     const PhysicalConstants& constants, double reference_c);

/// One step of the discrete energy balance, all in watts.
struct EnergyBalanceStep {
  double plant_injection_w = 0;
  double consumer_extraction_w = 0;
  double ambient_loss_w = 0;
  double storage_rate_w = 0;

  /// injection - extraction - loss - storage rate
  double residual_w() const {
    return plant_injection_w - consumer_extraction_w - ambient_loss_w
           - storage_rate_w;
  }
};

/// Term-by-term energy audit of a simulated trajectory. Every term is built
/// from the network, flows and temperatures directly, not from the assembled
/// system. Storage and loss cover the nodes governed by the energy balance.
std::vector<EnergyBalanceStep> energy_audit(const ThermalModel& model,
                                            const Forcing& forcing,
                                            const StateTrajectory& y);

}  // namespace dhn
