//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>

namespace dhn {

using Index = std::size_t;

enum class Side { supply, return_side };

/// supply/return pipes stay on one side; consumer edges cross supply->return,
/// producer edges cross return->supply.
enum class EdgeKind { supply, return_pipe, consumer, producer };

std::string_view to_string(Side side);
std::string_view to_string(EdgeKind kind);
Side parse_side(std::string_view text);
EdgeKind parse_edge_kind(std::string_view text);

struct PipeParams {
  double length_m = 0.0;
  double diameter_m = 0.0;
  double htc_w_per_m_c = 0.0;  // heat transfer coefficient, W/(m*degC)

  double cross_section_m2() const;
  double volume_m3() const { return cross_section_m2() * length_m; }
};

struct Node {
  std::string id;
  Side side = Side::supply;
  std::optional<double> x;
  std::optional<double> y;
};

struct Edge {
  std::string id;
  Index tail = 0;
  Index head = 0;
  EdgeKind kind = EdgeKind::supply;
  PipeParams pipe;

  bool is_pipe() const {
    return kind == EdgeKind::supply || kind == EdgeKind::return_pipe;
  }
  /// Heat exchangers (consumer/producer edges) lose nothing to ambient.
  double effective_htc() const { return is_pipe() ? pipe.htc_w_per_m_c : 0.0; }
};

/// Directed supply/return graph. Immutable once constructed; the constructor
/// enforces every structural invariant and throws ValidationError otherwise.
class NetworkGraph {
 public:
  NetworkGraph() = default;
  NetworkGraph(std::vector<Node> nodes, std::vector<Edge> edges);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(Index i) const { return nodes_[i]; }
  const Edge& edge(Index e) const { return edges_[e]; }

  std::optional<Index> find_node(std::string_view id) const;
  std::optional<Index> find_edge(std::string_view id) const;
  Index node_index(std::string_view id) const;  // throws ValidationError
  Index edge_index(std::string_view id) const;  // throws ValidationError

  /// Edge indices touching node i, in edge order.
  std::span<const Index> incident_edges(Index i) const;
  std::vector<Index> edges_of_kind(EdgeKind kind) const;

  /// M_G: -1 at the tail and +1 at the head of every edge column.
  Eigen::SparseMatrix<double> incidence() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, Index> node_lookup_;
  std::unordered_map<std::string, Index> edge_lookup_;
  std::vector<std::size_t> incident_offsets_;
  std::vector<Index> incident_;
};

/// Signed mass flow per edge (kg/s), positive iff fluid runs tail -> head.
class FlowField {
 public:
  static constexpr double kBalanceTolerance = 1e-9;  // kg/s

  FlowField() = default;
  /// Validates non-stagnation and nodal mass balance against `graph`.
  FlowField(const NetworkGraph& graph, std::vector<double> massflow);

  std::size_t size() const { return massflow_.size(); }
  double operator[](Index e) const { return massflow_[e]; }
  const std::vector<double>& values() const { return massflow_; }

 private:
  std::vector<double> massflow_;
};

struct ControlVolumes {
  std::vector<double> volume_m3;

  double operator[](Index i) const { return volume_m3[i]; }
  double total() const;
};

NetworkGraph parse_network(const std::filesystem::path& node_file,
                           const std::filesystem::path& edge_file);
NetworkGraph parse_network_text(std::string_view node_csv,
                                std::string_view edge_csv);
void write_network(const NetworkGraph& graph,
                   const std::filesystem::path& node_file,
                   const std::filesystem::path& edge_file);

FlowField load_flow_field(const std::filesystem::path& flow_file,
                          const NetworkGraph& graph);
FlowField parse_flow_field_text(std::string_view flow_csv,
                                const NetworkGraph& graph);
void write_flow_field(const NetworkGraph& graph, const FlowField& flow,
                      const std::filesystem::path& flow_file);

/// Half of every incident edge's water volume, summed per node.
ControlVolumes control_volumes(const NetworkGraph& graph);

/// Mean fluid velocity from mass flow: v = mdot / (pi d^2 / 4 * rho).
double velocity(double massflow_kg_s, const PipeParams& pipe, double rho);

struct RefinedNetwork {
  NetworkGraph graph;
  FlowField flow;
  /// For each refined edge, the index of the edge it was cut from.
  std::vector<Index> source_edge;
};

/// Splits every supply/return pipe into ceil(l / max_cell_length_m) equal
/// cells. Intermediate nodes are named "<edge>:<k>"; cut edges "<edge>:<k>".
/// Heat exchanger edges are never split. A non-positive length disables
/// refinement.
RefinedNetwork refine_cells(const NetworkGraph& graph, const FlowField& flow,
                            double max_cell_length_m);

}  // namespace dhn
