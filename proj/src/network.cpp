//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "dhn/network.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "dhn/csv.hpp"
#include "dhn/error.hpp"

namespace dhn {

std::string_view to_string(Side side) {
  return side == Side::supply ? "supply" : "return";
}

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
  case EdgeKind::supply:
    return "supply";
  case EdgeKind::return_pipe:
    return "return";
  case EdgeKind::consumer:
    return "consumer";
  case EdgeKind::producer:
    return "producer";
  }
  return "?";
}

Side parse_side(std::string_view text) {
  if (text == "supply")
    return Side::supply;
  if (text == "return")
    return Side::return_side;
  throw InputError("unknown node side '" + std::string(text) + "'");
}

EdgeKind parse_edge_kind(std::string_view text) {
  if (text == "supply")
    return EdgeKind::supply;
  if (text == "return")
    return EdgeKind::return_pipe;
  if (text == "consumer")
    return EdgeKind::consumer;
  if (text == "producer")
    return EdgeKind::producer;
  throw InputError("unknown edge kind '" + std::string(text) + "'");
}

double PipeParams::cross_section_m2() const {
  return std::numbers::pi * diameter_m * diameter_m / 4.0;
}

// ---------------------------------------------------------------------------
// NetworkGraph

NetworkGraph::NetworkGraph(std::vector<Node> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  if (nodes_.empty())
    throw ValidationError("network has no nodes");

  for (Index i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id.empty())
      throw ValidationError("node #" + std::to_string(i) + " has an empty id");
    if (!node_lookup_.emplace(nodes_[i].id, i).second)
      throw ValidationError("duplicate node id '" + nodes_[i].id + "'");
  }

  for (Index e = 0; e < edges_.size(); ++e) {
    const Edge& edge = edges_[e];
    const std::string where = "edge '" + edge.id + "'";
    if (edge.id.empty())
      throw ValidationError("edge #" + std::to_string(e) + " has an empty id");
    if (!edge_lookup_.emplace(edge.id, e).second)
      throw ValidationError("duplicate edge id '" + edge.id + "'");
    if (edge.tail >= nodes_.size() || edge.head >= nodes_.size())
      throw ValidationError(where + " references a node index out of range");
    if (edge.tail == edge.head)
      throw ValidationError(where + " is a self loop");

    const PipeParams& p = edge.pipe;
    if (!(std::isfinite(p.length_m) && p.length_m > 0))
      throw ValidationError(where + ": length must be > 0");
    if (!(std::isfinite(p.diameter_m) && p.diameter_m > 0))
      throw ValidationError(where + ": diameter must be > 0");
    if (!(std::isfinite(p.htc_w_per_m_c) && p.htc_w_per_m_c >= 0))
      throw ValidationError(where + ": heat transfer coefficient must be >= 0");

    const Side from = nodes_[edge.tail].side;
    const Side to = nodes_[edge.head].side;
    bool ok = false;
    switch (edge.kind) {
    case EdgeKind::supply:
      ok = from == Side::supply && to == Side::supply;
      break;
    case EdgeKind::return_pipe:
      ok = from == Side::return_side && to == Side::return_side;
      break;
    case EdgeKind::consumer:
      ok = from == Side::supply && to == Side::return_side;
      break;
    case EdgeKind::producer:
      ok = from == Side::return_side && to == Side::supply;
      break;
    }
    if (!ok)
      throw ValidationError(where + " of kind " + std::string(to_string(edge.kind))
                            + " connects " + std::string(to_string(from))
                            + " node '" + nodes_[edge.tail].id + "' to "
                            + std::string(to_string(to)) + " node '"
                            + nodes_[edge.head].id + "'");
  }

  // CSR-style incidence lists
  std::vector<std::size_t> degree(nodes_.size(), 0);
  for (const Edge& edge : edges_) {
    ++degree[edge.tail];
    ++degree[edge.head];
  }
  incident_offsets_.assign(nodes_.size() + 1, 0);
  std::partial_sum(degree.begin(), degree.end(), incident_offsets_.begin() + 1);
  incident_.resize(incident_offsets_.back());
  std::vector<std::size_t> fill(incident_offsets_.begin(),
                                incident_offsets_.end() - 1);
  for (Index e = 0; e < edges_.size(); ++e) {
    incident_[fill[edges_[e].tail]++] = e;
    incident_[fill[edges_[e].head]++] = e;
  }

  for (Index i = 0; i < nodes_.size(); ++i)
    if (degree[i] == 0)
      throw ValidationError("node '" + nodes_[i].id + "' is isolated");

  // connectivity (undirected)
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<Index> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const Index i = stack.back();
    stack.pop_back();
    for (Index e : incident_edges(i)) {
      const Index j = edges_[e].tail == i ? edges_[e].head : edges_[e].tail;
      if (!seen[j]) {
        seen[j] = 1;
        ++reached;
        stack.push_back(j);
      }
    }
  }
  if (reached != nodes_.size()) {
    for (Index i = 0; i < nodes_.size(); ++i)
      if (!seen[i])
        throw ValidationError("network is not connected: node '" + nodes_[i].id
                              + "' is unreachable from '" + nodes_[0].id + "'");
  }
}

std::optional<Index> NetworkGraph::find_node(std::string_view id) const {
  auto it = node_lookup_.find(std::string(id));
  if (it == node_lookup_.end())
    return std::nullopt;
  return it->second;
}

std::optional<Index> NetworkGraph::find_edge(std::string_view id) const {
  auto it = edge_lookup_.find(std::string(id));
  if (it == edge_lookup_.end())
    return std::nullopt;
  return it->second;
}

Index NetworkGraph::node_index(std::string_view id) const {
  if (auto i = find_node(id))
    return *i;
  throw ValidationError("unknown node id '" + std::string(id) + "'");
}

Index NetworkGraph::edge_index(std::string_view id) const {
  if (auto e = find_edge(id))
    return *e;
  throw ValidationError("unknown edge id '" + std::string(id) + "'");
}

std::span<const Index> NetworkGraph::incident_edges(Index i) const {
  return {incident_.data() + incident_offsets_[i],
          incident_offsets_[i + 1] - incident_offsets_[i]};
}

std::vector<Index> NetworkGraph::edges_of_kind(EdgeKind kind) const {
  std::vector<Index> out;
  for (Index e = 0; e < edges_.size(); ++e)
    if (edges_[e].kind == kind)
      out.push_back(e);
  return out;
}

Eigen::SparseMatrix<double> NetworkGraph::incidence() const {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(2 * edges_.size());
  for (Index e = 0; e < edges_.size(); ++e) {
    entries.emplace_back(static_cast<int>(edges_[e].tail), static_cast<int>(e), -1.0);
    entries.emplace_back(static_cast<int>(edges_[e].head), static_cast<int>(e), 1.0);
  }
  Eigen::SparseMatrix<double> m(static_cast<int>(nodes_.size()),
                                static_cast<int>(edges_.size()));
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

// ---------------------------------------------------------------------------
// FlowField

FlowField::FlowField(const NetworkGraph& graph, std::vector<double> massflow)
    : massflow_(std::move(massflow)) {
  if (massflow_.size() != graph.num_edges())
    throw ValidationError("flow field has " + std::to_string(massflow_.size())
                          + " values for " + std::to_string(graph.num_edges())
                          + " edges");
  for (Index e = 0; e < massflow_.size(); ++e) {
    if (!std::isfinite(massflow_[e]))
      throw ValidationError("edge '" + graph.edge(e).id + "': mass flow is not finite");
    if (massflow_[e] == 0.0)
      throw ValidationError("edge '" + graph.edge(e).id
                            + "': zero mass flow (stagnation)");
  }
  for (Index i = 0; i < graph.num_nodes(); ++i) {
    double net = 0.0;
    for (Index e : graph.incident_edges(i))
      net += graph.edge(e).head == i ? massflow_[e] : -massflow_[e];
    if (std::abs(net) > kBalanceTolerance)
      throw ValidationError("node '" + graph.node(i).id
                            + "': mass imbalance of " + csv::format_double(net)
                            + " kg/s");
  }
}

double ControlVolumes::total() const {
  double sum = 0.0;
  for (double v : volume_m3)
    sum += v;
  return sum;
}

// ---------------------------------------------------------------------------
// File I/O

namespace {
  constexpr std::string_view kNodeHeader[] = {"node_id", "side", "x", "y"};
  constexpr std::string_view kEdgeHeader[] = {
      "edge_id", "from_node", "to_node", "kind",
      "length_m", "diameter_m", "htc_w_per_m_c"};
  constexpr std::string_view kFlowHeader[] = {"edge_id", "massflow_kg_s"};

  NetworkGraph build_network(const csv::Table& node_table,
                             const csv::Table& edge_table) {
    node_table.require_header({std::begin(kNodeHeader), std::end(kNodeHeader)});
    edge_table.require_header({std::begin(kEdgeHeader), std::end(kEdgeHeader)});

    std::vector<Node> nodes;
    std::unordered_map<std::string, Index> ids;
    for (const csv::Row& row : node_table.rows) {
      Node node;
      node.id = row.fields[0];
      if (node.id.empty())
        throw ParseError(node_table.source, row.line, "empty node id");
      try {
        node.side = parse_side(row.fields[1]);
      } catch (const InputError& err) {
        throw ParseError(node_table.source, row.line, err.what());
      }
      node.x = csv::to_optional_double(row, 2, node_table.source);
      node.y = csv::to_optional_double(row, 3, node_table.source);
      if (!ids.emplace(node.id, nodes.size()).second)
        throw ValidationError(node_table.source + ": duplicate node id '"
                              + node.id + "'");
      nodes.push_back(std::move(node));
    }

    std::vector<Edge> edges;
    for (const csv::Row& row : edge_table.rows) {
      Edge edge;
      edge.id = row.fields[0];
      if (edge.id.empty())
        throw ParseError(edge_table.source, row.line, "empty edge id");
      for (int end = 0; end < 2; ++end) {
        const std::string& ref = row.fields[1 + end];
        auto it = ids.find(ref);
        if (it == ids.end())
          throw ValidationError(edge_table.source + ":" + std::to_string(row.line)
                                + ": edge '" + edge.id
                                + "' references unknown node '" + ref + "'");
        (end == 0 ? edge.tail : edge.head) = it->second;
      }
      try {
        edge.kind = parse_edge_kind(row.fields[3]);
      } catch (const InputError& err) {
        throw ParseError(edge_table.source, row.line, err.what());
      }
      edge.pipe.length_m = csv::to_double(row, 4, edge_table.source);
      edge.pipe.diameter_m = csv::to_double(row, 5, edge_table.source);
      edge.pipe.htc_w_per_m_c = csv::to_double(row, 6, edge_table.source);
      edges.push_back(std::move(edge));
    }
    return NetworkGraph(std::move(nodes), std::move(edges));
  }

  FlowField build_flow(const csv::Table& table, const NetworkGraph& graph) {
    table.require_header({std::begin(kFlowHeader), std::end(kFlowHeader)});
    std::vector<double> values(graph.num_edges(), 0.0);
    std::vector<char> seen(graph.num_edges(), 0);
    for (const csv::Row& row : table.rows) {
      const auto e = graph.find_edge(row.fields[0]);
      if (!e)
        throw ValidationError(table.source + ":" + std::to_string(row.line)
                              + ": unknown edge '" + row.fields[0] + "'");
      if (seen[*e])
        throw ValidationError(table.source + ":" + std::to_string(row.line)
                              + ": duplicate flow for edge '" + row.fields[0] + "'");
      seen[*e] = 1;
      values[*e] = csv::to_double(row, 1, table.source);
    }
    for (Index e = 0; e < graph.num_edges(); ++e)
      if (!seen[e])
        throw ValidationError(table.source + ": missing flow for edge '"
                              + graph.edge(e).id + "'");
    return FlowField(graph, std::move(values));
  }

  std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
      throw InputError("cannot write file: " + path.string());
    return out;
  }
}  // namespace

NetworkGraph parse_network(const std::filesystem::path& node_file,
                           const std::filesystem::path& edge_file) {
  return build_network(csv::read(node_file), csv::read(edge_file));
}

NetworkGraph parse_network_text(std::string_view node_csv,
                                std::string_view edge_csv) {
  return build_network(csv::parse(node_csv, "<nodes>"),
                       csv::parse(edge_csv, "<edges>"));
}

void write_network(const NetworkGraph& graph,
                   const std::filesystem::path& node_file,
                   const std::filesystem::path& edge_file) {
  auto nodes = open_output(node_file);
  nodes << "node_id,side,x,y\n";
  for (const Node& n : graph.nodes()) {
    nodes << n.id << ',' << to_string(n.side) << ','
          << (n.x ? csv::format_double(*n.x) : "") << ','
          << (n.y ? csv::format_double(*n.y) : "") << '\n';
  }
  auto edges = open_output(edge_file);
  edges << "edge_id,from_node,to_node,kind,length_m,diameter_m,htc_w_per_m_c\n";
  for (const Edge& e : graph.edges()) {
    edges << e.id << ',' << graph.node(e.tail).id << ','
          << graph.node(e.head).id << ',' << to_string(e.kind) << ','
          << csv::format_double(e.pipe.length_m) << ','
          << csv::format_double(e.pipe.diameter_m) << ','
          << csv::format_double(e.pipe.htc_w_per_m_c) << '\n';
  }
}

FlowField load_flow_field(const std::filesystem::path& flow_file,
                          const NetworkGraph& graph) {
  return build_flow(csv::read(flow_file), graph);
}

FlowField parse_flow_field_text(std::string_view flow_csv,
                                const NetworkGraph& graph) {
  return build_flow(csv::parse(flow_csv, "<flows>"), graph);
}

void write_flow_field(const NetworkGraph& graph, const FlowField& flow,
                      const std::filesystem::path& flow_file) {
  auto out = open_output(flow_file);
  out << "edge_id,massflow_kg_s\n";
  for (Index e = 0; e < graph.num_edges(); ++e)
    out << graph.edge(e).id << ',' << csv::format_double(flow[e]) << '\n';
}

// ---------------------------------------------------------------------------

ControlVolumes control_volumes(const NetworkGraph& graph) {
  ControlVolumes cv;
  cv.volume_m3.assign(graph.num_nodes(), 0.0);
  for (const Edge& e : graph.edges()) {
    const double half = 0.5 * e.pipe.volume_m3();
    cv.volume_m3[e.tail] += half;
    cv.volume_m3[e.head] += half;
  }
  for (Index i = 0; i < graph.num_nodes(); ++i)
    if (!(cv.volume_m3[i] > 0))
      throw ValidationError("node '" + graph.node(i).id
                            + "' has no control volume (isolated node)");
  return cv;
}

double velocity(double massflow_kg_s, const PipeParams& pipe, double rho) {
  return massflow_kg_s / (pipe.cross_section_m2() * rho);
}

RefinedNetwork refine_cells(const NetworkGraph& graph, const FlowField& flow,
                            double max_cell_length_m) {
  std::vector<Node> nodes = graph.nodes();
  std::vector<Edge> edges;
  std::vector<double> massflow;
  std::vector<Index> source;
  edges.reserve(graph.num_edges());

  for (Index e = 0; e < graph.num_edges(); ++e) {
    const Edge& edge = graph.edge(e);
    std::size_t cells = 1;
    if (max_cell_length_m > 0 && edge.is_pipe())
      cells = static_cast<std::size_t>(
          std::ceil(edge.pipe.length_m / max_cell_length_m - 1e-12));
    cells = std::max<std::size_t>(cells, 1);
    if (cells == 1) {
      edges.push_back(edge);
      massflow.push_back(flow[e]);
      source.push_back(e);
      continue;
    }

    const Node& a = graph.node(edge.tail);
    const Node& b = graph.node(edge.head);
    Index prev = edge.tail;
    for (std::size_t k = 1; k <= cells; ++k) {
      Index next = edge.head;
      if (k < cells) {
        Node mid;
        mid.id = edge.id + ":" + std::to_string(k);
        mid.side = a.side;
        const double frac = static_cast<double>(k) / static_cast<double>(cells);
        if (a.x && b.x)
          mid.x = *a.x + frac * (*b.x - *a.x);
        if (a.y && b.y)
          mid.y = *a.y + frac * (*b.y - *a.y);
        next = nodes.size();
        nodes.push_back(std::move(mid));
      }
      Edge piece = edge;
      piece.id = edge.id + ":" + std::to_string(k);
      piece.tail = prev;
      piece.head = next;
      piece.pipe.length_m = edge.pipe.length_m / static_cast<double>(cells);
      edges.push_back(std::move(piece));
      massflow.push_back(flow[e]);
      source.push_back(e);
      prev = next;
    }
  }

  NetworkGraph refined(std::move(nodes), std::move(edges));
  FlowField refined_flow(refined, std::move(massflow));
  return {std::move(refined), std::move(refined_flow), std::move(source)};
}

}  // namespace dhn
