//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "dhn/synthetic.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "dhn/error.hpp"

namespace dhn {

namespace {
  double sized_diameter(double massflow, double velocity, double rho) {
    const double d = std::sqrt(4.0 * massflow / (std::numbers::pi * rho * velocity));
    return std::round(d * 1000.0) / 1000.0;  // whole millimetres
  }

  PipeParams pipe(const TreeOptions& o, double length, double massflow) {
    PipeParams p;
    p.length_m = std::round(length * 10.0) / 10.0;
    p.diameter_m = std::max(0.02, sized_diameter(massflow, o.design_velocity_m_s, o.rho_kg_m3));
    p.htc_w_per_m_c = o.htc_base_w_per_m_c + o.htc_per_diameter_w_per_m2_c * p.diameter_m;
    return p;
  }

  PipeParams exchanger(const TreeOptions& o, double massflow) {
    PipeParams p;
    p.length_m = 5.0;
    p.diameter_m = std::max(0.02, sized_diameter(massflow, o.design_velocity_m_s, o.rho_kg_m3));
    return p;
  }
}  // namespace

SyntheticNetwork synthetic_tree(const TreeOptions& o) {
  const std::size_t n = o.consumers;
  if (n == 0)
    throw InputError("synthetic network needs at least one consumer");
  if (o.plants != 1 && o.plants != 2)
    throw InputError("synthetic network supports one or two plants");
  if (o.plants == 2 && n < 3)
    throw InputError("a second plant needs at least three consumers");

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> main_len(o.main_length_min_m, o.main_length_max_m);
  std::uniform_real_distribution<double> service_len(o.service_length_min_m,
                                                     o.service_length_max_m);
  std::uniform_real_distribution<double> flow(o.consumer_flow_min_kg_s,
                                              o.consumer_flow_max_kg_s);

  std::vector<std::size_t> parent(n, 0);
  std::vector<double> mdot(n), main_length(n), service_length(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0)
      parent[i] = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    mdot[i] = std::round(flow(rng) * 1000.0) / 1000.0;
    main_length[i] = main_len(rng);
    service_length[i] = service_len(rng);
  }

  // Subtree demand flow; parents precede children.
  std::vector<double> subtree = mdot;
  for (std::size_t i = n; i-- > 1;)
    subtree[parent[i]] += subtree[i];
  std::vector<std::size_t> depth(n, 0);
  for (std::size_t i = 1; i < n; ++i)
    depth[i] = depth[parent[i]] + 1;

  std::vector<double> main_flow = subtree;
  std::size_t second_at = 0;
  double second_flow = 0.0;
  if (o.plants == 2) {
    // Junction whose subtree carries closest to a third of the total.
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < n; ++i) {
      const double gap = std::abs(subtree[i] - subtree[0] / 3.0);
      if (gap < best) {
        best = gap;
        second_at = i;
      }
    }
    second_flow = 0.5 * subtree[second_at];
    for (std::size_t a = second_at;; a = parent[a]) {
      main_flow[a] -= second_flow;
      if (a == 0)
        break;
    }
  }

  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<double> flows;
  auto add_node = [&](std::string id, Side side, double x, double y) {
    nodes.push_back({std::move(id), side, x, y});
    return nodes.size() - 1;
  };
  auto add_edge = [&](std::string id, Index tail, Index head, EdgeKind kind,
                      PipeParams p, double m) {
    edges.push_back({std::move(id), tail, head, kind, p});
    flows.push_back(m);
  };

  const Index ps1 = add_node("ps1", Side::supply, 0.0, 0.0);
  const Index pr1 = add_node("pr1", Side::return_side, 0.0, -5.0);
  std::vector<Index> js(n), jr(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto tag = std::to_string(i + 1);
    const double x = 100.0 * static_cast<double>(depth[i] + 1);
    const double y = 20.0 * static_cast<double>(i);
    js[i] = add_node("j" + tag, Side::supply, x, y);
    jr[i] = add_node("jr" + tag, Side::return_side, x, y - 5.0);
    const Index cs = add_node("s" + tag, Side::supply, x + 10.0, y + 10.0);
    const Index cr = add_node("r" + tag, Side::return_side, x + 10.0, y + 5.0);

    const Index from_s = i == 0 ? ps1 : js[parent[i]];
    const Index to_r = i == 0 ? pr1 : jr[parent[i]];
    const PipeParams trunk = pipe(o, main_length[i], main_flow[i]);
    add_edge("sm" + tag, from_s, js[i], EdgeKind::supply, trunk, main_flow[i]);
    add_edge("rm" + tag, jr[i], to_r, EdgeKind::return_pipe, trunk, main_flow[i]);
    const PipeParams service = pipe(o, service_length[i], mdot[i]);
    add_edge("ss" + tag, js[i], cs, EdgeKind::supply, service, mdot[i]);
    add_edge("c" + tag, cs, cr, EdgeKind::consumer, exchanger(o, mdot[i]), mdot[i]);
    add_edge("sr" + tag, cr, jr[i], EdgeKind::return_pipe, service, mdot[i]);
  }
  add_edge("p1", pr1, ps1, EdgeKind::producer, exchanger(o, main_flow[0]), main_flow[0]);

  if (o.plants == 2) {
    const Node& at = nodes[js[second_at]];
    const Index ps2 = add_node("ps2", Side::supply, *at.x, *at.y - 50.0);
    const Index pr2 = add_node("pr2", Side::return_side, *at.x, *at.y - 55.0);
    const PipeParams feed = pipe(o, o.main_length_min_m, second_flow);
    add_edge("fs2", ps2, js[second_at], EdgeKind::supply, feed, second_flow);
    add_edge("fr2", jr[second_at], pr2, EdgeKind::return_pipe, feed, second_flow);
    add_edge("p2", pr2, ps2, EdgeKind::producer, exchanger(o, second_flow), second_flow);
  }

  SyntheticNetwork out;
  out.graph = NetworkGraph(std::move(nodes), std::move(edges));
  out.flow = FlowField(out.graph, std::move(flows));
  for (std::size_t i = 0; i < n; ++i) {
    out.consumer_ids.push_back("c" + std::to_string(i + 1));
    out.consumer_mean_w.push_back(mdot[i] * o.cp_j_per_kg_c * o.mean_delta_c);
  }
  return out;
}

SyntheticNetwork pipe_chain(const ChainOptions& o) {
  if (o.cells == 0)
    throw InputError("pipe chain needs at least one cell");
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<double> flows;
  const double cell = o.length_m / static_cast<double>(o.cells);

  nodes.push_back({"ps", Side::supply, 0.0, 0.0});
  for (std::size_t k = 1; k < o.cells; ++k)
    nodes.push_back({"x" + std::to_string(k), Side::supply,
                     cell * static_cast<double>(k), 0.0});
  nodes.push_back({"cs", Side::supply, o.length_m, 0.0});
  nodes.push_back({"cr", Side::return_side, o.length_m, -5.0});
  nodes.push_back({"pr", Side::return_side, 0.0, -5.0});
  const Index cs = o.cells, cr = o.cells + 1, pr = o.cells + 2;

  const PipeParams segment{cell, o.diameter_m, o.htc_w_per_m_c};
  for (std::size_t k = 0; k < o.cells; ++k) {
    edges.push_back({"pipe:" + std::to_string(k), k, k + 1, EdgeKind::supply, segment});
    flows.push_back(o.massflow_kg_s);
  }
  const PipeParams hx{1.0, o.diameter_m, 0.0};
  edges.push_back({"consumer", cs, cr, EdgeKind::consumer, hx});
  flows.push_back(o.massflow_kg_s);
  edges.push_back({"return", cr, pr, EdgeKind::return_pipe,
                   PipeParams{o.return_length_m, o.diameter_m, o.htc_w_per_m_c}});
  flows.push_back(o.massflow_kg_s);
  edges.push_back({"plant", pr, 0, EdgeKind::producer, hx});
  flows.push_back(o.massflow_kg_s);

  SyntheticNetwork out;
  out.graph = NetworkGraph(std::move(nodes), std::move(edges));
  out.flow = FlowField(out.graph, std::move(flows));
  out.consumer_ids = {"consumer"};
  out.consumer_mean_w = {0.0};
  return out;
}

LoadSeries synthetic_base_load(double days, double interval_s, double mean_w,
                               std::uint64_t seed) {
  if (!(days > 0) || !(interval_s > 0) || !(mean_w > 0))
    throw InputError("base load needs positive duration, interval and mean");
  const auto samples =
      static_cast<std::size_t>(std::llround(days * 86400.0 / interval_s)) + 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.06);
  LoadSeries out;
  out.interval_s = interval_s;
  out.values_w.resize(samples);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = out.time(i);
    const double shape = 1.0 + 0.25 * std::cos(two_pi * (t - 7.0 * 3600.0) / 86400.0)
                         + 0.08 * std::cos(2.0 * two_pi * (t - 19.0 * 3600.0) / 86400.0);
    out.values_w[i] = std::max(0.0, mean_w * (shape + noise(rng)));
  }
  return out;
}

}  // namespace dhn
