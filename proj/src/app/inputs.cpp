//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "dhn/app.hpp"
#include "dhn/csv.hpp"
#include "dhn/error.hpp"

namespace dhn::app {

namespace {
  void require_file(const fs::path& p, std::string_view what) {
    if (!fs::is_regular_file(p))
      throw InputError(std::string(what) + " file not found: " + p.string());
  }
}  // namespace

LoadedNetwork load_network(const RunConfig& config) {
  if (!config.network)
    throw InputError("config: 'network' is required for this command");
  const NetworkFiles& files = *config.network;
  require_file(files.nodes, "node");
  require_file(files.edges, "edge");
  require_file(files.flow, "flow");
  NetworkGraph graph = parse_network(files.nodes, files.edges);
  FlowField flow = load_flow_field(files.flow, graph);
  if (files.max_cell_length_m > 0) {
    RefinedNetwork refined = refine_cells(graph, flow, files.max_cell_length_m);
    return {std::move(refined.graph), std::move(refined.flow)};
  }
  return {std::move(graph), std::move(flow)};
}

Scenario load_scenario(const RunConfig& config,
                       std::optional<Eigen::VectorXd> initial_control) {
  LoadedNetwork net = load_network(config);
  if (!config.demand)
    throw InputError("config: 'demand' is required for this command");
  require_file(*config.demand, "demand");

  ScenarioInputs in;
  in.graph = std::move(net.graph);
  in.flow = std::move(net.flow);
  in.constants = config.constants;
  in.grid = config.grid;
  in.demands = read_demand_set(*config.demand);
  in.ambient_c = config.ambient_c;
  if (config.ambient_file) {
    require_file(*config.ambient_file, "ambient temperature");
    const csv::Table t = csv::read(*config.ambient_file);
    t.require_header({"time_s", "temp_c"});
    std::vector<double> times, values;
    for (const csv::Row& row : t.rows) {
      times.push_back(csv::to_double(row, 0, t.source));
      values.push_back(csv::to_double(row, 1, t.source));
    }
    in.ambient_series = TimeSeries(std::move(times), std::move(values));
  }
  if (config.price_file) {
    require_file(*config.price_file, "price");
    in.price.is_static = false;
    in.price.base_price_eur_mwh = read_price_series(*config.price_file);
  }
  in.price.alpha = config.alpha;
  in.price.beta = config.beta;
  in.constraints = config.constraints;

  if (!initial_control && config.initial_control_c) {
    const auto& v = *config.initial_control_c;
    initial_control = Eigen::Map<const Eigen::VectorXd>(v.data(),
                                                        static_cast<Eigen::Index>(v.size()));
  }
  if (initial_control && initial_control->size() == 1) {
    // a scalar applies to every plant
    const double value = (*initial_control)[0];
    const auto plants = static_cast<Eigen::Index>(
        in.graph.edges_of_kind(EdgeKind::producer).size());
    initial_control = Eigen::VectorXd::Constant(plants, value);
  }
  in.initial_control = std::move(initial_control);
  return build_scenario(std::move(in));
}

ControlTrajectory load_control(const RunConfig& config, const Scenario& scenario) {
  const auto plants = static_cast<Eigen::Index>(scenario.num_plants());
  const auto steps = static_cast<Eigen::Index>(scenario.grid().steps);
  if (!config.control_file)
    return constant_control(scenario, config.control_constant_c.value_or(110.0));

  require_file(*config.control_file, "control");
  const csv::Table t = csv::read(*config.control_file);
  const NetworkGraph& graph = scenario.thermal().graph();
  const BoundarySpec& bc = scenario.thermal().boundary();
  if (t.header.empty() || t.header[0] != "time_s")
    throw ParseError(t.source, 1, "first column must be time_s");
  std::vector<Eigen::Index> column_of(static_cast<std::size_t>(plants), -1);
  for (std::size_t col = 1; col < t.header.size(); ++col) {
    bool found = false;
    for (std::size_t p = 0; p < bc.num_plants(); ++p)
      if (graph.edge(bc.producer_edges[p]).id == t.header[col]) {
        column_of[p] = static_cast<Eigen::Index>(col);
        found = true;
      }
    if (!found)
      throw ParseError(t.source, 1, "'" + t.header[col] + "' is not a producer edge");
  }
  for (std::size_t p = 0; p < bc.num_plants(); ++p)
    if (column_of[p] < 0)
      throw ParseError(t.source, 1, "no column for producer '"
                                        + graph.edge(bc.producer_edges[p]).id + "'");
  if (static_cast<Eigen::Index>(t.rows.size()) != steps)
    throw InputError(t.source + ": expected " + std::to_string(steps) + " control rows, got "
                     + std::to_string(t.rows.size()));

  ControlTrajectory u;
  u.supply_c.resize(plants, steps);
  for (Eigen::Index k = 0; k < steps; ++k) {
    const csv::Row& row = t.rows[static_cast<std::size_t>(k)];
    const double time = csv::to_double(row, 0, t.source);
    const double expect = scenario.grid().time(static_cast<std::size_t>(k) + 1);
    if (std::abs(time - expect) > 1e-6)
      throw ParseError(t.source, row.line,
                       "expected time " + csv::format_double(expect) + " s");
    for (Eigen::Index p = 0; p < plants; ++p)
      u.supply_c(p, k) = csv::to_double(
          row, static_cast<std::size_t>(column_of[static_cast<std::size_t>(p)]), t.source);
  }
  return u;
}

void write_control(const Scenario& scenario, const ControlTrajectory& u,
                   const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out)
    throw InputError("cannot write file: " + file.string());
  const NetworkGraph& graph = scenario.thermal().graph();
  out << "time_s";
  for (Index e : scenario.thermal().boundary().producer_edges)
    out << ',' << graph.edge(e).id;
  out << '\n';
  for (Eigen::Index k = 0; k < u.supply_c.cols(); ++k) {
    out << csv::format_double(scenario.grid().time(static_cast<std::size_t>(k) + 1));
    for (Eigen::Index p = 0; p < u.supply_c.rows(); ++p)
      out << ',' << csv::format_double(u.supply_c(p, k));
    out << '\n';
  }
}

DemandSet synthesize_demand(const RunConfig& config) {
  if (!config.synth)
    throw InputError("config: 'synth' section is required for synth-demand");
  const SynthSettings& st = *config.synth;
  require_file(st.base_load, "base load");
  const LoadSeries base = read_load_series(st.base_load);

  std::vector<std::string> ids;
  if (config.network) {
    const LoadedNetwork net = load_network(config);
    for (Index e : net.graph.edges_of_kind(EdgeKind::consumer))
      ids.push_back(net.graph.edge(e).id);
  } else if (st.consumers) {
    for (std::size_t i = 0; i < *st.consumers; ++i)
      ids.push_back("c" + std::to_string(i + 1));
  } else {
    throw InputError("config: synth-demand needs a network or synth.consumers");
  }

  std::vector<double> targets = equal_share_targets(base, ids.size());
  if (st.consumer_means) {
    require_file(*st.consumer_means, "consumer mean");
    const csv::Table t = csv::read(*st.consumer_means);
    t.require_header({"consumer_edge_id", "mean_power_w"});
    std::map<std::string, double> means;
    for (const csv::Row& row : t.rows)
      means[row.fields[0]] = csv::to_double(row, 1, t.source);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto it = means.find(ids[i]);
      if (it == means.end())
        throw InputError(t.source + ": no mean power for consumer '" + ids[i] + "'");
      targets[i] = it->second;
    }
  }

  const LoadSeries smooth = lowpass(base, st.order, st.cutoff_hz);
  DemandSet out;
  out.series = synthesize_variations(smooth, ids, st.band, st.sigma, config.seed, targets,
                                     config.threads);
  out.consumer_ids = std::move(ids);
  return out;
}

double quantile(std::vector<double> values, double level) {
  if (values.empty())
    throw InputError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = level * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Eigen::MatrixXd compute_quantiles(const StateTrajectory& y, std::span<const Index> nodes,
                                  std::span<const double> levels_percent) {
  if (nodes.empty())
    throw InputError("quantiles need at least one consumer");
  const Eigen::Index steps = y.temp_c.cols() - 1;
  const auto rows = static_cast<Eigen::Index>(levels_percent.size() + 2);
  Eigen::MatrixXd out(rows, steps);
  std::vector<double> sample(nodes.size());
  for (Eigen::Index k = 0; k < steps; ++k) {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      sample[i] = y.temp_c(static_cast<Eigen::Index>(nodes[i]), k + 1);
    out(0, k) = *std::min_element(sample.begin(), sample.end());
    for (std::size_t l = 0; l < levels_percent.size(); ++l)
      out(static_cast<Eigen::Index>(l + 1), k) = quantile(sample, levels_percent[l] / 100.0);
    out(rows - 1, k) = quantile(sample, 0.5);
  }
  return out;
}

}  // namespace dhn::app
