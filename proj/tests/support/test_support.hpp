//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the unit and acceptance tests: fixture paths, small
// scenarios built in memory, and a dense steady-state oracle assembled
// directly from the graph without touching the sparse solver.
//

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhn/app.hpp"
#include "dhn/network.hpp"
#include "dhn/scenario.hpp"
#include "dhn/synthetic.hpp"
#include "dhn/thermal.hpp"

namespace dhn::test {

namespace fs = std::filesystem;

inline fs::path data_dir() { return fs::path(DHN_DATA_DIR); }

inline fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::path(DHN_SCRATCH_DIR) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Deterministic generator for property tests.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

inline double relative_error(double a, double b, double floor = 1e-300) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Fixture configuration with outputs redirected to a scratch directory.
inline app::RunConfig fixture_config(const std::string& set, const std::string& file,
                                     const std::string& out_name, int threads = 1) {
  app::RunConfig c = app::load_config(data_dir() / set / file);
  c.out_dir = scratch_dir(out_name);
  c.threads = threads;
  c.optimizer.threads = threads;
  c.quiet = true;
  return c;
}

/// Constant-demand scenario around a synthetic network.
inline Scenario scenario_from(const SyntheticNetwork& net, TimeGrid grid,
                              double demand_w, double ambient_c = 10.0,
                              std::optional<Eigen::VectorXd> initial = std::nullopt) {
  ScenarioInputs in;
  in.graph = net.graph;
  in.flow = net.flow;
  in.grid = grid;
  in.ambient_c = ambient_c;
  const std::size_t samples = grid.steps + 1;
  for (const std::string& id : net.consumer_ids) {
    LoadSeries s;
    s.interval_s = grid.dt_s;
    s.values_w.assign(samples, demand_w);
    in.demands.consumer_ids.push_back(id);
    in.demands.series.push_back(std::move(s));
  }
  in.initial_control = std::move(initial);
  return build_scenario(std::move(in));
}

/// Steady temperatures from a dense matrix built straight from the network
/// description: Dirichlet rows at plant outlets, fixed drops across consumers
/// and an inflow-weighted upwind balance with half-pipe ambient losses
/// everywhere else. `delta_c` is indexed by edge and read on consumer edges.
inline Eigen::VectorXd dense_steady_oracle(const NetworkGraph& g, const FlowField& flow,
                                           const PhysicalConstants& pc,
                                           const std::vector<double>& plant_c,
                                           const std::vector<double>& delta_c,
                                           double ambient_c) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  std::vector<int> fixed(g.num_nodes(), 0);
  std::size_t plant = 0;
  for (Index e = 0; e < g.num_edges(); ++e) {
    const Edge& edge = g.edge(e);
    const auto h = static_cast<Eigen::Index>(edge.head);
    if (edge.kind == EdgeKind::producer) {
      a(h, h) = 1.0;
      b[h] = plant_c[plant++];
      fixed[edge.head] = 1;
    } else if (edge.kind == EdgeKind::consumer) {
      a(h, h) = 1.0;
      a(h, static_cast<Eigen::Index>(edge.tail)) = -1.0;
      b[h] = -delta_c[e];
      fixed[edge.head] = 1;
    }
  }
  for (Index e = 0; e < g.num_edges(); ++e) {
    const Edge& edge = g.edge(e);
    const double m = flow[e];
    const Index down = m > 0 ? edge.head : edge.tail;
    const Index up = m > 0 ? edge.tail : edge.head;
    const double adv = pc.cp_j_per_kg_c * std::abs(m);
    if (!fixed[down]) {
      a(static_cast<Eigen::Index>(down), static_cast<Eigen::Index>(down)) += adv;
      a(static_cast<Eigen::Index>(down), static_cast<Eigen::Index>(up)) -= adv;
    }
    if (edge.is_pipe()) {
      const double half = 0.5 * edge.pipe.htc_w_per_m_c * edge.pipe.length_m;
      for (Index v : {edge.tail, edge.head})
        if (!fixed[v]) {
          a(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(v)) += half;
          b[static_cast<Eigen::Index>(v)] += half * ambient_c;
        }
    }
  }
  return a.fullPivLu().solve(b);
}

/// Per-edge consumer drops for column `j` of a scenario's forcing.
inline std::vector<double> edge_deltas(const Scenario& s, Eigen::Index j) {
  std::vector<double> out(s.thermal().graph().num_edges(), 0.0);
  const BoundarySpec& bc = s.thermal().boundary();
  for (std::size_t c = 0; c < bc.num_consumers(); ++c)
    out[bc.consumer_edges[c]] = s.forcing.consumer_delta_c(static_cast<Eigen::Index>(c), j);
  return out;
}

}  // namespace dhn::test
