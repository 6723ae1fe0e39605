//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dhn/network.hpp"
#include "dhn/series.hpp"

namespace dhn {

/// A generated network with design flows and per-consumer mean demand.
struct SyntheticNetwork {
  NetworkGraph graph;
  FlowField flow;
  std::vector<std::string> consumer_ids;  // consumer edge ids
  std::vector<double> consumer_mean_w;
};

/// Random tree layout. Every consumer hangs off its own junction through a
/// service pipe, so consumer outlets have a single inflow. A second plant,
/// when requested, feeds half of the flow of a mid-depth subtree.
struct TreeOptions {
  std::size_t consumers = 10;
  std::size_t plants = 1;  // 1 or 2
  std::uint64_t seed = 1;
  double main_length_min_m = 150.0;
  double main_length_max_m = 400.0;
  double service_length_min_m = 30.0;
  double service_length_max_m = 80.0;
  double consumer_flow_min_kg_s = 0.5;
  double consumer_flow_max_kg_s = 0.9;
  double design_velocity_m_s = 0.6;
  /// k = htc_base + htc_per_diameter * d
  double htc_base_w_per_m_c = 0.2;
  double htc_per_diameter_w_per_m2_c = 1.0;
  /// Mean consumer temperature drop used to size mean demand.
  double mean_delta_c = 35.0;
  double cp_j_per_kg_c = 4186.0;
  double rho_kg_m3 = 1000.0;
};

SyntheticNetwork synthetic_tree(const TreeOptions& options);

/// Plant -> one supply pipe -> consumer -> short return pipe -> plant. The
/// supply pipe is split into `cells` equal cells.
struct ChainOptions {
  double length_m = 1000.0;
  double diameter_m = 0.1;
  double htc_w_per_m_c = 0.5;
  double massflow_kg_s = 1.0;
  std::size_t cells = 1;
  double return_length_m = 10.0;
};

SyntheticNetwork pipe_chain(const ChainOptions& options);

/// District load over whole days with daily and half-daily cycles plus white
/// noise, sampled every `interval_s` including both end points.
LoadSeries synthetic_base_load(double days, double interval_s, double mean_w,
                               std::uint64_t seed);

}  // namespace dhn
