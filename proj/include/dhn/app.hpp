//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "dhn/optimizer.hpp"
#include "dhn/scenario.hpp"

namespace dhn::app {

namespace fs = std::filesystem;

struct NetworkFiles {
  fs::path nodes, edges, flow;
  double max_cell_length_m = 0.0;  // 0 keeps the pipes as given
};

struct SynthSettings {
  fs::path base_load;
  std::optional<fs::path> consumer_means;  // consumer_edge_id,mean_power_w
  std::optional<std::size_t> consumers;    // used when no network is given
  int order = 4;
  double cutoff_hz = 69.4e-6;
  FrequencyBand band;
  double sigma = 0.2;
  std::string output = "demand.csv";
};

struct VerifySettings {
  std::optional<fs::path> reference;  // node_id,temp_c
  std::optional<double> consumer_delta_c;
  double dense_threshold_c = 1e-8;
  std::optional<double> reference_threshold_c;
  int histogram_bins = 20;
};

/// One parsed JSON run configuration. Relative paths are resolved against
/// the directory of the configuration file.
struct RunConfig {
  fs::path base_dir;
  nlohmann::json document;  // as read, echoed into reports

  std::optional<NetworkFiles> network;
  std::optional<fs::path> demand;
  TimeGrid grid{900.0, 288};
  PhysicalConstants constants;
  double ambient_c = 10.0;
  std::optional<fs::path> ambient_file;  // time_s,temp_c

  std::optional<fs::path> price_file;
  double alpha = 1.0;
  double beta = 0.0;

  ConstraintSet constraints;
  std::optional<double> control_constant_c;
  std::optional<fs::path> control_file;
  std::optional<std::vector<double>> initial_control_c;

  OptimizerConfig optimizer;
  std::optional<SynthSettings> synth;
  VerifySettings verify;
  std::vector<double> quantile_levels{1, 10, 50, 90, 99};

  fs::path out_dir = "out";
  std::uint64_t seed = 1;
  int threads = 1;
  bool quiet = false;
};

RunConfig parse_config(const nlohmann::json& doc, const fs::path& base_dir);
RunConfig load_config(const fs::path& file);

/// Command-line overrides.
struct Overrides {
  std::optional<fs::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool quiet = false;
};
void apply(RunConfig& config, const Overrides& overrides);

// ---------------------------------------------------------------------------

/// Network, flows and (optional) cell refinement from the configured files.
struct LoadedNetwork {
  NetworkGraph graph;
  FlowField flow;
};
LoadedNetwork load_network(const RunConfig& config);

/// Builds the scenario; `initial_control` overrides the configured one.
Scenario load_scenario(const RunConfig& config,
                       std::optional<Eigen::VectorXd> initial_control = std::nullopt);

/// The configured control: a file (`time_s,<producer ids>`, one row per step)
/// or a constant, 110 degC when nothing is configured.
ControlTrajectory load_control(const RunConfig& config, const Scenario& scenario);
void write_control(const Scenario& scenario, const ControlTrajectory& u,
                   const fs::path& file);

/// Low-pass filtered base load, varied per consumer.
DemandSet synthesize_demand(const RunConfig& config);

/// Per step (column), rows: min, one row per level (percent), median.
/// Linear interpolation between order statistics.
Eigen::MatrixXd compute_quantiles(const StateTrajectory& y,
                                  std::span<const Index> nodes,
                                  std::span<const double> levels_percent);

/// Quantile of a sample at `level` in [0, 1], linear interpolation.
double quantile(std::vector<double> values, double level);

// ---------------------------------------------------------------------------
// Commands. Return the process exit code; throw InputError / NumericalError
// for failures that abort the command.

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitInput = 2;

int run_simulate(const RunConfig& config, std::ostream& log);
int run_optimize(const RunConfig& config, std::ostream& log);
int run_synth_demand(const RunConfig& config, std::ostream& log);
int run_verify(const RunConfig& config, std::ostream& log);
/// Reloads the report and series written by `optimize` into `out_dir` and
/// recomputes the savings.
int run_report(const fs::path& out_dir, std::ostream& log);

}  // namespace dhn::app
