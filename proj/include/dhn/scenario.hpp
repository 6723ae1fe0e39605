//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dhn/network.hpp"
#include "dhn/objective.hpp"
#include "dhn/series.hpp"
#include "dhn/thermal.hpp"

namespace dhn {

using PriceSeries = TimeSeries;

/// One demand series per consumer edge, all on the same sample grid.
struct DemandSet {
  std::vector<std::string> consumer_ids;
  std::vector<LoadSeries> series;

  std::size_t size() const { return series.size(); }
  const LoadSeries* find(std::string_view consumer_id) const;
};

// ---------------------------------------------------------------------------
// Filtering

/// Second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

/// Digital Butterworth low-pass (bilinear transform with prewarping) as a
/// cascade of biquads. `order` must be even.
std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz,
                                        double sample_rate_hz);

/// Forward-backward filtering with odd reflective edge padding and
/// steady-state initial conditions; the result has zero phase.
std::vector<double> filtfilt(const std::vector<Biquad>& sections,
                             std::span<const double> x);

/// Number of samples filtfilt pads at each edge.
std::size_t filtfilt_padding(const std::vector<Biquad>& sections);

/// Zero-phase Butterworth low-pass; negative outputs are clamped to zero.
LoadSeries lowpass(const LoadSeries& series, int order, double cutoff_hz);

// ---------------------------------------------------------------------------
// Demand synthesis

struct FrequencyBand {
  double low_hz = 1.0 / 86400.0;
  double high_hz = 1.0 / 7200.0;
};

/// Deterministic per-consumer seed derived from the master seed and the id.
std::uint64_t stream_seed(std::uint64_t master_seed, std::string_view key);

/// Equal shares of the base mean, one per consumer.
std::vector<double> equal_share_targets(const LoadSeries& base, std::size_t n);

/// Variations of `base` by multiplicative log-normal noise on the Fourier
/// bins inside `band` (DC untouched), clamped at zero and rescaled so the
/// mean of output i is targets[i]. keys[i] selects the random stream.
std::vector<LoadSeries> synthesize_variations(const LoadSeries& base,
                                              std::span<const std::string> keys,
                                              const FrequencyBand& band, double sigma,
                                              std::uint64_t seed,
                                              std::span<const double> targets,
                                              int threads = 1);

/// Convenience overload keyed by output index.
std::vector<LoadSeries> synthesize_variations(const LoadSeries& base, std::size_t n,
                                              const FrequencyBand& band, double sigma,
                                              std::uint64_t seed,
                                              std::span<const double> targets,
                                              int threads = 1);

// ---------------------------------------------------------------------------
// Grid and scenario

/// Linear interpolation at t_0 .. t_steps (steps + 1 values).
std::vector<double> resample_to_grid(const TimeSeries& series, const TimeGrid& grid);

/// A complete, immutable optimal-control scenario.
struct Scenario {
  std::shared_ptr<const ThermalModel> model;
  Forcing forcing;
  std::vector<std::string> consumer_ids;  // in boundary (consumer edge) order
  Eigen::MatrixXd demand_w;               // consumers x (steps + 1)
  PriceModel price;
  std::vector<double> step_price;  // base price at t_1 .. t_steps
  ConstraintSet constraints;
  /// Plant temperatures for the steady initial state. When empty the first
  /// control column is used, making the initial state depend on the control.
  std::optional<Eigen::VectorXd> initial_control;

  const ThermalModel& thermal() const { return *model; }
  const TimeGrid& grid() const { return model->grid(); }
  std::size_t num_plants() const { return model->boundary().num_plants(); }
};

struct ScenarioInputs {
  NetworkGraph graph;
  FlowField flow;
  PhysicalConstants constants;
  TimeGrid grid;
  DemandSet demands;
  /// Ambient temperature; a scalar is used when the series is empty.
  double ambient_c = 10.0;
  std::optional<TimeSeries> ambient_series;
  PriceModel price;
  ConstraintSet constraints;
  std::optional<Eigen::VectorXd> initial_control;
};

Scenario build_scenario(ScenarioInputs inputs);

/// Same scenario with a different price model.
Scenario with_price(const Scenario& scenario, PriceModel price);

// ---------------------------------------------------------------------------
// Files

/// `time_s,power_w`, uniform spacing. A single-sample file is taken to be
/// sampled every 900 s.
LoadSeries read_load_series(const std::filesystem::path& path);
void write_load_series(const LoadSeries& series, const std::filesystem::path& path);

/// `time_s,price_eur_mwh`
PriceSeries read_price_series(const std::filesystem::path& path);
void write_price_series(const PriceSeries& series, const std::filesystem::path& path);

/// `time_s,consumer_edge_id,power_w`, rows grouped by time.
DemandSet read_demand_set(const std::filesystem::path& path);
void write_demand_set(const DemandSet& demands, const std::filesystem::path& path);

}  // namespace dhn
