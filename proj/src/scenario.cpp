//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include "dhn/scenario.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <numbers>
#include <random>

#include <unsupported/Eigen/FFT>

#include "dhn/csv.hpp"
#include "dhn/error.hpp"
#include "dhn/parallel.hpp"

namespace dhn {

const LoadSeries* DemandSet::find(std::string_view consumer_id) const {
  for (std::size_t i = 0; i < consumer_ids.size(); ++i)
    if (consumer_ids[i] == consumer_id)
      return &series[i];
  return nullptr;
}

// ---------------------------------------------------------------------------
// Butterworth

std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz,
                                        double sample_rate_hz) {
  if (order < 2 || order % 2 != 0)
    throw InputError("Butterworth order must be a positive even number");
  if (!(sample_rate_hz > 0))
    throw InputError("sample rate must be > 0");
  if (!(cutoff_hz > 0 && cutoff_hz < 0.5 * sample_rate_hz))
    throw InputError("cutoff frequency must lie in (0, Nyquist)");

  const double k = 2.0 * sample_rate_hz;
  const double omega = k * std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
  const double k2 = k * k;
  const double w2 = omega * omega;

  std::vector<Biquad> sections;
  for (int i = 0; i < order / 2; ++i) {
    // analog pole pair s = omega * (-sin(phi) +- j cos(phi))
    const double damping =
        2.0 * omega * k * std::sin(std::numbers::pi * (2 * i + 1) / (2.0 * order));
    const double a0 = k2 + damping + w2;
    Biquad s;
    s.b0 = w2 / a0;
    s.b1 = 2.0 * w2 / a0;
    s.b2 = w2 / a0;
    s.a1 = (2.0 * w2 - 2.0 * k2) / a0;
    s.a2 = (k2 - damping + w2) / a0;
    sections.push_back(s);
  }
  return sections;
}

namespace {
  struct SectionState {
    double z0 = 0, z1 = 0;
  };

  // Direct form II transposed, state initialized to the steady response of a
  // constant input x0.
  void filter_in_place(const std::vector<Biquad>& sections, std::vector<double>& x) {
    if (x.empty())
      return;
    double level = x.front();
    for (const Biquad& s : sections) {
      const double g = s.dc_gain();
      SectionState st;
      st.z1 = (s.b2 - s.a2 * g) * level;
      st.z0 = (g - s.b0) * level;
      for (double& v : x) {
        const double in = v;
        const double out = s.b0 * in + st.z0;
        st.z0 = s.b1 * in - s.a1 * out + st.z1;
        st.z1 = s.b2 * in - s.a2 * out;
        v = out;
      }
      level *= g;
    }
  }
}  // namespace

std::size_t filtfilt_padding(const std::vector<Biquad>& sections) {
  return 3 * (2 * sections.size() + 1);
}

std::vector<double> filtfilt(const std::vector<Biquad>& sections,
                             std::span<const double> x) {
  const std::size_t pad = filtfilt_padding(sections);
  const std::size_t n = x.size();
  if (n <= pad)
    throw InputError("series of " + std::to_string(n)
                     + " samples is too short for filter edge padding of "
                     + std::to_string(pad) + " samples");

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i)
    ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i)
    ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  filter_in_place(sections, ext);
  std::reverse(ext.begin(), ext.end());
  filter_in_place(sections, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

LoadSeries lowpass(const LoadSeries& series, int order, double cutoff_hz) {
  series.validate();
  if (series.size() < 8)
    throw InputError("low-pass filtering needs at least 8 samples");
  const auto sections = butterworth_lowpass(order, cutoff_hz, 1.0 / series.interval_s);
  LoadSeries out = series;
  out.values_w = filtfilt(sections, series.values_w);
  for (double& v : out.values_w)
    v = std::max(v, 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// Demand synthesis

std::uint64_t stream_seed(std::uint64_t master_seed, std::string_view key) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  // splitmix64 finalizer over the combination
  std::uint64_t z = master_seed ^ (h + 0x9E3779B97F4A7C15ULL + (master_seed << 6)
                                   + (master_seed >> 2));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<double> equal_share_targets(const LoadSeries& base, std::size_t n) {
  if (n == 0)
    throw InputError("need at least one consumer");
  return std::vector<double>(n, base.mean() / static_cast<double>(n));
}

std::vector<LoadSeries> synthesize_variations(const LoadSeries& base,
                                              std::span<const std::string> keys,
                                              const FrequencyBand& band, double sigma,
                                              std::uint64_t seed,
                                              std::span<const double> targets,
                                              int threads) {
  base.validate();
  const std::size_t n_out = keys.size();
  if (n_out == 0)
    throw InputError("need at least one variation");
  if (targets.size() != n_out)
    throw InputError("need one scaling target per variation");
  if (!(sigma >= 0))
    throw InputError("noise scale must be >= 0");
  const std::size_t n = base.size();
  if (n < 2)
    throw InputError("base series needs at least two samples");
  const double nyquist = 0.5 / base.interval_s;
  if (!(band.low_hz > 0 && band.low_hz < band.high_hz && band.high_hz < nyquist))
    throw InputError("frequency band must satisfy 0 < low < high < Nyquist");

  std::vector<std::size_t> bins;
  const double df = 1.0 / (static_cast<double>(n) * base.interval_s);
  for (std::size_t j = 1; j <= n / 2; ++j) {
    const double f = static_cast<double>(j) * df;
    if (f >= band.low_hz && f <= band.high_hz)
      bins.push_back(j);
  }
  if (bins.empty())
    throw InputError("frequency band contains no Fourier bins of the base series");
  for (double t : targets)
    if (!(t >= 0 && std::isfinite(t)))
      throw InputError("scaling targets must be finite and >= 0");

  std::vector<std::complex<double>> spectrum;
  {
    Eigen::FFT<double> fft;
    fft.fwd(spectrum, base.values_w);
  }

  std::vector<LoadSeries> out(n_out);
  parallel_for(n_out, threads, [&](std::size_t i) {
    std::mt19937_64 rng(stream_seed(seed, keys[i]));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::complex<double>> varied = spectrum;
    for (std::size_t j : bins) {
      const double factor = std::exp(sigma * normal(rng));
      varied[j] *= factor;
      if (j != n - j)
        varied[n - j] *= factor;
    }
    std::vector<double> signal;
    Eigen::FFT<double> fft;
    fft.inv(signal, varied);
    signal.resize(n);

    double sum = 0.0;
    for (double& v : signal) {
      v = std::max(v, 0.0);
      sum += v;
    }
    const double mean = sum / static_cast<double>(n);
    if (!(mean > 0))
      throw InputError("variation '" + keys[i] + "' is identically zero");
    const double scale = targets[i] / mean;
    for (double& v : signal)
      v *= scale;

    out[i].start_s = base.start_s;
    out[i].interval_s = base.interval_s;
    out[i].values_w = std::move(signal);
  });
  return out;
}

std::vector<LoadSeries> synthesize_variations(const LoadSeries& base, std::size_t n,
                                              const FrequencyBand& band, double sigma,
                                              std::uint64_t seed,
                                              std::span<const double> targets,
                                              int threads) {
  std::vector<std::string> keys(n);
  for (std::size_t i = 0; i < n; ++i)
    keys[i] = std::to_string(i);
  return synthesize_variations(base, keys, band, sigma, seed, targets, threads);
}

// ---------------------------------------------------------------------------
// Grid and scenario

std::vector<double> resample_to_grid(const TimeSeries& series, const TimeGrid& grid) {
  grid.validate();
  if (!series.covers(0.0, grid.horizon()))
    throw InputError("series does not cover the simulation span [0, "
                     + csv::format_double(grid.horizon()) + "] s");
  std::vector<double> out(grid.steps + 1);
  for (std::size_t j = 0; j <= grid.steps; ++j)
    out[j] = series(grid.time(j));
  return out;
}

Scenario build_scenario(ScenarioInputs inputs) {
  inputs.grid.validate();
  inputs.constraints.validate();
  inputs.price.validate(inputs.grid.horizon());

  Scenario sc;
  sc.model = std::make_shared<const ThermalModel>(
      std::move(inputs.graph), std::move(inputs.flow), inputs.constants, inputs.grid);
  const ThermalModel& model = *sc.model;
  const BoundarySpec& bc = model.boundary();
  const std::size_t steps = model.grid().steps;
  const auto cols = static_cast<Eigen::Index>(steps + 1);
  const auto consumers = static_cast<Eigen::Index>(bc.num_consumers());

  sc.demand_w.resize(consumers, cols);
  sc.forcing.consumer_delta_c.resize(consumers, cols);
  const double absolute_zero_margin = inputs.constraints.plant_max_c + 273.15;
  for (std::size_t c = 0; c < bc.num_consumers(); ++c) {
    const Edge& edge = model.graph().edge(bc.consumer_edges[c]);
    const LoadSeries* series = inputs.demands.find(edge.id);
    if (series == nullptr)
      throw ValidationError("consumer edge '" + edge.id + "' has no demand series");
    series->validate();
    const auto values = resample_to_grid(series->as_time_series(), model.grid());
    const double m = model.flow()[bc.consumer_edges[c]];
    for (std::size_t j = 0; j <= steps; ++j) {
      const auto row = static_cast<Eigen::Index>(c);
      const auto col = static_cast<Eigen::Index>(j);
      sc.demand_w(row, col) = values[j];
      const double delta = demand_to_delta(values[j], m, model.constants());
      if (delta > absolute_zero_margin)
        throw ValidationError("consumer '" + edge.id + "': demand at t="
                              + csv::format_double(model.grid().time(j))
                              + " s implies a return temperature below absolute zero");
      sc.forcing.consumer_delta_c(row, col) = delta;
    }
    sc.consumer_ids.push_back(edge.id);
  }

  if (inputs.ambient_series) {
    const auto values = resample_to_grid(*inputs.ambient_series, model.grid());
    sc.forcing.ambient_c = Eigen::Map<const Eigen::VectorXd>(values.data(), cols);
  } else {
    sc.forcing.ambient_c = Eigen::VectorXd::Constant(cols, inputs.ambient_c);
  }
  if (!sc.forcing.ambient_c.allFinite())
    throw ValidationError("ambient temperature must be finite");

  sc.price = std::move(inputs.price);
  sc.step_price = sc.price.sample_steps(model.grid());
  sc.constraints = inputs.constraints;
  if (inputs.initial_control
      && static_cast<std::size_t>(inputs.initial_control->size()) != bc.num_plants())
    throw ValidationError("initial control needs one value per plant");
  sc.initial_control = std::move(inputs.initial_control);
  return sc;
}

Scenario with_price(const Scenario& scenario, PriceModel price) {
  price.validate(scenario.grid().horizon());
  Scenario out = scenario;
  out.price = std::move(price);
  out.step_price = out.price.sample_steps(out.grid());
  return out;
}

// ---------------------------------------------------------------------------
// Files

namespace {
  std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
      throw InputError("cannot write file: " + path.string());
    return out;
  }

  double uniform_interval(const std::vector<double>& times, const std::string& source) {
    if (times.size() < 2)
      return 900.0;
    const double dt = times[1] - times[0];
    if (!(dt > 0))
      throw InputError(source + ": times must be strictly increasing");
    for (std::size_t i = 1; i < times.size(); ++i) {
      const double expect = times[0] + static_cast<double>(i) * dt;
      if (std::abs(times[i] - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
        throw InputError(source + ": samples must be uniformly spaced (t="
                         + csv::format_double(times[i]) + ")");
    }
    return dt;
  }
}  // namespace

LoadSeries read_load_series(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  table.require_header({"time_s", "power_w"});
  std::vector<double> times;
  LoadSeries series;
  for (const csv::Row& row : table.rows) {
    times.push_back(csv::to_double(row, 0, table.source));
    series.values_w.push_back(csv::to_double(row, 1, table.source));
  }
  if (times.empty())
    throw InputError(table.source + ": no samples");
  series.start_s = times.front();
  series.interval_s = uniform_interval(times, table.source);
  series.validate();
  return series;
}

void write_load_series(const LoadSeries& series, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "time_s,power_w\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    out << csv::format_double(series.time(i)) << ','
        << csv::format_double(series.values_w[i]) << '\n';
}

PriceSeries read_price_series(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  table.require_header({"time_s", "price_eur_mwh"});
  std::vector<double> t, v;
  for (const csv::Row& row : table.rows) {
    t.push_back(csv::to_double(row, 0, table.source));
    v.push_back(csv::to_double(row, 1, table.source));
  }
  try {
    return PriceSeries(std::move(t), std::move(v));
  } catch (const InputError& err) {
    throw InputError(table.source + ": " + err.what());
  }
}

void write_price_series(const PriceSeries& series, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "time_s,price_eur_mwh\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    out << csv::format_double(series.times()[i]) << ','
        << csv::format_double(series.values()[i]) << '\n';
}

DemandSet read_demand_set(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  table.require_header({"time_s", "consumer_edge_id", "power_w"});
  DemandSet set;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<double>> times;
  for (const csv::Row& row : table.rows) {
    const std::string& id = row.fields[1];
    if (id.empty())
      throw ParseError(table.source, row.line, "empty consumer id");
    auto [it, fresh] = index.emplace(id, set.consumer_ids.size());
    if (fresh) {
      set.consumer_ids.push_back(id);
      set.series.emplace_back();
      times.emplace_back();
    }
    times[it->second].push_back(csv::to_double(row, 0, table.source));
    set.series[it->second].values_w.push_back(csv::to_double(row, 2, table.source));
  }
  if (set.consumer_ids.empty())
    throw InputError(table.source + ": no demand rows");
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (times[i] != times[0])
      throw InputError(table.source + ": consumer '" + set.consumer_ids[i]
                       + "' is sampled at different times than '"
                       + set.consumer_ids[0] + "'");
    set.series[i].start_s = times[i].front();
    set.series[i].interval_s = uniform_interval(times[i], table.source);
    try {
      set.series[i].validate();
    } catch (const InputError& err) {
      throw InputError(table.source + ": consumer '" + set.consumer_ids[i]
                       + "': " + err.what());
    }
  }
  return set;
}

void write_demand_set(const DemandSet& demands, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "time_s,consumer_edge_id,power_w\n";
  if (demands.series.empty())
    return;
  const std::size_t n = demands.series.front().size();
  for (const LoadSeries& s : demands.series)
    if (s.size() != n)
      throw InputError("demand series differ in length");
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t c = 0; c < demands.size(); ++c)
      out << csv::format_double(demands.series[c].time(k)) << ','
          << demands.consumer_ids[c] << ','
          << csv::format_double(demands.series[c].values_w[k]) << '\n';
}

}  // namespace dhn
