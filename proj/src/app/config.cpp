//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <fstream>
#include <set>

#include "dhn/app.hpp"
#include "dhn/error.hpp"
#include "dhn/parallel.hpp"

namespace dhn::app {

using nlohmann::json;

namespace {
  class Section {
   public:
    Section(const json& obj, std::string name, std::set<std::string> allowed)
        : obj_(obj), name_(std::move(name)) {
      if (!obj.is_object())
        throw InputError("config: '" + name_ + "' must be an object");
      for (const auto& [key, _] : obj.items())
        if (!allowed.contains(key))
          throw InputError("config: unknown key '" + key + "' in '" + name_ + "'");
    }

    bool has(const std::string& key) const { return obj_.contains(key); }

    double number(const std::string& key, double fallback) const {
      if (!has(key))
        return fallback;
      const json& v = obj_.at(key);
      if (!v.is_number())
        throw InputError("config: '" + path(key) + "' must be a number");
      return v.get<double>();
    }

    std::optional<double> optional_number(const std::string& key) const {
      if (!has(key))
        return std::nullopt;
      return number(key, 0.0);
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) const {
      if (!has(key))
        return fallback;
      const json& v = obj_.at(key);
      if (!v.is_number_integer())
        throw InputError("config: '" + path(key) + "' must be an integer");
      return v.get<std::int64_t>();
    }

    std::string string(const std::string& key) const {
      const json& v = obj_.at(key);
      if (!v.is_string())
        throw InputError("config: '" + path(key) + "' must be a string");
      return v.get<std::string>();
    }

    std::optional<fs::path> file(const std::string& key, const fs::path& base) const {
      if (!has(key))
        return std::nullopt;
      return resolve(string(key), base);
    }

    fs::path required_file(const std::string& key, const fs::path& base) const {
      if (!has(key))
        throw InputError("config: '" + path(key) + "' is required");
      return resolve(string(key), base);
    }

    const json& sub(const std::string& key) const { return obj_.at(key); }
    std::string path(const std::string& key) const {
      return name_.empty() ? key : name_ + "." + key;
    }

   private:
    static fs::path resolve(const std::string& text, const fs::path& base) {
      const fs::path p(text);
      return p.is_absolute() ? p : base / p;
    }

    const json& obj_;
    std::string name_;
  };
}  // namespace

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  c.document = doc;
  c.threads = default_thread_count();
  const Section top(doc, "",
                    {"network", "demand", "grid", "constants", "ambient_c", "ambient_file",
                     "price", "constraints", "control", "initial_control_c", "objective",
                     "optimizer", "synth", "verify", "quantiles", "out_dir", "seed",
                     "threads"});

  if (top.has("network")) {
    const Section s(top.sub("network"), "network",
                    {"nodes", "edges", "flow", "max_cell_length_m"});
    c.network = NetworkFiles{s.required_file("nodes", base_dir),
                             s.required_file("edges", base_dir),
                             s.required_file("flow", base_dir),
                             s.number("max_cell_length_m", 0.0)};
  }
  c.demand = top.file("demand", base_dir);

  if (top.has("grid")) {
    const Section s(top.sub("grid"), "grid", {"dt_s", "horizon_s"});
    c.grid.dt_s = s.number("dt_s", 900.0);
    const double horizon = s.number("horizon_s", 3.0 * 86400.0);
    if (!(c.grid.dt_s > 0) || !(horizon > 0))
      throw InputError("config: grid.dt_s and grid.horizon_s must be > 0");
    const double ratio = horizon / c.grid.dt_s;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1)
      throw InputError("config: grid.dt_s must divide grid.horizon_s");
    c.grid.steps = static_cast<std::size_t>(std::llround(ratio));
  }
  if (top.has("constants")) {
    const Section s(top.sub("constants"), "constants", {"cp_j_per_kg_c", "rho_kg_m3"});
    c.constants.cp_j_per_kg_c = s.number("cp_j_per_kg_c", c.constants.cp_j_per_kg_c);
    c.constants.rho_kg_m3 = s.number("rho_kg_m3", c.constants.rho_kg_m3);
    if (!(c.constants.cp_j_per_kg_c > 0) || !(c.constants.rho_kg_m3 > 0))
      throw InputError("config: physical constants must be > 0");
  }
  c.ambient_c = top.number("ambient_c", c.ambient_c);
  c.ambient_file = top.file("ambient_file", base_dir);

  if (top.has("price")) {
    const Section s(top.sub("price"), "price", {"file", "alpha", "beta"});
    c.price_file = s.file("file", base_dir);
    c.alpha = s.number("alpha", c.alpha);
    c.beta = s.number("beta", c.beta);
  }
  if (top.has("constraints")) {
    const Section s(top.sub("constraints"), "constraints",
                    {"consumer_supply_min_c", "consumer_return_min_c", "plant_max_c",
                     "plant_min_c"});
    auto& k = c.constraints;
    k.consumer_supply_min_c = s.number("consumer_supply_min_c", k.consumer_supply_min_c);
    k.consumer_return_min_c = s.number("consumer_return_min_c", k.consumer_return_min_c);
    k.plant_max_c = s.number("plant_max_c", k.plant_max_c);
    k.plant_min_c = s.number("plant_min_c", k.plant_min_c);
    k.validate();
  }
  if (top.has("control")) {
    const Section s(top.sub("control"), "control", {"constant_c", "file"});
    c.control_constant_c = s.optional_number("constant_c");
    c.control_file = s.file("file", base_dir);
    if (c.control_constant_c && c.control_file)
      throw InputError("config: give either control.constant_c or control.file");
  }
  if (top.has("initial_control_c")) {
    const json& v = doc.at("initial_control_c");
    std::vector<double> values;
    if (v.is_number()) {
      values.push_back(v.get<double>());
    } else if (v.is_array()) {
      for (const json& e : v) {
        if (!e.is_number())
          throw InputError("config: 'initial_control_c' entries must be numbers");
        values.push_back(e.get<double>());
      }
    } else {
      throw InputError("config: 'initial_control_c' must be a number or an array");
    }
    c.initial_control_c = std::move(values);
  }
  if (top.has("objective")) {
    const Section s(top.sub("objective"), "objective", {"tikhonov_weight", "energy_unit_j"});
    c.optimizer.tikhonov_weight = s.number("tikhonov_weight", c.optimizer.tikhonov_weight);
    c.optimizer.energy_unit_j = s.number("energy_unit_j", c.optimizer.energy_unit_j);
  }
  if (top.has("optimizer")) {
    const Section s(top.sub("optimizer"), "optimizer",
                    {"memory", "max_iterations", "gradient_tolerance", "initial_penalty",
                     "penalty_factor", "penalty_stop"});
    auto& o = c.optimizer;
    o.lbfgs.memory = static_cast<int>(s.integer("memory", o.lbfgs.memory));
    o.lbfgs.max_iterations = static_cast<int>(s.integer("max_iterations", o.lbfgs.max_iterations));
    o.lbfgs.gradient_tolerance = s.number("gradient_tolerance", o.lbfgs.gradient_tolerance);
    o.initial_penalty = s.number("initial_penalty", o.initial_penalty);
    o.penalty_factor = s.number("penalty_factor", o.penalty_factor);
    o.penalty_stop = s.number("penalty_stop", o.penalty_stop);
  }
  if (top.has("synth")) {
    const Section s(top.sub("synth"), "synth",
                    {"base_load", "consumer_means", "consumers", "order", "cutoff_hz",
                     "band_low_hz", "band_high_hz", "sigma", "output"});
    SynthSettings st;
    st.base_load = s.required_file("base_load", base_dir);
    st.consumer_means = s.file("consumer_means", base_dir);
    if (s.has("consumers")) {
      const auto n = s.integer("consumers", 0);
      if (n < 1)
        throw InputError("config: synth.consumers must be >= 1");
      st.consumers = static_cast<std::size_t>(n);
    }
    st.order = static_cast<int>(s.integer("order", st.order));
    st.cutoff_hz = s.number("cutoff_hz", st.cutoff_hz);
    st.band.low_hz = s.number("band_low_hz", st.band.low_hz);
    st.band.high_hz = s.number("band_high_hz", st.band.high_hz);
    st.sigma = s.number("sigma", st.sigma);
    if (s.has("output"))
      st.output = s.string("output");
    c.synth = std::move(st);
  }
  if (top.has("verify")) {
    const Section s(top.sub("verify"), "verify",
                    {"reference", "consumer_delta_c", "dense_threshold_c",
                     "reference_threshold_c", "histogram_bins"});
    auto& v = c.verify;
    v.reference = s.file("reference", base_dir);
    v.consumer_delta_c = s.optional_number("consumer_delta_c");
    v.dense_threshold_c = s.number("dense_threshold_c", v.dense_threshold_c);
    v.reference_threshold_c = s.optional_number("reference_threshold_c");
    v.histogram_bins = static_cast<int>(s.integer("histogram_bins", v.histogram_bins));
    if (v.histogram_bins < 1)
      throw InputError("config: verify.histogram_bins must be >= 1");
  }
  if (top.has("quantiles")) {
    const json& v = doc.at("quantiles");
    if (!v.is_array() || v.empty())
      throw InputError("config: 'quantiles' must be a non-empty array of percentages");
    c.quantile_levels.clear();
    for (const json& e : v) {
      if (!e.is_number() || e.get<double>() < 0 || e.get<double>() > 100)
        throw InputError("config: quantile levels must be numbers in [0, 100]");
      c.quantile_levels.push_back(e.get<double>());
    }
  }
  if (top.has("out_dir"))
    c.out_dir = *top.file("out_dir", base_dir);
  else
    c.out_dir = base_dir / "out";
  if (top.has("seed")) {
    const json& v = doc.at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw InputError("config: 'seed' must be a non-negative integer");
    c.seed = v.get<std::uint64_t>();
  }
  if (top.has("threads")) {
    c.threads = static_cast<int>(top.integer("threads", 1));
    if (c.threads < 1)
      throw InputError("config: 'threads' must be >= 1");
  }
  c.optimizer.threads = c.threads;
  c.optimizer.validate();
  return c;
}

RunConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in)
    throw InputError("cannot open config file: " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& err) {
    throw InputError("config " + file.string() + ": " + err.what());
  }
  return parse_config(doc, fs::absolute(file).parent_path());
}

void apply(RunConfig& config, const Overrides& o) {
  if (o.out_dir)
    config.out_dir = *o.out_dir;
  if (o.seed)
    config.seed = *o.seed;
  if (o.threads) {
    if (*o.threads < 1)
      throw InputError("--threads must be >= 1");
    config.threads = *o.threads;
    config.optimizer.threads = *o.threads;
  }
  config.quiet = config.quiet || o.quiet;
}

}  // namespace dhn::app
