//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include <Eigen/Dense>

#include "dhn/app.hpp"
#include "dhn/csv.hpp"
#include "dhn/error.hpp"

namespace dhn::app {

using nlohmann::json;

namespace {
  constexpr double kJoulePerMwh = 3.6e9;
  constexpr double kBalanceTolerance = 1e-6;
  constexpr double kSavingsTolerance = 1e-12;

  struct Column {
    std::string name;
    std::vector<double> values;
  };

  void write_json(const json& doc, const fs::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out)
      throw InputError("cannot write file: " + file.string());
    out << doc.dump(2) << '\n';
  }

  void write_series(const fs::path& file, const TimeGrid& grid,
                    const std::vector<Column>& columns) {
    std::ofstream out(file, std::ios::binary);
    if (!out)
      throw InputError("cannot write file: " + file.string());
    out << "time_s";
    for (const Column& c : columns)
      out << ',' << c.name;
    out << '\n';
    for (std::size_t k = 0; k < grid.steps; ++k) {
      out << csv::format_double(grid.time(k + 1));
      for (const Column& c : columns)
        out << ',' << csv::format_double(c.values[k]);
      out << '\n';
    }
  }

  void prepare_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
      throw InputError("cannot create output directory " + dir.string() + ": "
                       + ec.message());
  }

  json config_echo(const RunConfig& config) {
    json echo = config.document;
    echo["seed"] = config.seed;
    echo["threads"] = config.threads;
    echo.erase("out_dir");
    return echo;
  }

  std::string loss_unit(const Scenario& scenario) {
    return scenario.price.is_static ? "MWh" : "EUR";
  }

  std::vector<Index> consumer_supply_nodes(const Scenario& scenario) {
    return scenario.thermal().boundary().consumer_supply_nodes;
  }

  /// Everything reported about one simulated trajectory.
  struct Analysis {
    ObjectiveBreakdown terms;
    std::vector<double> loss;  // per step, report units
    double loss_total = 0;     // sum of `loss` in step order
    std::vector<double> min_supply, min_return;
    std::vector<double> stored_mwh, stored_rel_mwh;
    double stored_initial_mwh = 0;
    std::vector<EnergyBalanceStep> audit;
    std::vector<double> relative_residual;
    double max_relative_residual = 0;
    Eigen::MatrixXd quantiles;
  };

  Analysis analyze(const RunConfig& config, const Scenario& scenario,
                   const ObjectiveConfig& oc, const ControlTrajectory& u,
                   const StateTrajectory& y) {
    const ThermalModel& model = scenario.thermal();
    const BoundarySpec& bc = model.boundary();
    const std::size_t steps = model.grid().steps;
    Analysis a;
    a.terms = evaluate(scenario, oc, u, y, config.threads);
    for (double v : loss_energy_steps(model, y, scenario.price, scenario.step_price)) {
      a.loss.push_back(v / oc.energy_unit_j);
      a.loss_total += a.loss.back();
    }

    const auto& ambient = scenario.forcing.ambient_c;
    a.stored_initial_mwh =
        stored_energy(y.temp_c.col(0), model.volumes(), model.constants(), ambient[0])
        / kJoulePerMwh;
    const double initial_abs =
        stored_energy(y.temp_c.col(0), model.volumes(), model.constants(), 0.0);
    for (std::size_t k = 0; k < steps; ++k) {
      const auto col = static_cast<Eigen::Index>(k + 1);
      double ms = std::numeric_limits<double>::infinity(), mr = ms;
      for (std::size_t c = 0; c < bc.num_consumers(); ++c) {
        ms = std::min(ms, y.temp_c(static_cast<Eigen::Index>(bc.consumer_supply_nodes[c]), col));
        mr = std::min(mr, y.temp_c(static_cast<Eigen::Index>(bc.consumer_return_nodes[c]), col));
      }
      a.min_supply.push_back(ms);
      a.min_return.push_back(mr);
      a.stored_mwh.push_back(stored_energy(y.temp_c.col(col), model.volumes(),
                                           model.constants(), ambient[col])
                             / kJoulePerMwh);
      a.stored_rel_mwh.push_back(
          (stored_energy(y.temp_c.col(col), model.volumes(), model.constants(), 0.0)
           - initial_abs)
          / kJoulePerMwh);
    }

    a.audit = energy_audit(model, scenario.forcing, y);
    for (const EnergyBalanceStep& s : a.audit) {
      const double rel = std::abs(s.residual_w()) / std::max(std::abs(s.plant_injection_w), 1.0);
      a.relative_residual.push_back(rel);
      a.max_relative_residual = std::max(a.max_relative_residual, rel);
    }
    const auto nodes = consumer_supply_nodes(scenario);
    a.quantiles = compute_quantiles(y, nodes, config.quantile_levels);
    return a;
  }

  std::string level_name(double level) {
    return "q" + csv::format_double(level) + "_c";
  }

  void write_quantiles(const fs::path& file, const RunConfig& config,
                       const Scenario& scenario, const Eigen::MatrixXd& q) {
    std::vector<Column> cols;
    auto row = [&](Eigen::Index r) {
      return std::vector<double>(q.row(r).begin(), q.row(r).end());
    };
    cols.push_back({"min_c", row(0)});
    for (std::size_t l = 0; l < config.quantile_levels.size(); ++l)
      cols.push_back({level_name(config.quantile_levels[l]),
                      row(static_cast<Eigen::Index>(l + 1))});
    cols.push_back({"median_c", row(q.rows() - 1)});
    write_series(file, scenario.grid(), cols);
  }

  void write_audit(const fs::path& file, const Scenario& scenario, const Analysis& a) {
    std::vector<Column> cols(6);
    cols[0].name = "injection_w";
    cols[1].name = "extraction_w";
    cols[2].name = "ambient_loss_w";
    cols[3].name = "storage_rate_w";
    cols[4].name = "residual_w";
    cols[5].name = "relative_residual";
    for (std::size_t k = 0; k < a.audit.size(); ++k) {
      const EnergyBalanceStep& s = a.audit[k];
      cols[0].values.push_back(s.plant_injection_w);
      cols[1].values.push_back(s.consumer_extraction_w);
      cols[2].values.push_back(s.ambient_loss_w);
      cols[3].values.push_back(s.storage_rate_w);
      cols[4].values.push_back(s.residual_w());
      cols[5].values.push_back(a.relative_residual[k]);
    }
    write_series(file, scenario.grid(), cols);
  }

  std::vector<double> control_row(const ControlTrajectory& u, Eigen::Index p) {
    return std::vector<double>(u.supply_c.row(p).begin(), u.supply_c.row(p).end());
  }

  std::vector<double> injection(const Analysis& a) {
    std::vector<double> out;
    for (const EnergyBalanceStep& s : a.audit)
      out.push_back(s.plant_injection_w);
    return out;
  }

  json terms_json(const ObjectiveBreakdown& t) {
    return {{"loss", t.loss},
            {"tikhonov", t.tikhonov},
            {"penalty", t.penalty},
            {"total", t.total},
            {"max_violation_c", t.max_violation_c}};
  }

  json run_summary(const Analysis& a) {
    return {{"loss", a.loss_total},
            {"objective", terms_json(a.terms)},
            {"stored_energy_initial_mwh", a.stored_initial_mwh},
            {"stored_energy_final_mwh", a.stored_mwh.empty() ? 0.0 : a.stored_mwh.back()},
            {"min_consumer_supply_c",
             *std::min_element(a.min_supply.begin(), a.min_supply.end())},
            {"min_consumer_return_c",
             *std::min_element(a.min_return.begin(), a.min_return.end())},
            {"max_relative_balance_residual", a.max_relative_residual}};
  }

  void write_state(const fs::path& file, const NetworkGraph& graph,
                   const Eigen::VectorXd& y) {
    std::ofstream out(file, std::ios::binary);
    if (!out)
      throw InputError("cannot write file: " + file.string());
    out << "node_id,temp_c\n";
    for (Index i = 0; i < graph.num_nodes(); ++i)
      out << graph.node(i).id << ',' << csv::format_double(y[static_cast<Eigen::Index>(i)])
          << '\n';
  }
}  // namespace

// ---------------------------------------------------------------------------

int run_simulate(const RunConfig& config, std::ostream& log) {
  const Scenario scenario = load_scenario(config);
  const ControlTrajectory u = load_control(config, scenario);
  const StateTrajectory y =
      simulate(scenario.thermal(), scenario.forcing, u, scenario.initial_control);
  const ObjectiveConfig oc = config.optimizer.objective(config.optimizer.initial_penalty);
  const Analysis a = analyze(config, scenario, oc, u, y);

  prepare_out_dir(config.out_dir);
  std::vector<Column> controls;
  const NetworkGraph& graph = scenario.thermal().graph();
  const BoundarySpec& bc = scenario.thermal().boundary();
  for (std::size_t p = 0; p < bc.num_plants(); ++p)
    controls.push_back({graph.edge(bc.producer_edges[p]).id + "_c",
                        control_row(u, static_cast<Eigen::Index>(p))});
  write_series(config.out_dir / "controls.csv", scenario.grid(), controls);
  write_series(config.out_dir / "consumer_temperatures.csv", scenario.grid(),
               {{"min_supply_c", a.min_supply}, {"min_return_c", a.min_return}});
  write_series(config.out_dir / "stored_energy.csv", scenario.grid(),
               {{"vs_ambient_mwh", a.stored_mwh}, {"vs_initial_mwh", a.stored_rel_mwh}});
  write_series(config.out_dir / "loss.csv", scenario.grid(),
               {{"loss", a.loss}, {"injection_w", injection(a)}});
  write_audit(config.out_dir / "energy_balance.csv", scenario, a);
  write_quantiles(config.out_dir / "quantiles.csv", config, scenario, a.quantiles);
  write_state(config.out_dir / "steady_state.csv", graph, y.temp_c.col(0));

  json summary = run_summary(a);
  summary["command"] = "simulate";
  summary["config"] = config_echo(config);
  summary["loss_unit"] = loss_unit(scenario);
  summary["nodes"] = graph.num_nodes();
  summary["steps"] = scenario.grid().steps;
  write_json(summary, config.out_dir / "summary.json");

  if (!config.quiet)
    log << "simulate: " << graph.num_nodes() << " nodes, " << scenario.grid().steps
        << " steps, loss " << a.loss_total << ' ' << loss_unit(scenario)
        << ", max relative balance residual " << a.max_relative_residual << '\n';
  if (!(a.max_relative_residual < kBalanceTolerance)) {
    log << "error: energy balance residual " << a.max_relative_residual
        << " exceeds " << kBalanceTolerance << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

int run_optimize(const RunConfig& config, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  Scenario scenario = load_scenario(config);
  const ControlTrajectory baseline = load_control(config, scenario);
  if (!scenario.initial_control)
    scenario.initial_control = Eigen::VectorXd(baseline.supply_c.col(0));
  const ObjectiveConfig oc = config.optimizer.objective(config.optimizer.initial_penalty);

  const StateTrajectory y_base =
      simulate(scenario.thermal(), scenario.forcing, baseline, scenario.initial_control);
  const Analysis base = analyze(config, scenario, oc, baseline, y_base);

  const OptimizationReport opt = optimize(scenario, baseline, config.optimizer);
  const StateTrajectory y_opt =
      simulate(scenario.thermal(), scenario.forcing, opt.control, scenario.initial_control);
  const Analysis best = analyze(config, scenario, oc, opt.control, y_opt);
  const double savings = (base.loss_total - best.loss_total) / base.loss_total;

  prepare_out_dir(config.out_dir);
  const NetworkGraph& graph = scenario.thermal().graph();
  const BoundarySpec& bc = scenario.thermal().boundary();
  std::vector<Column> cols;
  cols.push_back({"price_eur_mwh", std::vector<double>(scenario.step_price)});
  for (std::size_t p = 0; p < bc.num_plants(); ++p) {
    const std::string id = graph.edge(bc.producer_edges[p]).id;
    cols.push_back({"baseline_" + id + "_c", control_row(baseline, static_cast<Eigen::Index>(p))});
    cols.push_back({"optimized_" + id + "_c", control_row(opt.control, static_cast<Eigen::Index>(p))});
  }
  cols.push_back({"baseline_min_supply_c", base.min_supply});
  cols.push_back({"optimized_min_supply_c", best.min_supply});
  cols.push_back({"baseline_min_return_c", base.min_return});
  cols.push_back({"optimized_min_return_c", best.min_return});
  cols.push_back({"baseline_stored_mwh", base.stored_mwh});
  cols.push_back({"optimized_stored_mwh", best.stored_mwh});
  cols.push_back({"baseline_stored_rel_mwh", base.stored_rel_mwh});
  cols.push_back({"optimized_stored_rel_mwh", best.stored_rel_mwh});
  cols.push_back({"baseline_injection_w", injection(base)});
  cols.push_back({"optimized_injection_w", injection(best)});
  cols.push_back({"baseline_loss", base.loss});
  cols.push_back({"optimized_loss", best.loss});
  write_series(config.out_dir / "series.csv", scenario.grid(), cols);
  write_quantiles(config.out_dir / "quantiles_baseline.csv", config, scenario, base.quantiles);
  write_quantiles(config.out_dir / "quantiles_optimized.csv", config, scenario, best.quantiles);
  write_audit(config.out_dir / "energy_balance_optimized.csv", scenario, best);
  write_control(scenario, opt.control, config.out_dir / "control_optimized.csv");

  json rounds = json::array();
  for (const OptimizationRound& r : opt.rounds)
    rounds.push_back({{"penalty_weight", r.penalty_weight},
                      {"iterations", r.iterations},
                      {"evaluations", r.evaluations},
                      {"status", std::string(to_string(r.status))},
                      {"objective", terms_json(r.terms)},
                      {"projected_gradient_norm", r.projected_gradient_norm}});
  json report;
  report["command"] = "optimize";
  report["config"] = config_echo(config);
  report["loss_unit"] = loss_unit(scenario);
  report["steps"] = scenario.grid().steps;
  report["nodes"] = graph.num_nodes();
  report["initial_control_c"] = std::vector<double>(scenario.initial_control->begin(),
                                                    scenario.initial_control->end());
  report["baseline_loss"] = base.loss_total;
  report["optimized_loss"] = best.loss_total;
  report["savings"] = savings;
  report["baseline"] = run_summary(base);
  report["optimized"] = run_summary(best);
  report["max_violation_c"] = best.terms.max_violation_c;
  report["rounds"] = rounds;
  report["aborted"] = opt.aborted;
  report["diagnostic"] = opt.diagnostic;
  report["series"] = "series.csv";
  write_json(report, config.out_dir / "report.json");

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json({{"optimize_wall_time_s", opt.wall_time_s}, {"total_wall_time_s", wall}},
             config.out_dir / "timing.json");

  if (!config.quiet) {
    for (const OptimizationRound& r : opt.rounds)
      log << "  lambda " << r.penalty_weight << ": " << r.iterations << " iterations ("
          << to_string(r.status) << "), objective " << r.terms.total << ", max violation "
          << r.terms.max_violation_c << " degC\n";
    log << "optimize: baseline " << base.loss_total << ' ' << loss_unit(scenario)
        << ", optimized " << best.loss_total << ' ' << loss_unit(scenario) << ", savings "
        << 100.0 * savings << " %, wall time " << opt.wall_time_s << " s\n";
  }
  if (opt.aborted) {
    log << "error: optimization aborted: " << opt.diagnostic << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

int run_synth_demand(const RunConfig& config, std::ostream& log) {
  const DemandSet demands = synthesize_demand(config);
  prepare_out_dir(config.out_dir);
  const fs::path file = config.out_dir / config.synth->output;
  write_demand_set(demands, file);

  std::ofstream out(config.out_dir / "demand_summary.csv", std::ios::binary);
  if (!out)
    throw InputError("cannot write demand summary in " + config.out_dir.string());
  out << "consumer_edge_id,mean_w,min_w,max_w\n";
  for (std::size_t i = 0; i < demands.size(); ++i) {
    const auto& v = demands.series[i].values_w;
    out << demands.consumer_ids[i] << ',' << csv::format_double(demands.series[i].mean())
        << ',' << csv::format_double(*std::min_element(v.begin(), v.end())) << ','
        << csv::format_double(*std::max_element(v.begin(), v.end())) << '\n';
  }
  if (!config.quiet)
    log << "synth-demand: " << demands.size() << " consumers, "
        << demands.series.front().size() << " samples -> " << file.string() << '\n';
  return kExitOk;
}

int run_verify(const RunConfig& config, std::ostream& log) {
  LoadedNetwork net = load_network(config);
  const NetworkGraph graph = net.graph;
  std::unique_ptr<ThermalModel> owned;
  const ThermalModel* model = nullptr;
  Forcing forcing;
  std::optional<Scenario> scenario;
  if (config.verify.consumer_delta_c || !config.demand) {
    if (!config.verify.consumer_delta_c)
      throw InputError("config: verify needs 'demand' or verify.consumer_delta_c");
    owned = std::make_unique<ThermalModel>(std::move(net.graph), std::move(net.flow),
                                           config.constants, TimeGrid{config.grid.dt_s, 1});
    model = owned.get();
    forcing.consumer_delta_c = Eigen::MatrixXd::Constant(
        static_cast<Eigen::Index>(model->boundary().num_consumers()), 2,
        *config.verify.consumer_delta_c);
    forcing.ambient_c = Eigen::VectorXd::Constant(2, config.ambient_c);
  } else {
    scenario = load_scenario(config);
    model = &scenario->thermal();
    forcing = scenario->forcing;
  }

  Eigen::VectorXd plants(static_cast<Eigen::Index>(model->boundary().num_plants()));
  if (config.initial_control_c) {
    const auto& v = *config.initial_control_c;
    if (v.size() == 1)
      plants.setConstant(v[0]);
    else if (v.size() == static_cast<std::size_t>(plants.size()))
      plants = Eigen::Map<const Eigen::VectorXd>(v.data(), plants.size());
    else
      throw InputError("config: initial_control_c needs one value or one per plant");
  } else if (config.control_file && scenario) {
    plants = load_control(config, *scenario).supply_c.col(0);
  } else {
    plants.setConstant(config.control_constant_c.value_or(110.0));
  }

  const BoundaryValues values = model->values_at(
      forcing, 0, std::span<const double>(plants.data(), static_cast<std::size_t>(plants.size())));
  const ThermalSystem& steady = model->steady();
  const Eigen::VectorXd y = solve_steady(steady, values);
  const Eigen::VectorXd rhs = steady.rhs(nullptr, values);
  const Eigen::MatrixXd dense(steady.matrix());
  const Eigen::VectorXd y_dense = dense.fullPivLu().solve(rhs);
  const double dense_diff = (y - y_dense).lpNorm<Eigen::Infinity>();

  prepare_out_dir(config.out_dir);
  write_state(config.out_dir / "steady_state.csv", model->graph(), y);
  json result{{"command", "verify"},
              {"config", config_echo(config)},
              {"nodes", model->graph().num_nodes()},
              {"dense_max_abs_diff_c", dense_diff},
              {"dense_threshold_c", config.verify.dense_threshold_c}};
  bool ok = dense_diff < config.verify.dense_threshold_c;

  if (config.verify.reference) {
    if (!fs::is_regular_file(*config.verify.reference))
      throw InputError("reference file not found: " + config.verify.reference->string());
    const csv::Table t = csv::read(*config.verify.reference);
    t.require_header({"node_id", "temp_c"});
    std::vector<double> mismatch;
    for (const csv::Row& row : t.rows) {
      const auto node = model->graph().find_node(row.fields[0]);
      if (!node)
        throw ParseError(t.source, row.line, "unknown node '" + row.fields[0] + "'");
      mismatch.push_back(std::abs(y[static_cast<Eigen::Index>(*node)]
                                  - csv::to_double(row, 1, t.source)));
    }
    if (mismatch.empty())
      throw InputError(t.source + ": no reference temperatures");
    double sum = 0.0;
    for (double m : mismatch)
      sum += m;
    const double mean = sum / static_cast<double>(mismatch.size());
    const double worst = *std::max_element(mismatch.begin(), mismatch.end());

    const int bins = config.verify.histogram_bins;
    const double width = worst > 0 ? worst / bins : 1.0;
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    for (double m : mismatch)
      ++counts[std::min<std::size_t>(static_cast<std::size_t>(m / width),
                                     static_cast<std::size_t>(bins - 1))];
    std::ofstream hist(config.out_dir / "mismatch_histogram.csv", std::ios::binary);
    hist << "bin_low_c,bin_high_c,count\n";
    for (int b = 0; b < bins; ++b)
      hist << csv::format_double(b * width) << ',' << csv::format_double((b + 1) * width)
           << ',' << counts[static_cast<std::size_t>(b)] << '\n';

    result["reference_nodes"] = mismatch.size();
    result["reference_mean_abs_mismatch_c"] = mean;
    result["reference_max_abs_mismatch_c"] = worst;
    if (config.verify.reference_threshold_c && !(mean < *config.verify.reference_threshold_c))
      ok = false;
    if (!config.quiet)
      log << "verify: reference mean abs mismatch " << mean << " degC (max " << worst
          << ") over " << mismatch.size() << " nodes\n";
  }
  result["passed"] = ok;
  write_json(result, config.out_dir / "verify.json");
  if (!config.quiet)
    log << "verify: steady solve vs dense solve, max abs difference " << dense_diff
        << " degC\n";
  if (!ok) {
    log << "error: verification mismatch beyond threshold\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int run_report(const fs::path& out_dir, std::ostream& log) {
  const fs::path report_file = out_dir / "report.json";
  std::ifstream in(report_file);
  if (!in)
    throw InputError("cannot open report: " + report_file.string());
  json report;
  try {
    report = json::parse(in);
  } catch (const json::parse_error& err) {
    throw InputError(report_file.string() + ": " + err.what());
  }
  for (const char* key : {"baseline_loss", "optimized_loss", "savings", "series", "steps"})
    if (!report.contains(key))
      throw InputError(report_file.string() + ": missing '" + std::string(key) + "'");

  const fs::path series_file = out_dir / report["series"].get<std::string>();
  const csv::Table t = csv::read(series_file);
  std::optional<std::size_t> col_base, col_opt;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i] == "baseline_loss")
      col_base = i;
    if (t.header[i] == "optimized_loss")
      col_opt = i;
  }
  if (!col_base || !col_opt)
    throw ParseError(t.source, 1, "missing baseline_loss / optimized_loss columns");
  if (t.rows.size() != report["steps"].get<std::size_t>())
    throw InputError(t.source + ": expected " + report["steps"].dump() + " rows");
  double base = 0.0, opt = 0.0;
  for (const csv::Row& row : t.rows) {
    base += csv::to_double(row, *col_base, t.source);
    opt += csv::to_double(row, *col_opt, t.source);
  }
  const double savings = (base - opt) / base;
  const double reported = report["savings"].get<double>();
  const std::string unit = report.value("loss_unit", std::string());
  log << "report: baseline " << base << ' ' << unit << ", optimized " << opt << ' ' << unit
      << ", savings " << 100.0 * savings << " % (reported " << 100.0 * reported << " %)\n";
  if (report.contains("max_violation_c"))
    log << "report: max constraint violation " << report["max_violation_c"].get<double>()
        << " degC\n";
  if (!(std::abs(savings - reported) <= kSavingsTolerance)) {
    log << "error: recomputed savings differ from the report\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace dhn::app
