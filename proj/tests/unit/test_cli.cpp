//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>
#include <sstream>

#include <json.hpp>

#include "dhn/csv.hpp"
#include "dhn/error.hpp"
#include "test_support.hpp"

using namespace dhn;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Runs the command-line tool and returns its exit code; stderr goes to `log`.
int dhnopt(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string("\"") + DHNOPT_EXE + "\" " + args + " > /dev/null 2> \"" + log.string() + "\"";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

json desk_static(const fs::path& out) {
  const fs::path d = test::data_dir() / "desk";
  return {{"network",
           {{"nodes", (d / "nodes.csv").string()},
            {"edges", (d / "edges.csv").string()},
            {"flow", (d / "flow.csv").string()}}},
          {"demand", (d / "demand.csv").string()},
          {"grid", {{"dt_s", 900}, {"horizon_s", 259200}}},
          {"control", {{"constant_c", 110.0}}},
          {"threads", 1},
          {"out_dir", out.string()}};
}

fs::path write_config(const json& doc, const fs::path& dir, const std::string& name) {
  std::ofstream(dir / name) << doc.dump(2);
  return dir / name;
}

std::size_t data_rows(const fs::path& file) { return csv::read(file).rows.size(); }

}  // namespace

TEST_CASE("configuration parsing") {
  const fs::path base = "/tmp/base";
  SUBCASE("relative paths resolve against the config directory") {
    const app::RunConfig c = app::parse_config(
        json{{"demand", "d.csv"}, {"network", {{"nodes", "n.csv"}, {"edges", "/abs/e.csv"},
                                               {"flow", "f.csv"}}}},
        base);
    CHECK(*c.demand == base / "d.csv");
    CHECK(c.network->edges == fs::path("/abs/e.csv"));
    CHECK(c.out_dir == base / "out");
  }
  SUBCASE("grid") {
    const app::RunConfig c =
        app::parse_config(json{{"grid", {{"dt_s", 900}, {"horizon_s", 259200}}}}, base);
    CHECK(c.grid.steps == 288);
    CHECK_THROWS_WITH_AS(
        app::parse_config(json{{"grid", {{"dt_s", 700}, {"horizon_s", 259200}}}}, base),
        doctest::Contains("divide"), InputError);
  }
  SUBCASE("unknown keys are rejected with their path") {
    CHECK_THROWS_WITH_AS(app::parse_config(json{{"gird", 1}}, base),
                         doctest::Contains("gird"), InputError);
    CHECK_THROWS_WITH_AS(app::parse_config(json{{"optimizer", {{"memroy", 5}}}}, base),
                         doctest::Contains("memroy"), InputError);
  }
  SUBCASE("typed values") {
    CHECK_THROWS_AS(app::parse_config(json{{"seed", -3}}, base), InputError);
    CHECK_THROWS_AS(app::parse_config(json{{"threads", 0}}, base), InputError);
    CHECK_THROWS_AS(app::parse_config(json{{"ambient_c", "warm"}}, base), InputError);
    CHECK_THROWS_AS(app::parse_config(json{{"control", {{"constant_c", 100},
                                                        {"file", "u.csv"}}}}, base),
                    InputError);
    const app::RunConfig c = app::parse_config(
        json{{"initial_control_c", {80, 90}}, {"price", {{"alpha", 1.5}, {"beta", 0}}},
             {"objective", {{"tikhonov_weight", 0}}}, {"seed", 42}},
        base);
    CHECK(*c.initial_control_c == std::vector<double>{80, 90});
    CHECK(c.alpha == 1.5);
    CHECK(c.optimizer.tikhonov_weight == 0.0);
    CHECK(c.seed == 42);
  }
  SUBCASE("command-line overrides win") {
    app::RunConfig c = app::parse_config(json{{"seed", 1}, {"threads", 2}}, base);
    app::apply(c, {.out_dir = fs::path("/x"), .seed = 9, .threads = 3, .quiet = true});
    CHECK(c.out_dir == fs::path("/x"));
    CHECK(c.seed == 9);
    CHECK(c.optimizer.threads == 3);
    CHECK(c.quiet);
  }
}

TEST_CASE("quantiles") {
  CHECK(app::quantile({4, 1, 3, 2}, 0.25) == doctest::Approx(1.75));
  CHECK(app::quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
  CHECK(app::quantile({7}, 0.9) == 7.0);

  test::Rng rng(10);
  StateTrajectory y{Eigen::MatrixXd(12, 6)};
  for (Eigen::Index i = 0; i < y.temp_c.size(); ++i)
    y.temp_c.data()[i] = rng.uniform(60, 110);
  y.temp_c.col(3).setConstant(85.0);
  const std::vector<Index> nodes{0, 2, 3, 5, 7, 8, 11};
  const std::vector<double> levels{1, 10, 50, 90, 99};
  const Eigen::MatrixXd q = app::compute_quantiles(y, nodes, levels);
  REQUIRE(q.rows() == 7);
  REQUIRE(q.cols() == 5);
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    for (Eigen::Index r = 1; r < 6; ++r)
      CHECK(q(r, k) >= q(r - 1, k));
    CHECK(q(6, k) == q(3, k));
  }
  CHECK((q.col(2).array() == 85.0).all());
  CHECK_THROWS_AS(app::compute_quantiles(y, {}, levels), InputError);
}

TEST_CASE("simulate and verify through the command line") {
  const fs::path dir = test::scratch_dir("cli_simulate");
  const fs::path cfg = write_config(desk_static(dir / "sim"), dir, "sim.json");
  REQUIRE(dhnopt("simulate --config \"" + cfg.string() + "\"", dir / "log") == 0);

  for (const char* f : {"controls.csv", "consumer_temperatures.csv", "stored_energy.csv",
                        "loss.csv", "energy_balance.csv", "quantiles.csv"})
    CHECK(data_rows(dir / "sim" / f) == 288);
  const csv::Table audit = csv::read(dir / "sim" / "energy_balance.csv");
  const auto col = static_cast<std::size_t>(
      std::find(audit.header.begin(), audit.header.end(), "relative_residual")
      - audit.header.begin());
  for (const csv::Row& row : audit.rows)
    CHECK(csv::to_double(row, col, audit.source) < 1e-6);

  json v = desk_static(dir / "verify");
  v["verify"] = {{"reference", (dir / "sim" / "steady_state.csv").string()}};
  const fs::path vcfg = write_config(v, dir, "verify.json");
  REQUIRE(dhnopt("verify --config \"" + vcfg.string() + "\"", dir / "log") == 0);
  std::ifstream in(dir / "verify" / "verify.json");
  const json result = json::parse(in);
  CHECK(result["dense_max_abs_diff_c"].get<double>() < 1e-8);
  CHECK(result["reference_mean_abs_mismatch_c"].get<double>() == 0.0);
  CHECK(result["passed"].get<bool>());
  CHECK(fs::is_regular_file(dir / "verify" / "mismatch_histogram.csv"));
}

TEST_CASE("input errors exit with code 2 and name the path") {
  const fs::path dir = test::scratch_dir("cli_errors");
  json doc = desk_static(dir / "out");
  doc["network"]["flow"] = (dir / "missing_flow.csv").string();
  const fs::path cfg = write_config(doc, dir, "bad.json");
  CHECK(dhnopt("simulate --config \"" + cfg.string() + "\"", dir / "log") == 2);
  CHECK(test::slurp(dir / "log").find("missing_flow.csv") != std::string::npos);

  CHECK(dhnopt("simulate --config \"" + (dir / "nope.json").string() + "\"", dir / "log")
        == 2);
  CHECK(dhnopt("frobnicate", dir / "log") == 2);
  CHECK(dhnopt("report --out-dir \"" + (dir / "empty").string() + "\"", dir / "log") == 2);
}

TEST_CASE("loss-free network without demand draws no power") {
  const fs::path dir = test::scratch_dir("cli_idle");
  const SyntheticNetwork net = synthetic_tree({.consumers = 4, .plants = 1, .seed = 3,
                                               .htc_base_w_per_m_c = 0.0,
                                               .htc_per_diameter_w_per_m2_c = 0.0});
  write_network(net.graph, dir / "nodes.csv", dir / "edges.csv");
  write_flow_field(net.graph, net.flow, dir / "flow.csv");
  DemandSet d;
  d.consumer_ids = net.consumer_ids;
  for (std::size_t i = 0; i < d.consumer_ids.size(); ++i)
    d.series.push_back(LoadSeries{0.0, 900.0, std::vector<double>(97, 0.0)});
  write_demand_set(d, dir / "demand.csv");
  const json doc{{"network", {{"nodes", "nodes.csv"}, {"edges", "edges.csv"},
                              {"flow", "flow.csv"}}},
                 {"demand", "demand.csv"},
                 {"grid", {{"dt_s", 900}, {"horizon_s", 86400}}},
                 {"control", {{"constant_c", 95.0}}},
                 {"out_dir", "out"}};
  const fs::path cfg = write_config(doc, dir, "idle.json");
  REQUIRE(dhnopt("simulate --config \"" + cfg.string() + "\" --quiet", dir / "log") == 0);
  const csv::Table audit = csv::read(dir / "out" / "energy_balance.csv");
  for (const csv::Row& row : audit.rows)
    CHECK(std::abs(csv::to_double(row, 1, audit.source)) < 1e-6);
}

TEST_CASE("synth-demand is deterministic and hits its targets") {
  const fs::path dir = test::scratch_dir("cli_synth");
  const json doc{{"synth", {{"base_load", (test::data_dir() / "desk" / "base_load.csv").string()},
                            {"consumers", 150}}},
                 {"seed", 77}};
  for (const char* run : {"a", "b"}) {
    json d = doc;
    d["out_dir"] = (dir / run).string();
    const fs::path cfg = write_config(d, dir, std::string(run) + ".json");
    REQUIRE(dhnopt("synth-demand --config \"" + cfg.string() + "\" --threads 4", dir / "log")
            == 0);
  }
  const std::string a = test::slurp(dir / "a" / "demand.csv");
  CHECK(!a.empty());
  CHECK(a == test::slurp(dir / "b" / "demand.csv"));

  const LoadSeries base = read_load_series(test::data_dir() / "desk" / "base_load.csv");
  const DemandSet set = read_demand_set(dir / "a" / "demand.csv");
  REQUIRE(set.size() == 150);
  for (const LoadSeries& s : set.series)
    CHECK(s.mean() == doctest::Approx(base.mean() / 150.0).epsilon(1e-9));

  json flat = doc;
  flat["synth"]["sigma"] = 0.0;
  flat["synth"]["consumers"] = 3;
  flat["out_dir"] = (dir / "flat").string();
  const fs::path cfg = write_config(flat, dir, "flat.json");
  REQUIRE(dhnopt("synth-demand --config \"" + cfg.string() + "\"", dir / "log") == 0);
  const DemandSet same = read_demand_set(dir / "flat" / "demand.csv");
  for (std::size_t k = 0; k < same.series[0].size(); ++k) {
    CHECK(same.series[1].values_w[k] == doctest::Approx(same.series[0].values_w[k]).epsilon(1e-12));
    CHECK(same.series[2].values_w[k] == doctest::Approx(same.series[0].values_w[k]).epsilon(1e-12));
  }
}

TEST_CASE("optimize, report recheck and the fixed point of an optimal control") {
  const fs::path dir = test::scratch_dir("cli_optimize");
  json doc = desk_static(dir / "first");
  doc["grid"]["horizon_s"] = 86400;
  doc["demand"] = (test::data_dir() / "desk" / "demand.csv").string();
  doc["initial_control_c"] = 110.0;
  const fs::path cfg = write_config(doc, dir, "first.json");
  REQUIRE(dhnopt("optimize --config \"" + cfg.string() + "\"", dir / "log") == 0);
  CHECK(dhnopt("report --out-dir \"" + (dir / "first").string() + "\"", dir / "log") == 0);
  CHECK(data_rows(dir / "first" / "series.csv") == 96);

  std::ifstream in(dir / "first" / "report.json");
  const json first = json::parse(in);
  CHECK(first["savings"].get<double>() > 0.0);
  CHECK_FALSE(first["aborted"].get<bool>());
  CHECK_FALSE(first.contains("wall_time_s"));
  CHECK(fs::is_regular_file(dir / "first" / "timing.json"));

  doc["control"] = {{"file", (dir / "first" / "control_optimized.csv").string()}};
  doc["out_dir"] = (dir / "second").string();
  const fs::path cfg2 = write_config(doc, dir, "second.json");
  REQUIRE(dhnopt("optimize --config \"" + cfg2.string() + "\"", dir / "log") == 0);
  std::ifstream in2(dir / "second" / "report.json");
  const json second = json::parse(in2);
  CHECK(std::abs(second["savings"].get<double>()) < 5e-3);
}
