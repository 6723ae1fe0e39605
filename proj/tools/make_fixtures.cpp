//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//
// Regenerates the shipped data sets: synthetic networks with design flows,
// a three-day base load, a two-level price curve, the synthesized consumer
// demand and run configurations.
//

#include <fstream>
#include <iostream>
#include <sstream>

#include "dhn/app.hpp"
#include "dhn/csv.hpp"
#include "dhn/synthetic.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kDays = 3.0;
constexpr double kInterval = 900.0;

void write_json(const json& doc, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  out << doc.dump(2) << '\n';
}

void write_means(const dhn::SyntheticNetwork& net, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  out << "consumer_edge_id,mean_power_w\n";
  for (std::size_t i = 0; i < net.consumer_ids.size(); ++i)
    out << net.consumer_ids[i] << ',' << dhn::csv::format_double(net.consumer_mean_w[i])
        << '\n';
}

void write_two_level_price(const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  out << "time_s,price_eur_mwh\n";
  for (int h = 0; h <= static_cast<int>(kDays * 24); ++h) {
    const int hour = h % 24;
    const double price = (hour < 6 || hour >= 22) ? 40.0 : 90.0;
    out << h * 3600 << ',' << dhn::csv::format_double(price) << '\n';
  }
}

json network_section() {
  return {{"nodes", "nodes.csv"}, {"edges", "edges.csv"}, {"flow", "flow.csv"}};
}

json grid_section() {
  return {{"dt_s", kInterval}, {"horizon_s", kDays * 86400.0}};
}

void make_set(const fs::path& dir, const dhn::TreeOptions& options, std::uint64_t seed,
              bool with_dynamic) {
  fs::create_directories(dir);
  const dhn::SyntheticNetwork net = dhn::synthetic_tree(options);
  dhn::write_network(net.graph, dir / "nodes.csv", dir / "edges.csv");
  dhn::write_flow_field(net.graph, net.flow, dir / "flow.csv");
  write_means(net, dir / "consumer_means.csv");

  double total = 0.0;
  for (double m : net.consumer_mean_w)
    total += m;
  dhn::write_load_series(dhn::synthetic_base_load(kDays, kInterval, total, seed + 100),
                         dir / "base_load.csv");

  const json synth{{"network", network_section()},
                   {"synth",
                    {{"base_load", "base_load.csv"},
                     {"consumer_means", "consumer_means.csv"},
                     {"output", "demand.csv"}}},
                   {"seed", seed},
                   {"out_dir", "."}};
  write_json(synth, dir / "synth.json");
  dhn::app::RunConfig config = dhn::app::load_config(dir / "synth.json");
  config.threads = 1;
  config.quiet = true;
  std::ostringstream sink;
  dhn::app::run_synth_demand(config, sink);

  json stat{{"network", network_section()},
            {"demand", "demand.csv"},
            {"grid", grid_section()},
            {"ambient_c", 10.0},
            {"control", {{"constant_c", 110.0}}},
            {"seed", seed},
            {"out_dir", "out/static"}};
  write_json(stat, dir / "static.json");

  if (with_dynamic) {
    write_two_level_price(dir / "price_two_level.csv");
    json dyn = stat;
    dyn["price"] = {{"file", "price_two_level.csv"}, {"alpha", 1.0}, {"beta", 0.0}};
    dyn["initial_control_c"] = 85.0;
    dyn["out_dir"] = "out/dynamic";
    write_json(dyn, dir / "dynamic.json");
  }
  std::cout << dir.string() << ": " << net.graph.num_nodes() << " nodes, "
            << net.graph.num_edges() << " edges, " << net.consumer_ids.size()
            << " consumers\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <data-dir>\n";
    return 2;
  }
  const fs::path root = argv[1];

  dhn::TreeOptions desk;
  desk.consumers = 10;
  desk.plants = 1;
  desk.seed = 7;
  make_set(root / "desk", desk, 1, true);

  dhn::TreeOptions mid;
  mid.consumers = 24;
  mid.plants = 2;
  mid.seed = 11;
  make_set(root / "net100", mid, 2, false);

  dhn::TreeOptions large;
  large.consumers = 325;
  large.plants = 2;
  large.seed = 13;
  make_set(root / "scale", large, 3, false);
  return 0;
}
