//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include <iostream>

#include <CLI11.hpp>

#include "dhn/app.hpp"
#include "dhn/error.hpp"

namespace {

struct Options {
  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Options& o, bool needs_config) {
  auto* opt = cmd->add_option("--config", o.config, "JSON run configuration");
  if (needs_config)
    opt->required();
  cmd->add_option("--out-dir", o.out_dir, "output directory");
  cmd->add_option("--seed", o.seed, "master random seed");
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--quiet", o.quiet, "print errors only");
}

}  // namespace

int main(int argc, char** argv) {
  namespace app = dhn::app;
  CLI::App cli{"District heating network simulation and optimal control"};
  cli.require_subcommand(1);
  Options o;
  auto* simulate = cli.add_subcommand("simulate", "simulate a control trajectory");
  auto* optimize = cli.add_subcommand("optimize", "optimize plant supply temperatures");
  auto* synth = cli.add_subcommand("synth-demand", "synthesize consumer demand series");
  auto* verify = cli.add_subcommand("verify", "check the steady solution operator");
  auto* report = cli.add_subcommand("report", "reload an optimize report and recheck it");
  for (auto* cmd : {simulate, optimize, synth, verify})
    add_common(cmd, o, true);
  add_common(report, o, false);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = cli.exit(err);
    return code == 0 ? app::kExitOk : app::kExitInput;
  }

  try {
    if (report->parsed()) {
      std::filesystem::path dir = o.out_dir;
      if (dir.empty()) {
        if (o.config.empty())
          throw dhn::InputError("report needs --out-dir or --config");
        dir = app::load_config(o.config).out_dir;
      }
      return app::run_report(dir, std::cout);
    }

    app::RunConfig config = app::load_config(o.config);
    app::Overrides ov;
    if (!o.out_dir.empty())
      ov.out_dir = o.out_dir;
    if (synth->count("--seed") + simulate->count("--seed") + optimize->count("--seed")
            + verify->count("--seed")
        > 0)
      ov.seed = o.seed;
    if (o.threads > 0)
      ov.threads = o.threads;
    ov.quiet = o.quiet;
    app::apply(config, ov);

    if (simulate->parsed())
      return app::run_simulate(config, std::cout);
    if (optimize->parsed())
      return app::run_optimize(config, std::cout);
    if (synth->parsed())
      return app::run_synth_demand(config, std::cout);
    return app::run_verify(config, std::cout);
  } catch (const dhn::InputError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return app::kExitInput;
  } catch (const dhn::NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << '\n';
    return app::kExitNumerical;
  } catch (const std::exception& err) {
    std::cerr << "numerical failure: " << err.what() << '\n';
    return app::kExitNumerical;
  }
}
