#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "curvlab/cli.hpp"
#include "curvlab/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments on static metrics and curvature radii."};
  app.footer(curvlab::scenario_help());
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one scenario and write <out>/<scenario>.csv and .json");
  std::string scenario, config_path, out_dir = ".";
  std::vector<std::string> sets;
  std::optional<int> grid;
  std::optional<double> mass;
  unsigned seed = 0;
  bool strict = false;
  run->add_option("scenario", scenario, "Scenario name")->required()->check(CLI::IsMember(curvlab::scenario_names()));
  run->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--grid", grid, "Grid resolution override")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Seed for random samples");
  run->add_option("--mass", mass, "Shortcut for mass = value");
  run->add_option("--set", sets, "Extra key=value overrides");
  run->add_flag("--strict", strict, "Treat warnings as failures");
  run->footer(curvlab::scenario_help());

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    std::string text;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      std::stringstream ss;
      ss << in.rdbuf();
      text = ss.str();
    }
    curvlab::ScenarioConfig cfg = curvlab::parse_config(text, scenario);
    for (const auto& kv : sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw curvlab::Error(curvlab::Errc::ConfigInvalid, "--set expects key=value");
      cfg.params[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (mass) {
      std::ostringstream os;
      os.precision(17);
      os << *mass;
      cfg.params["mass"] = os.str();
    }
    cfg.out_dir = out_dir;
    cfg.grid = grid;
    cfg.seed = seed;
    cfg.strict = strict;
    return curvlab::run(cfg, std::cout);
  } catch (const curvlab::Error& e) {
    std::cerr << e.what() << '\n';
    return e.code() == curvlab::Errc::ConfigInvalid ? 2 : 1;
  }
}
