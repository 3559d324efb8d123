// Command-line front end: carleman_lab <command> --scenario NAME|FILE
// [--set key=value]... --out DIR [--seed N]
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "carleman/error.hpp"
#include "carleman/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Carleman-estimate laboratory for first-order hyperbolic equations"};
  app.require_subcommand(1);

  std::string scenario_name;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  long long seed = -1;

  for (const auto& cmd : carleman::run_commands()) {
    auto* sub = app.add_subcommand(cmd, "run the " + cmd + " pipeline");
    sub->add_option("--scenario", scenario_name, "built-in scenario name or .cfg file")->required();
    sub->add_option("--set", overrides, "override a scenario key (key=value)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "base seed");
  }
  app.add_subcommand("list", "list built-in scenarios");

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();
  if (sub->get_name() == "list") {
    carleman::print_scenarios(std::cout);
    return 0;
  }
  try {
    carleman::Scenario sc = carleman::load_scenario(scenario_name);
    for (const auto& o : overrides) sc.apply_override(o);
    if (seed >= 0) sc.set("seed", std::to_string(seed));
    return carleman::run(sub->get_name(), sc, out_dir, std::cerr);
  } catch (const carleman::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return carleman::is_hypothesis_violation(e.kind()) ? 2 : 1;
  }
}
