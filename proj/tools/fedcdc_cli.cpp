//------------------------------------------------------------------------------
//
//   Copyright 2026 The fedcdc-market Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fedcdc/errors.hpp"
#include "fedcdc/maxclique.hpp"
#include "fedcdc/simulator.hpp"

namespace {

using namespace fedcdc;

int cmd_run(std::string const &config, std::optional<std::uint64_t> seed,
            std::optional<std::string> scenario, std::string const &out)
{
  auto cfg = sim::load_config(config);
  if (seed)
  {
    cfg.seed           = *seed;
    cfg.partition.seed = *seed;
  }
  if (scenario)
  {
    cfg.scenario = sim::parse_scenario(*scenario);
  }
  auto const trace = sim::run_scenario(cfg);
  sim::emit_metrics(trace, out);
  std::cout << sim::to_string(cfg.scenario) << " seed " << cfg.seed
            << " final mean accuracy " << trace.final_mean_accuracy() << '\n';
  std::cout << "alliances " << trace.alliances.size() << ", outputs in " << out << '\n';
  return 0;
}

int cmd_compare(std::string const &config, std::optional<std::uint64_t> seed)
{
  auto cfg = sim::load_config(config);
  if (seed)
  {
    cfg.seed           = *seed;
    cfg.partition.seed = *seed;
  }
  std::cout << sim::compare_scenarios(cfg).table();
  return 0;
}

int cmd_solve(std::string const &graph)
{
  auto const g = mwc::read_dimacs(graph);
  g.validate();
  auto const c = mwc::solve(g);
  std::cout << "weight " << c.weight << '\n' << "clique";
  for (auto v : c.nodes)
  {
    std::cout << ' ' << v + 1;
  }
  std::cout << '\n';
  return 0;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Federated learning market simulator with cross-consumer alliances"};
  app.require_subcommand(1);

  std::string                  config = "default";
  std::optional<std::uint64_t> seed;
  std::optional<std::string>   scenario;
  std::string                  out = "out";
  std::string                  graph;

  auto *run = app.add_subcommand("run", "run one scenario and write metrics");
  run->add_option("--config", config, "JSON config file, or 'default'");
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--scenario", scenario, "unrestricted | restricted | fedcdc");
  run->add_option("--out", out, "output directory");

  auto *compare = app.add_subcommand("compare", "run all three scenarios and print a table");
  compare->add_option("--config", config, "JSON config file, or 'default'");
  compare->add_option("--seed", seed, "override the config seed");

  auto *solve = app.add_subcommand("solve-mwc", "maximum weight clique of a DIMACS graph");
  solve->add_option("--graph", graph, "DIMACS graph file")->required();

  CLI11_PARSE(app, argc, argv);

  try
  {
    if (*run)
    {
      return cmd_run(config, seed, scenario, out);
    }
    if (*compare)
    {
      return cmd_compare(config, seed);
    }
    return cmd_solve(graph);
  }
  catch (fedcdc::ParseError const &e)
  {
    std::cerr << "parse error at byte " << e.offset() << ": " << e.what() << '\n';
  }
  catch (fedcdc::ConfigError const &e)
  {
    std::cerr << "config error: " << e.what() << '\n';
  }
  catch (std::exception const &e)
  {
    std::cerr << "error: " << e.what() << '\n';
  }
  return EXIT_FAILURE;
}
