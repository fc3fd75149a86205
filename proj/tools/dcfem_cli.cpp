// Scenario-driven front end: `dcfem run` executes the requested solution
// methods for a built-in or JSON-configured scenario and writes the report
// files; `dcfem describe` prints the mesh/partition summary without solving.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 consistency-check failure under --check.

#include "dcfem/pipeline.hpp"
#include "dcfem/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct CommonArgs {
  std::string builtin;
  std::string config_path;
  std::string methods;
  std::string out_dir;
  double freq_hz = -1;
  int layers = -1;
  int jobs = 1;
  bool check = false;
  bool dump_mesh = false;
};

dcfem::ScenarioConfig load_config(const CommonArgs& args) {
  if (!args.builtin.empty() && !args.config_path.empty())
    throw dcfem::ScenarioError("give either --builtin or --config, not both");
  if (!args.builtin.empty()) return dcfem::builtin_scenario(args.builtin);
  if (!args.config_path.empty()) return dcfem::load_scenario_file(args.config_path);
  throw dcfem::ScenarioError("one of --builtin or --config is required");
}

dcfem::RunOptions make_options(const CommonArgs& args) {
  dcfem::RunOptions opt;
  if (!args.methods.empty()) {
    std::stringstream ss(args.methods);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) opt.methods_override.push_back(item);
  }
  if (args.freq_hz >= 0) opt.freq_override_hz = dcfem::Real(args.freq_hz);
  if (args.layers > 0) opt.layers_override = args.layers;
  opt.out_dir_override = args.out_dir;
  opt.check = args.check;
  opt.dump_mesh = args.dump_mesh;
  opt.jobs = args.jobs;
  return opt;
}

void add_common_flags(CLI::App* cmd, CommonArgs& args, bool run_flags) {
  cmd->add_option("--builtin", args.builtin, "built-in scenario (parallel_plate, two_bus)");
  cmd->add_option("--config", args.config_path, "scenario config file (JSON)");
  cmd->add_option("--methods", args.methods,
                  "comma-separated subset of direct,modal,dc-projected,dc-layered,schur2,"
                  "eigtable or 'all'");
  cmd->add_option("--freq", args.freq_hz, "source frequency override (Hz)");
  cmd->add_option("--layers", args.layers, "z-layer count override");
  if (run_flags) {
    cmd->add_option("--out", args.out_dir, "output directory (overrides DCFEM_OUT and config)");
    cmd->add_flag("--check", args.check, "evaluate consistency checks; exit 4 on failure");
    cmd->add_option("--jobs", args.jobs, "worker-thread cap for per-layer eigensolves");
    cmd->add_flag("--dump-mesh", args.dump_mesh, "write the node/edge listing");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frequency-domain edge-element solver with layered DC-mode extraction"};
  app.require_subcommand(1);

  CommonArgs run_args, describe_args;
  CLI::App* run = app.add_subcommand("run", "run solution methods and write reports");
  add_common_flags(run, run_args, true);
  CLI::App* describe = app.add_subcommand("describe", "print mesh/partition summary, no solve");
  add_common_flags(describe, describe_args, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (describe->parsed()) {
      const auto cfg = load_config(describe_args);
      std::cout << dcfem::describe_scenario(cfg, make_options(describe_args));
      return 0;
    }
    const auto cfg = load_config(run_args);
    const auto opt = make_options(run_args);
    dcfem::RunResult result;
    try {
      result = dcfem::run_scenario(cfg, opt);
    } catch (const dcfem::ScenarioError&) {
      throw;
    } catch (const std::exception& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return 3;
    }
    std::cout << "run directory: " << result.run_dir.string() << "\n";
    for (const auto& rep : result.reports) {
      std::cout << "  " << rep.method;
      for (const auto& [ref, err] : rep.rel_errors)
        std::printf("  vs %s: %.6e", ref.c_str(), static_cast<double>(err));
      if (rep.residual >= 0)
        std::printf("  residual: %.6e", static_cast<double>(rep.residual));
      std::cout << "\n";
    }
    if (opt.check) {
      bool all_pass = true;
      for (const auto& c : result.checks) {
        std::printf("%s  %s (value %.6e, bound %.6e)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    c.value, c.bound);
        all_pass = all_pass && c.pass;
      }
      if (!all_pass) return 4;
    }
    return 0;
  } catch (const dcfem::ScenarioError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
