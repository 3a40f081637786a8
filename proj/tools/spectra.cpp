// SPDX-License-Identifier: Apache-2.0
//
// spectra run|converge|bounds|pack <config> [options]

#include "finsler/experiment.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <exception>
#include <iostream>

namespace {

struct Options {
  std::string config;
  finsler::Overrides overrides;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Options& o) {
  CLI::App* cmd = app.add_subcommand(name, help);
  cmd->add_option("config", o.config, "experiment config (JSON)")->required();
  cmd->add_option_function<unsigned long long>("--seed", [&o](const unsigned long long& s) { o.overrides.seed = s; },
                                               "override solver.seed");
  cmd->add_option_function<std::string>("--out-dir", [&o](const std::string& d) { o.overrides.out_dir = d; },
                                        "override output.dir");
  cmd->add_option_function<double>("--slack", [&o](const double& s) { o.overrides.slack = s; },
                                   "override bounds.slack");
  return cmd;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finsler-Laplacian spectra, comparison bounds and packing diagnostics"};
  app.require_subcommand(1);
  Options o;
  CLI::App* run = add_command(app, "run", "solve the spectrum and run the configured checks", o);
  CLI::App* converge = add_command(app, "converge", "spectra on refined meshes and convergence orders", o);
  converge->add_option_function<int>("--levels", [&o](const int& l) { o.overrides.levels = l; },
                                     "number of refinement levels (>= 2)");
  CLI::App* bounds = add_command(app, "bounds", "solve the spectrum and check the comparison bounds", o);
  CLI::App* pack = add_command(app, "pack", "packing, covering and Dirichlet region diagnostics", o);
  pack->add_option_function<double>("--radius", [&o](const double& r) { o.overrides.radius = r; }, "packing radius");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : finsler::kExitError;
  }

  try {
    finsler::ExperimentConfig config = finsler::load_config(o.config);
    finsler::apply_overrides(config, o.overrides);
    finsler::RunOutcome outcome;
    if (run->parsed())
      outcome = finsler::run_experiment(config);
    else if (converge->parsed())
      outcome = finsler::run_convergence(config);
    else if (bounds->parsed())
      outcome = finsler::run_bounds(config);
    else
      outcome = finsler::run_packing(config);
    (void)pack;
    for (const auto& a : outcome.artifacts) std::cout << "wrote " << a << '\n';
    for (const auto& m : outcome.messages) std::cerr << "spectra: check failed: " << m << '\n';
    return outcome.status;
  } catch (const finsler::ConfigError& e) {
    std::cerr << "spectra: " << o.config << ": " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "spectra: error: " << e.what() << '\n';
  }
  return finsler::kExitError;
}
