#include <iostream>
#include <stdexcept>

#include <CLI11.hpp>

#include "chainmem/errors.hpp"
#include "commands.hpp"
#include "run_config.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "chainmem: exact repeated-use fidelities, dynamical maps and entanglement\n"
      "profiles of spin-chain quantum channels"};
  app.set_config("--config", "", "Key=value configuration file (flags override it)");

  chainmem::cli::RunConfig config;
  chainmem::cli::attach_options(app, config);

  const std::pair<const char*, const char*> commands[] = {
      {"amplitudes", "Boundary transition amplitudes over a time grid"},
      {"sweep-uses", "Average fidelity vs number of uses for a list of timing errors"},
      {"sweep-length", "Average fidelity vs chain length (closed-form amplitudes)"},
      {"map", "Second-use dynamical map report: parameters, Choi spectra, capacity bound"},
      {"concurrence", "First- and second-use entanglement distribution profiles"},
      {"validate", "Run the seeded validation suite"},
  };
  for (const auto& [name, description] : commands)
    app.add_subcommand(name, description)->fallthrough();
  app.require_subcommand(1);

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

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return chainmem::cli::run_command(command, config, std::cout, std::cerr);
  } catch (const chainmem::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const chainmem::BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return 4;
  } catch (const chainmem::GuardError& e) {
    std::cerr << "guard exceeded: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
