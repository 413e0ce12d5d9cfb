#include <CLI11.hpp>

#include <Eigen/Core>
#include <iostream>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"sound field estimation from a moving microphone"};
  app.require_subcommand(1);

  soundfield::cli::CommandOptions options;
  int workers = 0;
  std::filesystem::path dir;

  CLI::App* simulate = app.add_subcommand("simulate", "synthesize a dataset from a config");
  CLI::App* estimate =
      app.add_subcommand("estimate", "fit the configured estimators on a dataset");
  CLI::App* sweep = app.add_subcommand("sweep", "run the configured parameter sweep");
  CLI::App* import_cmd = app.add_subcommand("import", "validate a dataset directory");
  CLI::App* report = app.add_subcommand("report", "print the tables in a results directory");

  for (CLI::App* cmd : {simulate, estimate, sweep}) {
    cmd->add_option("--config", options.config_path, "JSON configuration file")->required();
    cmd->add_option("--seed", options.seed, "override the config seed");
    cmd->add_option("--out", options.out, "override the output directory");
    cmd->add_option("--workers", workers, "thread count (0 keeps the default)");
  }
  for (CLI::App* cmd : {estimate, sweep}) {
    cmd->add_option("--solver", options.solver, "linear solver for the moving kernel method")
        ->check(CLI::IsMember({"direct", "iterative"}));
    cmd->add_option("--tol", options.tol, "iterative solver tolerance");
  }
  import_cmd->add_option("dir", dir, "dataset directory")->required();
  report->add_option("dir", dir, "results directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error);
    return code == 0 ? 0 : 2;
  }

  if (workers > 0) {
#ifdef _OPENMP
    omp_set_num_threads(workers);
#endif
    Eigen::setNbThreads(workers);
  }

  try {
    if (simulate->parsed()) return soundfield::cli::cmd_simulate(options);
    if (estimate->parsed()) return soundfield::cli::cmd_estimate(options);
    if (sweep->parsed()) return soundfield::cli::cmd_sweep(options);
    if (import_cmd->parsed()) return soundfield::cli::cmd_import(dir);
    return soundfield::cli::cmd_report(dir);
  } catch (const std::invalid_argument& error) {
    std::cerr << "error: " << error.what() << '\n';
    return 2;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << '\n';
    return 3;
  }
}
