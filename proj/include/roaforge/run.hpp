#pragma once

#include <iosfwd>

#include "roaforge/config.hpp"

namespace roaforge {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNoStableSeed = 3,
  kExitNumeric = 4,
};

// synth | compare | mass-sweep | grid-sweep | simulate | roa
const std::vector<std::string>& subcommands();

// Runs one subcommand and writes result.json, its CSV files and run.log into
// cfg.output_dir once everything has been computed. Errors are reported on
// `err` and mapped onto the exit codes above.
int run_subcommand(const std::string& subcommand, const RunConfig& cfg, std::ostream& err);

// Estimate of the Lipschitz constant of the nonlinear sampled-data step on the
// grid box: max spectral norm of finite-difference Jacobians over a coarse
// sub-lattice, padded by 10%.
double estimate_step_lipschitz(const NonlinearSystem& sys, const Controller& ctrl, double tau,
                               const StateGrid& grid);

}  // namespace roaforge
