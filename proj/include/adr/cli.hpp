#pragma once

#include <string>
#include <vector>

#include "adr/config.hpp"

namespace adr::cli {

// Command entry points; each returns a process exit status. Outputs land in
// cfg.out and every generated file embeds the resolved config.
int cmd_train(const ExperimentConfig& cfg);
int cmd_sweep(const ExperimentConfig& cfg, const std::vector<double>& gamma_grid,
              const std::vector<int>& tau_grid);
int cmd_noise(const ExperimentConfig& cfg, const std::vector<double>& rates);
int cmd_gradcheck(int samples, std::uint64_t seed, const std::string& out_dir);
int cmd_curves(int c, int tau, int grid, const std::string& out_dir);

/// Full argv-style dispatcher used by main() and the tests.
int run(const std::vector<std::string>& args);

}  // namespace adr::cli
