#pragma once

#include "lorenz/config.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace lorenz {

/// simulate, density, stability-sweep, returns, depth, binding, bc-check, nice-set, inducing-tail,
/// expansion, selftest.
const std::vector<std::string>& subcommand_names();

/// Runs one subcommand with a validated config, writing CSV artifacts, summary.json and
/// run_info.json into out_dir. Returns the process exit status (selftest: nonzero on failure).
/// Throws ConfigInvalid for an unknown subcommand or an invalid config.
int run_subcommand(const std::string& name, const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                   std::ostream& log);

} // namespace lorenz
