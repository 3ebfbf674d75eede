#pragma once

#include "lorenz/config.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace lorenz {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
    double budget = 0.0;  ///< runtime limit in seconds, 0 for none
};

struct AcceptanceOptions {
    std::vector<int> only;                  ///< empty: all criteria
    std::filesystem::path scratch = "acceptance-scratch";  ///< replay outputs for the determinism check
    std::function<void(const CriterionResult&)> on_result;
};

inline constexpr int kCriteriaCount = 16;

/// Evaluates the acceptance criteria on cfg. A criterion that throws is reported as failed.
std::vector<CriterionResult> run_acceptance(const ExperimentConfig& cfg, const AcceptanceOptions& opts = {});

/// "[PASS]  3 name (1.23 s): detail"
std::string format_result(const CriterionResult& r);

/// Small ensembles and horizons for quick replays of every subcommand.
ExperimentConfig replay_config(const ExperimentConfig& cfg);

} // namespace lorenz
