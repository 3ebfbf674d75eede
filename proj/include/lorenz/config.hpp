#pragma once

#include "lorenz/lorenz_map.hpp"
#include "lorenz/noise.hpp"
#include "lorenz/recurrence.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lorenz {

struct MapConfig {
    double c = 0.5;
    double ell = 2.0;
    double u = 0.9;
    double v = 0.9;
    double taper_margin = 0.05;
};

struct NoiseConfig {
    std::string kind = "uniform";
    double eps = 0.01;
    std::vector<double> ladder{0.02, 0.01, 0.005, 0.0025};
    double L = 2.0;
    std::uint64_t seed = 1;
};

struct EnsembleConfig {
    std::size_t simulate = 4;
    std::size_t birkhoff_steps = 10000000;
    std::size_t birkhoff_burn_in = 1000;
    std::size_t returns = 1000;
    std::size_t depth = 200;
    std::size_t bc_samples = 4000;
    std::size_t nice_sets = 20;
    std::size_t tail = 100000;
    std::size_t tail_per_omega = 100;
    std::size_t mane = 2000;
    std::size_t growth = 2000;
    std::size_t koebe = 100;
    std::size_t distortion = 2000;
};

struct HorizonConfig {
    std::size_t simulate = 1000;
    std::size_t returns = 1000;
    std::size_t depth = 1000;
    std::size_t binding = 5000;
    std::size_t bc = 30;
    std::size_t nice_depth = 1200;
    std::size_t nice_verify = 1000;
    std::size_t tail_nice_depth = 80;
    std::size_t markov = 400;
    std::size_t mane = 200;
    std::size_t growth = 500;
    std::size_t distortion = 2000;
    std::size_t koebe_s = 15;
};

struct ScaleConfig {
    double theta = 0.001;
    double theta0 = 0.01;
    double tau = 1.0;
    double delta = 0.01;
    double delta0 = 0.002;
    double delta_star = kDefaultDeltaStar;
    double kappa = 1.0;
    double bad_m = 10.0;
    double depth_eps = 0.005;
    BindingConstants binding{};
    std::vector<double> binding_ladder{0.01, 0.005, 0.0025, 0.00125, 0.000625, 0.0003125};
    double bc_r = 2.0;
    std::vector<double> bc_ladder{0.01, 0.005, 0.0025};
    double nice_delta = 0.002;
    double nice_eps = 0.001;
    double koebe_tau = 1.0;
    double mane_delta = 0.009;
    double mane_C_ref = 0.1;
};

struct ExperimentConfig {
    MapConfig map;
    NoiseConfig noise;
    std::size_t partition_bins = 512;
    std::size_t quadrature_nodes = 32;
    EnsembleConfig ensembles;
    HorizonConfig horizons;
    ScaleConfig scales;
    std::size_t threads = 0;
    std::string out = "out";

    MapParams params() const;
    PerturbedFamily family() const;
    NoiseModel noise_model() const;
    NoiseModel noise_model(double eps) const;

    /// Collects every constraint violation and throws ConfigInvalid listing them by field.
    void validate() const;
};

/// theta cap min(theta0 / (4 k), 1 / (k^2 e^3)) with k = 2^(1/l).
double theta_cap(double ell, double theta0);

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
/// Missing fields keep their defaults; unknown fields are rejected. Throws ConfigInvalid.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Sets one field addressed by a dotted path ("noise.eps") from a JSON-literal string.
void apply_override(ExperimentConfig& cfg, const std::string& dotted, const std::string& value);

} // namespace lorenz
