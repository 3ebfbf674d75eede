#pragma once

#include "lorenz/inducing.hpp"
#include "lorenz/noise.hpp"
#include "lorenz/recurrence.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace lorenz {

/// Line y = intercept + slope * s lying below every sample (s_i, y_i).
struct LinearBound {
    double intercept = 0.0;
    double slope = 0.0;

    double operator()(double s) const noexcept { return intercept + slope * s; }
};

/// Supporting line of the lower convex hull of the samples at abscissa `anchor`.
/// Throws InvalidParams on empty input.
LinearBound lower_envelope(std::span<const double> s, std::span<const double> y, double anchor);

struct ManeOptions {
    std::size_t ensemble = 2000;
    std::size_t horizon = 200;
    double C_ref = 0.1;  ///< fixed prefactor; lambda is fitted against it
    std::uint64_t seed = 1;
    std::uint64_t stream_base = 0x3000000;
};

/// Df^n(x) >= C lambda^n over segments x, ..., f^{n-1}(x) outside U (deterministic), or
/// Df_w^n(x) >= K^-1 e^{eta n} with K^-1 = C_ref and eta = log lambda (random).
struct ManeReport {
    Interval U;
    bool random = false;
    double C_ref = 0.0;
    double lambda = 0.0;
    double eta = 0.0;
    std::size_t orbits = 0;          ///< sampled starts outside U
    std::size_t samples = 0;
    std::size_t worst_n = 0;         ///< segment length attaining lambda
    double worst_df = 0.0;
    std::vector<double> orbit_minima;  ///< min_n Df^n / (C_ref lambda^n) per used orbit, >= 1
};

/// model may be null (or have eps = 0) for the deterministic version.
ManeReport mane_estimate(const PerturbedFamily& family, const NoiseModel* model, Interval U,
                         const ManeOptions& opts = {});

struct EnvelopeFit {
    std::vector<double> s;
    std::vector<double> log_df;
    double anchor = 0.0;  ///< median s
    LinearBound fit;
    std::size_t violations = 0;  ///< samples below the fitted line (expected 0)
};

struct GrowthRung {
    double eps = 0.0;
    double D = 0.0;               ///< D(eps)
    EnvelopeFit near_cv;          ///< first entries into B~(2 eps) from within 4 eps of CV
    EnvelopeFit avoiding;         ///< B~(eps)-avoiding segments
    double Lambda_hat = 0.0;      ///< e^{intercept} D(eps)
    double alpha_hat = 0.0;       ///< ln(slope) / ln(eps), NaN for slope <= 0
    double alpha_lo = 0.0;        ///< bootstrap percentile interval
    double alpha_hi = 0.0;
    double A_hat = 0.0;           ///< e^{intercept} / eps^{1 - 1/l} on the avoiding samples
};

struct GrowthReport {
    std::vector<GrowthRung> rungs;
    bool Lambda_increasing = false;  ///< along decreasing eps, report-only
    double A_spread = 0.0;           ///< max A_hat / min A_hat
};

struct GrowthOptions {
    std::size_t ensemble = 2000;
    std::size_t horizon = 500;
    std::size_t bootstrap = 200;
    std::uint64_t stream_base = 0x4000000;
};

/// Lower envelopes of (s, log Df_w^s) for both growth bounds, one rung per eps (noise level = eps).
GrowthReport growth_envelopes(const PerturbedFamily& family, const NoiseModel& model, std::span<const double> ladder,
                               const GrowthOptions& opts = {});

struct KoebeResult {
    bool applicable = false;     ///< image of J is tau-well inside the image of T
    double tau = 0.0;
    std::size_t s = 0;
    Interval T;
    Interval J;
    double ratio = 1.0;          ///< max/min Df^s over the grid on J
    double ratio_fine = 1.0;     ///< same on a doubled grid
    double bound = 1.0;          ///< ((1 + tau) / tau)^2
    bool pass = true;
    double tau_prime = 0.0;      ///< tau^2 / (1 + 2 tau)
    double macro_margin = 0.0;   ///< min(J.lo - T.lo, T.hi - J.hi) / |J|
    bool macro_pass = true;
    std::size_t one_sided_points = 0;
    double one_sided_worst = 0.0;  ///< min Df^s(x) / ((tau/(1+tau))^2 Df^s(endpoint)) over qualifying x
    bool one_sided_pass = true;
};

/// Checks the three Koebe bounds for f^s on T = chain.G[0] with J the pullback of `image` along
/// the chain's path. chain must come from pullback_component on the unperturbed map.
/// Throws NotDiffeomorphic for positive order.
KoebeResult koebe_check(const MapParams& params, const PullbackChain& chain, Interval image, double tau,
                        std::size_t grid = 256);

struct KoebeSummary {
    std::size_t requested = 0;
    std::size_t checked = 0;        ///< applicable branches
    std::size_t attempts = 0;
    std::size_t violations = 0;
    double worst_ratio_over_bound = 0.0;
    std::vector<KoebeResult> results;
};

/// Random branches: orbit segments of length s in [1, s_max] with a target interval around
/// the endpoint, pulled back with order 0; J is the middle 1/(1+2 tau) of the target.
KoebeSummary koebe_random_branches(const MapParams& params, std::size_t count, std::size_t s_max, double tau,
                                   std::uint64_t seed, std::size_t grid = 256);

struct LandingDistortion {
    std::size_t n = 0;
    double ratio = 0.0;  ///< A(x, w, n) |B~(eps)| / Df_w^n(x)
};

/// First landing n >= 1 of x into B~(eps) and its distortion ratio; none past the horizon.
std::optional<LandingDistortion> landing_distortion(const PerturbedFamily& family, const OmegaStream& omega, double x,
                                                    double eps, std::size_t horizon);

struct DistortionRung {
    double eps = 0.0;
    std::size_t samples = 0;
    double theta_hat = 0.0;   ///< max A(x, w, n) |B~(eps)| / Df_w^n(x) at first landings
    std::size_t n_at_max = 0;
    double mean_ratio = 0.0;
};

struct DistortionTrend {
    std::vector<DistortionRung> rungs;
    bool nonincreasing = false;  ///< within 20% slack, report-only
};

struct DistortionOptions {
    std::size_t ensemble = 2000;
    std::size_t horizon = 2000;
    std::uint64_t stream_base = 0x5000000;
};

/// theta_hat(eps) over first landings into B~(eps) from outside it, noise level eps.
DistortionTrend total_distortion_trend(const PerturbedFamily& family, const NoiseModel& model,
                                       std::span<const double> ladder, const DistortionOptions& opts = {});

} // namespace lorenz
