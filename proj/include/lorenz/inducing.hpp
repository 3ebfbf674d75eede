#pragma once

#include "lorenz/noise.hpp"
#include "lorenz/recurrence.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

namespace lorenz {

/// V^w(n): the component containing c of the union of f_w^-i(B~(delta)), 0 <= i <= n.
struct NiceSetApprox {
    double delta = 0.0;
    std::size_t depth = 0;
    std::size_t offset = 0;       ///< k for V^{sigma^k w}
    Interval V;
    Interval inner;               ///< B~(delta)
    Interval outer;               ///< B~(2 delta)
    std::size_t extensions = 0;   ///< pullback components absorbed
    std::size_t verify_horizon = 0;
    std::size_t boundary_touches = 0;  ///< boundary orbit points found on a companion boundary

    bool contained() const noexcept
    {
        return V.lo <= inner.lo && V.hi >= inner.hi && V.lo >= outer.lo && V.hi <= outer.hi;
    }
};

struct NiceSetOptions {
    std::size_t depth = 1200;
    std::size_t verify_horizon = 1000;
    unsigned precision_bits = 768;  ///< MPFR precision for boundary orbits
    double touch_tol = 1e-12;
};

/// V^{sigma^k w}(depth) in double precision.
NiceSetApprox nice_set_at(const PerturbedFamily& family, const OmegaStream& omega, double delta, std::size_t depth,
                          std::size_t k = 0);

/// Builds V^w(depth) with high-precision boundaries and checks that f_w^k(boundary) stays out of
/// V^{sigma^k w}(depth - k) for 1 <= k <= verify_horizon <= depth. Throws NicenessViolated.
NiceSetApprox nice_set_build(const PerturbedFamily& family, const OmegaStream& omega, double delta,
                             const NiceSetOptions& opts = {});

/// Lazily built companions V^{sigma^k w}, shared by inducing-time searches on one w.
class NiceSetCache {
public:
    NiceSetCache(const PerturbedFamily& family, OmegaStream omega, double delta, std::size_t depth)
        : family_(&family), omega_(omega), delta_(delta), depth_(depth)
    {
    }

    const Interval& at(std::size_t k);
    const OmegaStream& omega() const noexcept { return omega_; }
    double delta() const noexcept { return delta_; }

private:
    const PerturbedFamily* family_;
    OmegaStream omega_;
    double delta_;
    std::size_t depth_;
    std::map<std::size_t, Interval> sets_;
};

/// Nonlinearity sup |D2 f^n| / |Df^n| * |J| and the range of Df^n over a uniform grid on J.
struct BranchDistortion {
    double nonlinearity = 0.0;
    double min_df = 0.0;
    double max_df = 0.0;
    bool hit_critical = false;
};

BranchDistortion branch_distortion(const PerturbedFamily& family, std::span<const double> omega, Interval J,
                                   std::size_t n, std::size_t grid = 256);

struct MarkovReport {
    std::size_t m = 0;
    Interval J;
    Interval target;           ///< V^{sigma^m w}
    double nonlinearity = 0.0;
    double nonlinearity_fine = 0.0;  ///< same on a doubled grid
    double min_df = 0.0;
    double floor = 0.0;        ///< e^2 |V^{sigma^m w}| / |V^w|
    std::size_t candidates = 0;  ///< times with f_w^s(x) in V^{sigma^s w} that were examined
};

struct MarkovOptions {
    std::size_t horizon = 400;
    std::size_t grid = 256;
    double max_nonlinearity = 1.0;
};

/// Minimal s >= 1 at which the pullback of V^{sigma^s w} along the orbit of x is diffeomorphic,
/// has nonlinearity <= 1 and the derivative floor holds.
std::optional<MarkovReport> markov_inducing_time(const PerturbedFamily& family, NiceSetCache& sets, double x,
                                                 const MarkovOptions& opts = {});

struct TailStats {
    std::size_t ensemble = 0;
    std::size_t censored = 0;         ///< no inducing time within the horizon
    std::size_t horizon = 0;
    std::vector<std::size_t> m_values;   ///< sorted support of the uncensored times
    std::vector<double> survival;        ///< P(m_V > m_values[i])
    double fit_slope = 0.0;              ///< log-log slope on the fitted range
    double fit_intercept = 0.0;
    std::size_t fit_lo = 0;
    std::size_t fit_hi = 0;
    std::size_t fit_points = 0;
    double h_moment = 0.0;               ///< empirical E[h^p] over members with a good return, NaN if none
    double moment_p = 1.0;
    std::size_t h_missing = 0;
    std::size_t h_violations = 0;        ///< members with m_V > h (both defined)

    double censored_fraction() const noexcept
    {
        return ensemble == 0 ? 0.0 : static_cast<double>(censored) / static_cast<double>(ensemble);
    }
};

struct TailOptions {
    std::size_t ensemble = 100000;
    std::size_t members_per_omega = 100;
    std::size_t nice_depth = 80;
    double delta0 = 0.002;
    double theta = 0.001;
    double moment_p = 1.0;
    MarkovOptions markov;
    std::uint64_t stream_base = 0x1000000;
};

/// Empirical survival of m_V over (x, w) with x uniform on V^w, censored at the horizon, plus
/// the p-th moment of h^theta_delta0.
TailStats inducing_tail_stats(const PerturbedFamily& family, const NoiseModel& model, const TailOptions& opts);

/// Survival function of samples; support sorted ascending. Censored entries count as > every m.
void survival_function(std::vector<std::size_t> times, std::size_t censored, std::vector<std::size_t>& support,
                       std::vector<double>& survival);

struct WindowSample {
    double x = 0.0;
    std::size_t n = 0;
    double asum = 0.0;
    Interval J;
    double nonlinearity = 0.0;
    bool diffeomorphic = true;
};

/// N(f_w^n | J) for J = [x -+ theta0 / A(x, w, n)] without c.
WindowSample window_check(const PerturbedFamily& family, std::span<const double> omega, double x, std::size_t n,
                          double theta0, std::size_t grid = 256);

} // namespace lorenz
