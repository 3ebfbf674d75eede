#pragma once

#include "lorenz/lorenz_map.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lorenz {

enum class NoiseKind { uniform, triangular };

const char* to_string(NoiseKind k);
NoiseKind noise_kind_from_string(const std::string& s);

struct NoiseModel {
    double eps = 0.01;
    NoiseKind kind = NoiseKind::uniform;
    double L = 2.0;
    std::uint64_t seed = 1;

    /// Throws InvalidParams unless 0 <= eps <= family.eps_max() and L > 1.
    void validate(const PerturbedFamily& family) const;

    /// Density of nu_eps at t (zero outside [-eps, eps]).
    double density(double t) const;
};

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based noise sequence: entry i depends only on (seed, stream id, i),
/// so shifting is exact and costs nothing.
class OmegaStream {
public:
    OmegaStream(const NoiseModel& model, std::uint64_t stream_id);

    double operator[](std::size_t i) const;
    std::size_t offset() const noexcept { return offset_; }

    /// sigma^k omega.
    OmegaStream shift(std::size_t k) const
    {
        OmegaStream s = *this;
        s.offset_ += k;
        return s;
    }

    std::vector<double> prefix(std::size_t n) const;

    double eps() const noexcept { return eps_; }
    std::uint64_t key() const noexcept { return key_; }

private:
    double unit(std::uint64_t counter) const;

    std::uint64_t key_;
    double eps_;
    NoiseKind kind_;
    std::size_t offset_ = 0;
};

/// i.i.d. draws from nu_eps for the given stream.
std::vector<double> sample_omega(const NoiseModel& model, std::uint64_t stream_id, std::size_t n);

/// Uniform [0,1) variates for auxiliary sampling (initial points, set samples) that must not
/// share counters with noise streams.
class AuxRng {
public:
    AuxRng(std::uint64_t seed, std::uint64_t stream_id);
    double uniform();
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    std::uint64_t next();

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

struct KernelSample {
    double x;
    double a_lo;
    double a_hi;
    double p_hat;        ///< Monte-Carlo estimate of p_eps(x, A)
    double p_exact;      ///< closed form on the additive core for uniform noise, NaN otherwise
    double bound;        ///< L (|A| / 2 eps)^(1/L)
    double ratio;        ///< p_hat / bound
    double p_lower;      ///< lower confidence bound on p
    bool violation;      ///< p_lower > bound
    bool in_core;
};

struct KernelReport {
    std::vector<KernelSample> samples;
    double max_ratio = 0.0;
    std::size_t confirmed_violations = 0;
    std::size_t draws_per_pair = 0;
    double z = 0.0;
};

/// Monte-Carlo check of p_eps(x, A) <= L (|A|/2eps)^(1/L).
/// x is drawn uniformly from [c1+ - eps, c1- + eps], A is a random interval of length <= 2 eps
/// that meets the support [f(x) - eps, f(x) + eps].
KernelReport kernel_regularity_check(const PerturbedFamily& family, const NoiseModel& model, std::size_t n_pairs,
                                     std::size_t draws_per_pair, std::uint64_t stream_id = 0, double z = 3.0);

/// p_eps(x, A) for one pair, estimated with the given stream.
double kernel_probability_mc(const PerturbedFamily& family, const OmegaStream& stream, double x, double a_lo,
                             double a_hi, std::size_t draws);

struct SkewState {
    double x;
    OmegaStream omega;
};

/// k steps of the skew product (x, w) -> (f_{w0}(x), sigma w). Throws CriticalHit.
SkewState skew_step(const PerturbedFamily& family, double x, const OmegaStream& omega, std::size_t k,
                    double guard = 1e-14);

} // namespace lorenz
