#include "lorenz/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lorenz {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream_id)
{
    return mix64(mix64(seed ^ 0x6a09e667f3bcc909ULL) + stream_id * kGolden);
}

double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

} // namespace

const char* to_string(NoiseKind k) { return k == NoiseKind::uniform ? "uniform" : "triangular"; }

NoiseKind noise_kind_from_string(const std::string& s)
{
    if (s == "uniform")
        return NoiseKind::uniform;
    if (s == "triangular")
        return NoiseKind::triangular;
    throw InvalidParams("unknown noise kind '" + s + "'");
}

void NoiseModel::validate(const PerturbedFamily& family) const
{
    if (!(eps >= 0.0))
        throw InvalidParams("noise amplitude must be nonnegative");
    if (eps > family.eps_max())
        throw NoiseOutOfRange(eps, family.eps_max());
    if (!(L > 1.0))
        throw InvalidParams("regularity constant L must exceed 1");
}

double NoiseModel::density(double t) const
{
    if (eps <= 0.0 || std::abs(t) > eps)
        return 0.0;
    if (kind == NoiseKind::uniform)
        return 0.5 / eps;
    return (eps - std::abs(t)) / (eps * eps);
}

OmegaStream::OmegaStream(const NoiseModel& model, std::uint64_t stream_id)
    : key_(derive_key(model.seed, stream_id)), eps_(model.eps), kind_(model.kind)
{
}

double OmegaStream::unit(std::uint64_t counter) const { return to_unit(mix64(key_ + (counter + 1) * kGolden)); }

double OmegaStream::operator[](std::size_t i) const
{
    if (eps_ == 0.0)
        return 0.0;
    const std::uint64_t j = offset_ + i;
    if (kind_ == NoiseKind::uniform)
        return eps_ * (2.0 * unit(j) - 1.0);
    return eps_ * (unit(2 * j) + unit(2 * j + 1) - 1.0);
}

std::vector<double> OmegaStream::prefix(std::size_t n) const
{
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = (*this)[i];
    return out;
}

std::vector<double> sample_omega(const NoiseModel& model, std::uint64_t stream_id, std::size_t n)
{
    return OmegaStream(model, stream_id).prefix(n);
}

AuxRng::AuxRng(std::uint64_t seed, std::uint64_t stream_id)
    : key_(derive_key(seed ^ 0xa5a5a5a5a5a5a5a5ULL, stream_id))
{
}

std::uint64_t AuxRng::next() { return mix64(key_ + (++counter_) * kGolden); }

double AuxRng::uniform() { return to_unit(next()); }

double kernel_probability_mc(const PerturbedFamily& family, const OmegaStream& stream, double x, double a_lo,
                             double a_hi, std::size_t draws)
{
    std::size_t hits = 0;
    for (std::size_t i = 0; i < draws; ++i) {
        const double y = family.value(stream[i], x);
        if (y >= a_lo && y <= a_hi)
            ++hits;
    }
    return draws == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(draws);
}

KernelReport kernel_regularity_check(const PerturbedFamily& family, const NoiseModel& model, std::size_t n_pairs,
                                     std::size_t draws_per_pair, std::uint64_t stream_id, double z)
{
    model.validate(family);
    if (!(model.eps > 0.0))
        throw InvalidParams("kernel regularity needs eps > 0");
    const double eps = model.eps;
    const MapParams& p = family.base();
    const double lo = p.c1_plus() - eps;
    const double hi = p.c1_minus() + eps;

    KernelReport rep;
    rep.draws_per_pair = draws_per_pair;
    rep.z = z;
    AuxRng rng(model.seed, stream_id);
    const double n = static_cast<double>(draws_per_pair);

    for (std::size_t k = 0; k < n_pairs; ++k) {
        double x;
        do {
            x = rng.uniform(lo, hi);
        } while (std::abs(x - p.c()) < 1e-12);
        const double fx = family.value(0.0, x);
        const double len = 2.0 * eps * rng.uniform();
        // left end chosen so that A meets [f(x) - eps, f(x) + eps]
        const double a_lo = rng.uniform(fx - eps - len, fx + eps);
        const double a_hi = a_lo + len;

        KernelSample s{};
        s.x = x;
        s.a_lo = a_lo;
        s.a_hi = a_hi;
        s.in_core = family.in_core(x);
        const OmegaStream stream(model, stream_id * 0x10000ULL + k + 1);
        s.p_hat = kernel_probability_mc(family, stream, x, a_lo, a_hi, draws_per_pair);
        s.p_exact = std::numeric_limits<double>::quiet_NaN();
        if (s.in_core && model.kind == NoiseKind::uniform) {
            const double ov = std::min(a_hi, fx + eps) - std::max(a_lo, fx - eps);
            s.p_exact = std::max(0.0, ov) / (2.0 * eps);
        }
        s.bound = model.L * std::pow(len / (2.0 * eps), 1.0 / model.L);
        s.ratio = s.bound > 0.0 ? s.p_hat / s.bound : (s.p_hat > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        // Wilson score lower bound
        const double ph = s.p_hat;
        const double denom = 1.0 + z * z / n;
        const double centre = ph + z * z / (2.0 * n);
        const double spread = z * std::sqrt(ph * (1.0 - ph) / n + z * z / (4.0 * n * n));
        s.p_lower = std::max(0.0, (centre - spread) / denom);
        s.violation = s.p_lower > s.bound;
        rep.max_ratio = std::max(rep.max_ratio, s.ratio);
        if (s.violation)
            ++rep.confirmed_violations;
        rep.samples.push_back(s);
    }
    return rep;
}

SkewState skew_step(const PerturbedFamily& family, double x, const OmegaStream& omega, std::size_t k, double guard)
{
    const double c = family.base().c();
    for (std::size_t i = 0; i < k; ++i) {
        if (std::abs(x - c) < guard)
            throw CriticalHit(i);
        x = family.value(omega[i], x);
    }
    return {x, omega.shift(k)};
}

} // namespace lorenz
