#pragma once

#include "lorenz/lorenz_map.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace lorenz {

inline constexpr double kCriticalGuard = 1e-14;

/// Random orbit with chain-rule products and the distortion sum
/// A(x, w, i) = sum_{k<i} Df^k(x) / |f^k(x) - c|.
/// If the orbit hits the critical point at step h, every array stops at index h.
struct OrbitRecord {
    double x0 = 0.0;
    std::vector<double> omega;
    std::vector<double> points;
    std::vector<double> d1;
    std::vector<double> d2;
    std::vector<double> asum;
    bool hit_critical = false;

    /// Number of valid steps (points.size() - 1).
    std::size_t length() const noexcept { return points.empty() ? 0 : points.size() - 1; }
};

/// Streaming form of the orbit recursion, used where storing the full record is wasteful.
class OrbitCursor {
public:
    OrbitCursor(const PerturbedFamily& family, double x0, double guard = kCriticalGuard)
        : family_(&family), x_(x0), guard_(guard)
    {
    }

    double x() const noexcept { return x_; }
    double d1() const noexcept { return d1_; }
    double d2() const noexcept { return d2_; }
    double asum() const noexcept { return asum_; }
    std::size_t step() const noexcept { return step_; }

    /// Distance of the current point to c.
    double dist() const noexcept { return std::abs(x_ - family_->base().c()); }
    bool at_critical() const noexcept { return dist() < guard_; }

    /// Applies f_t once. Throws CriticalHit if the current point is within guard of c.
    void advance(double t)
    {
        if (at_critical())
            throw CriticalHit(step_);
        const Derivatives d = family_->derivatives(t, x_);
        const double next_d2 = d.d2 * d1_ * d1_ + d.d1 * d2_;
        asum_ += d1_ / dist();
        d1_ *= d.d1;
        d2_ = next_d2;
        x_ = family_->value(t, x_);
        ++step_;
    }

private:
    const PerturbedFamily* family_;
    double x_;
    double d1_ = 1.0;
    double d2_ = 0.0;
    double asum_ = 0.0;
    std::size_t step_ = 0;
    double guard_;
};

/// Builds the orbit of x0 under f_{omega[n-1]} o ... o f_{omega[0]}.
/// omega must hold at least n values.
OrbitRecord random_orbit(const PerturbedFamily& family, double x0, std::span<const double> omega, std::size_t n,
                         double guard = kCriticalGuard);

} // namespace lorenz
