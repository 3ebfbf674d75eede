#pragma once

#include "lorenz/errors.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>

namespace lorenz {

enum class Side { left, right };

inline const char* to_string(Side s) { return s == Side::left ? "left" : "right"; }

namespace detail {

inline bool is_small_integer(double e) { return e >= 0.0 && e <= 16.0 && e == std::floor(e); }

/// y^e, with repeated multiplication for small integral exponents.
template <class Real>
Real power(const Real& y, double e)
{
    if (is_small_integer(e)) {
        Real r = 1;
        for (int k = 0; k < static_cast<int>(e); ++k)
            r *= y;
        return r;
    }
    using std::pow;
    return pow(y, Real(e));
}

/// y^(1/ell).
template <class Real>
Real root(const Real& y, double ell)
{
    using std::sqrt;
    if (ell == 2.0)
        return sqrt(y);
    using std::pow;
    return pow(y, Real(1) / Real(ell));
}

} // namespace detail

/// Contracting Lorenz map with affine coordinate changes:
///   f(x) = u (1 - ((c-x)/c)^ell)          for x < c,
///   f(x) = 1 - v (1 - ((x-c)/(1-c))^ell)  for x > c.
/// The right branch is written so that f(1) = 1 holds bit-exactly.
class MapParams {
public:
    MapParams(double c, double ell, double u, double v);

    /// c = 1/2, ell = 2, u = v = 0.9.
    static MapParams canonical() { return MapParams(0.5, 2.0, 0.9, 0.9); }

    double c() const noexcept { return c_; }
    double ell() const noexcept { return ell_; }
    double u() const noexcept { return u_; }
    double v() const noexcept { return v_; }

    double c1_plus() const noexcept { return 1.0 - v_; }
    double c1_minus() const noexcept { return u_; }

    Side side_of(double x) const noexcept { return x < c_ ? Side::left : Side::right; }

    /// Lower/upper non-flatness constants: O1 d^(ell-1) <= Df <= O2 d^(ell-1).
    double O1() const noexcept;
    double O2() const noexcept;

    template <class Real>
    Real value(const Real& x) const
    {
        if (x == Real(c_))
            throw CriticalPointEval();
        if (x < Real(c_)) {
            Real y = (Real(c_) - x) / Real(c_);
            return Real(u_) * (Real(1) - detail::power(y, ell_));
        }
        Real y = (x - Real(c_)) / Real(1.0 - c_);
        return Real(1) - Real(v_) * (Real(1) - detail::power(y, ell_));
    }

    /// First three derivatives of the branch containing x.
    template <class Real>
    void derivatives(const Real& x, Real& d1, Real& d2, Real& d3) const
    {
        if (x == Real(c_))
            throw CriticalPointEval();
        const double l = ell_;
        const bool left = x < Real(c_);
        const double width = left ? c_ : 1.0 - c_;
        const double amp = left ? u_ : v_;
        // d/dx of the inner coordinate is -1/c on the left, +1/(1-c) on the right.
        const double sgn = left ? -1.0 : 1.0;
        Real y = left ? Real((Real(c_) - x) / Real(c_)) : Real((x - Real(c_)) / Real(width));
        d1 = Real(amp * l / width) * detail::power(y, l - 1);
        d2 = Real(sgn * amp * l * (l - 1) / (width * width)) * detail::power(y, l - 2);
        d3 = l == 2.0 ? Real(0)
                      : Real(amp * l * (l - 1) * (l - 2) / (width * width * width)) * detail::power(y, l - 3);
    }

    /// Preimage of y on the requested branch of the unperturbed map (closure of the image).
    template <class Real>
    std::optional<Real> inverse(const Real& y, Side side) const
    {
        if (side == Side::left) {
            if (y < Real(0) || y > Real(u_))
                return std::nullopt;
            Real z = (Real(u_) - y) / Real(u_);
            return Real(c_) - Real(c_) * detail::root(z, ell_);
        }
        if (y < Real(1.0 - v_) || y > Real(1))
            return std::nullopt;
        Real z = (Real(v_) - (Real(1) - y)) / Real(v_);
        if (z < Real(0))
            z = 0;
        return Real(c_) + Real(1.0 - c_) * detail::root(z, ell_);
    }

private:
    double c_;
    double ell_;
    double u_;
    double v_;
};

/// Schwarzian derivative D3/D1 - 3/2 (D2/D1)^2 of the unperturbed map.
double schwarzian(const MapParams& params, double x);

/// (c1+, c1-) = (1 - v, u).
std::pair<double, double> critical_values(const MapParams& params);

struct Derivatives {
    double d1;
    double d2;
};

/// Additive admissible family f_t = f + t w with a taper profile w that equals 1 on
/// [m, 1-m] and vanishes at both endpoints (smoothstep on the taper zones).
class PerturbedFamily {
public:
    explicit PerturbedFamily(MapParams base, double taper_margin = 0.05);

    const MapParams& base() const noexcept { return base_; }
    double margin() const noexcept { return margin_; }
    double eps_max() const noexcept { return eps_max_; }

    /// Throws NoiseOutOfRange when |t| > eps_max.
    void check_noise(double t) const
    {
        if (std::abs(t) > eps_max_)
            throw NoiseOutOfRange(t, eps_max_);
    }

    /// True if w == 1 at x (the additive core).
    bool in_core(double x) const noexcept { return x >= margin_ && x <= 1.0 - margin_; }

    template <class Real>
    Real taper(const Real& x) const
    {
        if (x <= Real(margin_))
            return smoothstep(x / Real(margin_));
        if (x >= Real(1.0 - margin_))
            return smoothstep((Real(1) - x) / Real(margin_));
        return Real(1);
    }

    double taper_d1(double x) const noexcept;
    double taper_d2(double x) const noexcept;

    template <class Real>
    Real value(double t, const Real& x) const
    {
        check_noise(t);
        Real y = base_.value(x);
        if (t != 0.0)
            y += Real(t) * taper(x);
        return y;
    }

    Derivatives derivatives(double t, double x) const;

    /// Upper end of the left-branch image, f_t(c-) = u + t.
    double left_sup(double t) const noexcept { return base_.u() + t; }
    /// Lower end of the right-branch image, f_t(c+) = 1 - v + t.
    double right_inf(double t) const noexcept { return 1.0 - base_.v() + t; }

    /// Preimage of y on one branch of f_t; nullopt if y is outside the closed branch image.
    std::optional<double> inverse(double t, double y, Side side) const;

    /// Same as inverse(); high-precision callers are restricted to the additive core.
    template <class Real>
    std::optional<Real> inverse_core(double t, const Real& y, Side side) const
    {
        check_noise(t);
        auto x = base_.inverse(Real(y - Real(t)), side);
        if (!x)
            return std::nullopt;
        if (*x < Real(margin_) || *x > Real(1.0 - margin_))
            throw OutOfBranchRange("high-precision inverse left the additive core");
        return x;
    }

private:
    template <class Real>
    static Real smoothstep(const Real& s)
    {
        return s * s * (Real(3) - Real(2) * s);
    }

    MapParams base_;
    double margin_;
    double eps_max_;
};

/// Free-function forms of the map operations.
double eval(const PerturbedFamily& family, double t, double x);
Derivatives derivative(const PerturbedFamily& family, double t, double x);
std::optional<double> inverse_branch(const PerturbedFamily& family, double t, double y, Side side);

/// Unperturbed map (t = 0) conveniences.
double eval(const MapParams& params, double x);
Derivatives derivative(const MapParams& params, double x);

/// Numerical evidence for (SC1)/(LD)/(CE) along one critical orbit.
struct SummabilityStats {
    Side value_side;          ///< which critical value (right = c1+, left = c1-)
    std::size_t n;
    double partial_sum;       ///< sum_{k<n} 1 / Df^k(v)
    double tail_min_log_df;   ///< min of log Df^k(v) over the tail window
    double final_log_df;      ///< log Df^n(v)
    double growth_rate;       ///< log Df^n(v) / n
    std::size_t tail_window;
    bool ld_failure;          ///< tail minimum below 1
    bool monotone_growth;     ///< running max of log Df grows over both tail halves
};

/// Iterates the critical value c1+ (Side::right) or c1- (Side::left) n times.
/// Throws CriticalHit if the orbit lands within `guard` of c.
SummabilityStats summability_stats(const MapParams& params, Side value_side, std::size_t n,
                                   double guard = 1e-14);

} // namespace lorenz
