#include "lorenz/lorenz_map.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace lorenz {

MapParams::MapParams(double c, double ell, double u, double v) : c_(c), ell_(ell), u_(u), v_(v)
{
    if (!(c > 0.0 && c < 1.0))
        throw InvalidParams("critical point c must lie in (0,1)");
    if (!(ell > 1.0))
        throw InvalidParams("critical order must exceed 1");
    if (!(u > 0.0 && u < 1.0) || !(v > 0.0 && v < 1.0))
        throw InvalidParams("u and v must lie in (0,1)");
    if (!(1.0 - v < c && c < u))
        throw InvalidParams("trivial Lorenz map: need c1+ = 1-v < c < c1- = u");
}

double MapParams::O1() const noexcept
{
    const double left = u_ * ell_ / std::pow(c_, ell_);
    const double right = v_ * ell_ / std::pow(1.0 - c_, ell_);
    return std::min(left, right);
}

double MapParams::O2() const noexcept
{
    const double left = u_ * ell_ / std::pow(c_, ell_);
    const double right = v_ * ell_ / std::pow(1.0 - c_, ell_);
    return std::max(left, right);
}

double schwarzian(const MapParams& params, double x)
{
    double d1, d2, d3;
    params.derivatives(x, d1, d2, d3);
    const double r = d2 / d1;
    return d3 / d1 - 1.5 * r * r;
}

std::pair<double, double> critical_values(const MapParams& params)
{
    return {params.c1_plus(), params.c1_minus()};
}

namespace {

// Smallest derivative of the base map on [a, b] within one branch (Df is monotone there).
double min_derivative_on(const MapParams& p, double a, double b)
{
    double d1a, d1b, d2, d3;
    p.derivatives(a, d1a, d2, d3);
    p.derivatives(b, d1b, d2, d3);
    return std::min(d1a, d1b);
}

} // namespace

PerturbedFamily::PerturbedFamily(MapParams base, double taper_margin)
    : base_(base), margin_(taper_margin), eps_max_(0.0)
{
    const double c = base_.c();
    if (!(taper_margin > 0.0 && taper_margin < std::min(c, 1.0 - c)))
        throw InvalidParams("taper margin must lie in (0, min(c, 1-c))");

    // |w'| <= 1.5/m for the smoothstep profile.
    const double slope = 1.5 / margin_;
    const double left_zone = min_derivative_on(base_, 0.0, margin_);
    const double right_zone = min_derivative_on(base_, 1.0 - margin_, 1.0);
    double bound = std::min(left_zone, right_zone) / slope;
    // range containment f_t(I) in [0,1] and non-triviality c1+(t) < c < c1-(t)
    bound = std::min({bound, 1.0 - base_.u(), 1.0 - base_.v(), base_.u() - c, c - (1.0 - base_.v())});
    eps_max_ = 0.9 * bound;
}

double PerturbedFamily::taper_d1(double x) const noexcept
{
    if (x <= margin_) {
        const double s = x / margin_;
        return 6.0 * s * (1.0 - s) / margin_;
    }
    if (x >= 1.0 - margin_) {
        const double s = (1.0 - x) / margin_;
        return -6.0 * s * (1.0 - s) / margin_;
    }
    return 0.0;
}

double PerturbedFamily::taper_d2(double x) const noexcept
{
    if (x <= margin_) {
        const double s = x / margin_;
        return (6.0 - 12.0 * s) / (margin_ * margin_);
    }
    if (x >= 1.0 - margin_) {
        const double s = (1.0 - x) / margin_;
        return (6.0 - 12.0 * s) / (margin_ * margin_);
    }
    return 0.0;
}

Derivatives PerturbedFamily::derivatives(double t, double x) const
{
    check_noise(t);
    double d1, d2, d3;
    base_.derivatives(x, d1, d2, d3);
    if (t != 0.0) {
        d1 += t * taper_d1(x);
        d2 += t * taper_d2(x);
    }
    return {d1, d2};
}

std::optional<double> PerturbedFamily::inverse(double t, double y, Side side) const
{
    check_noise(t);
    const double c = base_.c();
    double ylo, yhi;
    if (side == Side::left) {
        ylo = 0.0;
        yhi = left_sup(t);
    } else {
        ylo = right_inf(t);
        yhi = 1.0;
    }
    if (y < ylo || y > yhi)
        return std::nullopt;
    if (y == yhi && side == Side::left)
        return c;
    if (y == ylo && side == Side::right)
        return c;

    // On the core w == 1, so f_t = f + t inverts in closed form.
    if (auto x = base_.inverse(y - t, side); x && in_core(*x))
        return x;

    // Taper zone: bracketed bisection on the monotone branch.
    double a, b;
    if (side == Side::left) {
        a = 0.0;
        b = std::min(margin_, c);
    } else {
        a = std::max(1.0 - margin_, c);
        b = 1.0;
    }
    auto g = [&](double x) { return value(t, x) - y; };
    double ga = g(a);
    if (ga == 0.0)
        return a;
    for (int it = 0; it < 200 && b - a > 1e-16; ++it) {
        const double mid = 0.5 * (a + b);
        const double gm = g(mid);
        if (gm == 0.0)
            return mid;
        if ((gm < 0.0) == (ga < 0.0)) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

double eval(const PerturbedFamily& family, double t, double x) { return family.value(t, x); }

Derivatives derivative(const PerturbedFamily& family, double t, double x) { return family.derivatives(t, x); }

std::optional<double> inverse_branch(const PerturbedFamily& family, double t, double y, Side side)
{
    return family.inverse(t, y, side);
}

double eval(const MapParams& params, double x) { return params.value(x); }

Derivatives derivative(const MapParams& params, double x)
{
    double d1, d2, d3;
    params.derivatives(x, d1, d2, d3);
    return {d1, d2};
}

SummabilityStats summability_stats(const MapParams& params, Side value_side, std::size_t n, double guard)
{
    if (n < 1)
        throw InvalidParams("summability_stats needs n >= 1");
    SummabilityStats s{};
    s.value_side = value_side;
    s.n = n;
    s.tail_window = std::max<std::size_t>(1, n / 10);

    double x = value_side == Side::left ? params.c1_minus() : params.c1_plus();
    double log_df = 0.0;
    double sum = 0.0;
    double tail_min = std::numeric_limits<double>::infinity();
    // running max of log Df over the two halves of the tail window
    double first_half_max = -std::numeric_limits<double>::infinity();
    double second_half_max = -std::numeric_limits<double>::infinity();
    const std::size_t tail_start = n - s.tail_window;
    const std::size_t tail_mid = tail_start + s.tail_window / 2;

    for (std::size_t k = 0; k < n; ++k) {
        sum += std::exp(-log_df);
        if (k >= tail_start) {
            tail_min = std::min(tail_min, log_df);
            if (k < tail_mid)
                first_half_max = std::max(first_half_max, log_df);
            else
                second_half_max = std::max(second_half_max, log_df);
        }
        if (std::abs(x - params.c()) < guard)
            throw CriticalHit(k);
        double d1, d2, d3;
        params.derivatives(x, d1, d2, d3);
        log_df += std::log(d1);
        x = params.value(x);
    }
    s.partial_sum = sum;
    s.tail_min_log_df = tail_min;
    s.final_log_df = log_df;
    s.growth_rate = log_df / static_cast<double>(n);
    s.ld_failure = tail_min < 0.0;
    s.monotone_growth = s.tail_window < 2 || second_half_max > first_half_max;
    return s;
}

} // namespace lorenz
