#include "lorenz/inducing.hpp"

#include <boost/multiprecision/mpfr.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace lorenz {

namespace mp = boost::multiprecision;

namespace {

template <class Real>
struct RealInterval {
    Real lo;
    Real hi;
    bool contains(const Real& x) const { return x > lo && x < hi; }
};

template <class Real>
RealInterval<Real> nbhd(const MapParams& p, double delta)
{
    tilde_B(p, delta);  // range check
    const Real c(p.c());
    const Real lr = c * detail::root(Real(delta) / Real(p.u()), p.ell());
    const Real rr = (Real(1) - c) * detail::root(Real(delta) / Real(p.v()), p.ell());
    return {c - lr, c + rr};
}

template <class Real>
std::optional<Real> invert(const PerturbedFamily& family, double t, const Real& y, Side side)
{
    if constexpr (std::is_same_v<Real, double>)
        return family.inverse(t, y, side);
    else
        return family.inverse_core(t, y, side);
}

// Component of f_{w_{k}}^-1 ... f_{w_{k+i-1}}^-1 (target) along the recorded sides.
template <class Real>
std::optional<RealInterval<Real>> pull_back(const PerturbedFamily& family, const OmegaStream& omega, std::size_t k,
                                            const std::vector<Side>& path, RealInterval<Real> g)
{
    const Real c(family.base().c());
    for (std::size_t j = path.size(); j-- > 0;) {
        const double t = omega[k + j];
        if (path[j] == Side::left) {
            const Real top = Real(family.base().u()) + Real(t);
            const Real lo = g.lo > Real(0) ? g.lo : Real(0);
            const Real hi = g.hi < top ? g.hi : top;
            if (!(hi > lo))
                return std::nullopt;
            auto a = invert(family, t, lo, Side::left);
            Real b = c;
            if (g.hi < top) {
                auto bb = invert(family, t, hi, Side::left);
                if (!bb)
                    return std::nullopt;
                b = *bb;
            }
            if (!a)
                return std::nullopt;
            g = {*a, b};
        } else {
            const Real bottom = Real(1.0 - family.base().v()) + Real(t);
            const Real lo = g.lo > bottom ? g.lo : bottom;
            const Real hi = g.hi < Real(1) ? g.hi : Real(1);
            if (!(hi > lo))
                return std::nullopt;
            Real a = c;
            if (g.lo > bottom) {
                auto aa = invert(family, t, lo, Side::right);
                if (!aa)
                    return std::nullopt;
                a = *aa;
            }
            auto b = invert(family, t, hi, Side::right);
            if (!b)
                return std::nullopt;
            g = {a, *b};
        }
    }
    return g;
}

// Pushes one end of the current neighbourhood outwards while it lies in some f_w^-i(B~(delta)),
// 1 <= i <= depth. Returns the number of absorbed components.
template <class Real>
std::size_t push_end(const PerturbedFamily& family, const OmegaStream& omega, std::size_t k,
                     const RealInterval<Real>& inner, std::size_t depth, Real& end, bool right, const Real& tiny)
{
    const MapParams& p = family.base();
    const Real c(p.c());
    const Real guard(kCriticalGuard);
    std::size_t absorbed = 0;
    std::vector<Side> path;
    path.reserve(depth);
    for (;;) {
        bool moved = false;
        Real y = end;
        path.clear();
        for (std::size_t i = 1; i <= depth; ++i) {
            const Real dist = y > c ? Real(y - c) : Real(c - y);
            if (dist < guard)
                break;
            path.push_back(y < c ? Side::left : Side::right);
            y = family.value(omega[k + i - 1], y);
            if (!inner.contains(y))
                continue;
            auto g = pull_back<Real>(family, omega, k, path, inner);
            if (!g)
                continue;
            if (right && g->hi > end + tiny) {
                end = g->hi;
                moved = true;
            } else if (!right && g->lo < end - tiny) {
                end = g->lo;
                moved = true;
            }
            if (moved)
                break;
        }
        if (!moved)
            return absorbed;
        ++absorbed;
    }
}

template <class Real>
RealInterval<Real> grow(const PerturbedFamily& family, const OmegaStream& omega, std::size_t k, double delta,
                        std::size_t depth, const Real& tiny, std::size_t& absorbed)
{
    const RealInterval<Real> inner = nbhd<Real>(family.base(), delta);
    Real a = inner.lo, b = inner.hi;
    absorbed = 0;
    if (depth > 0) {
        absorbed += push_end<Real>(family, omega, k, inner, depth, b, true, tiny);
        absorbed += push_end<Real>(family, omega, k, inner, depth, a, false, tiny);
    }
    return {a, b};
}

using MpReal = mp::number<mp::mpfr_float_backend<0>, mp::et_off>;

class PrecisionScope {
public:
    explicit PrecisionScope(unsigned digits10) : saved_(MpReal::default_precision())
    {
        MpReal::default_precision(digits10);
    }
    ~PrecisionScope() { MpReal::default_precision(saved_); }

private:
    unsigned saved_;
};

NiceSetApprox make_approx(const PerturbedFamily& family, double delta, std::size_t depth, std::size_t k, Interval V,
                          std::size_t absorbed)
{
    NiceSetApprox n;
    n.delta = delta;
    n.depth = depth;
    n.offset = k;
    n.V = V;
    n.inner = tilde_B(family.base(), delta).interval();
    n.outer = tilde_B(family.base(), 2.0 * delta).interval();
    n.extensions = absorbed;
    return n;
}

} // namespace

NiceSetApprox nice_set_at(const PerturbedFamily& family, const OmegaStream& omega, double delta, std::size_t depth,
                          std::size_t k)
{
    std::size_t absorbed = 0;
    auto g = grow<double>(family, omega, k, delta, depth, 1e-15, absorbed);
    return make_approx(family, delta, depth, k, {g.lo, g.hi}, absorbed);
}

const Interval& NiceSetCache::at(std::size_t k)
{
    auto it = sets_.find(k);
    if (it != sets_.end())
        return it->second;
    return sets_.emplace(k, nice_set_at(*family_, omega_, delta_, depth_, k).V).first->second;
}

NiceSetApprox nice_set_build(const PerturbedFamily& family, const OmegaStream& omega, double delta,
                             const NiceSetOptions& opts)
{
    using Real = MpReal;
    const unsigned digits10 = static_cast<unsigned>(opts.precision_bits * 0.30103) + 1;
    const PrecisionScope scope(digits10);

    const Real tiny = mp::ldexp(Real(1), -static_cast<int>(opts.precision_bits) + 16);
    std::size_t absorbed = 0;
    const auto g = grow<Real>(family, omega, 0, delta, opts.depth, tiny, absorbed);
    NiceSetApprox out = make_approx(family, delta, opts.depth, 0, {static_cast<double>(g.lo), static_cast<double>(g.hi)},
                                    absorbed);
    out.verify_horizon = opts.verify_horizon;

    const MapParams& p = family.base();
    const Real c(p.c());
    const RealInterval<Real> inner = nbhd<Real>(p, delta);
    const double reach = 2.0 * std::max(out.outer.hi - p.c(), p.c() - out.outer.lo);
    if (opts.verify_horizon > opts.depth)
        throw InvalidParams("nice-set verification horizon exceeds the construction depth");
    // companions share the absolute time horizon: V^{sigma^k w} is built to depth n - k
    std::map<std::size_t, Interval> companions;
    auto companion = [&](std::size_t k) -> const Interval& {
        auto it = companions.find(k);
        if (it == companions.end())
            it = companions.emplace(k, nice_set_at(family, omega, delta, opts.depth - k, k).V).first;
        return it->second;
    };
    const std::size_t span = opts.depth;
    const Real edge = mp::ldexp(Real(1), -static_cast<int>(opts.precision_bits / 2));
    for (int side : {-1, 1}) {
        // high-precision boundary orbit; entries[t] marks f^t(a) in B~(delta)
        std::vector<double> pts(span + 1);
        std::vector<char> entries(span + 1, 0);
        Real y = side < 0 ? g.lo : g.hi;
        pts[0] = static_cast<double>(y);
        std::size_t reached = span;
        for (std::size_t t = 1; t <= span; ++t) {
            if (mp::abs(y - c) < Real(kCriticalGuard)) {
                reached = t - 1;
                break;
            }
            y = family.value(omega[t - 1], y);
            pts[t] = static_cast<double>(y);
            // points on the boundary of B~(delta) up to amplified rounding are not entries
            entries[t] = inner.contains(y) && y - inner.lo > edge && inner.hi - y > edge ? 1 : 0;
        }
        std::vector<std::size_t> next_entry(span + 2, span + 1);
        for (std::size_t t = span + 1; t-- > 0;)
            next_entry[t] = entries[t] ? t : next_entry[t + 1];

        for (std::size_t k = 1; k <= opts.verify_horizon; ++k) {
            if (k > reached)
                throw NicenessViolated(k, side);
            const double yd = pts[k];
            if (std::abs(yd - p.c()) >= reach)
                continue;
            const Interval& Vk = companion(k);
            if (!Vk.contains(yd))
                continue;
            if (yd - Vk.lo <= opts.touch_tol || Vk.hi - yd <= opts.touch_tol) {
                // too close to call in double: f^k(a) lies in the defining union of V^{sigma^k w}
                // only if the boundary orbit enters B~(delta) by time n
                if (next_entry[k] > opts.depth) {
                    ++out.boundary_touches;
                    continue;
                }
            }
            throw NicenessViolated(k, side);
        }
    }
    return out;
}

BranchDistortion branch_distortion(const PerturbedFamily& family, std::span<const double> omega, Interval J,
                                   std::size_t n, std::size_t grid)
{
    BranchDistortion out;
    out.min_df = std::numeric_limits<double>::infinity();
    const double c = family.base().c();
    std::vector<char> sides(n, 0);
    const std::size_t pts = std::max<std::size_t>(grid, 2);
    double worst = 0.0;
    for (std::size_t i = 0; i < pts; ++i) {
        const double x = J.lo + J.length() * static_cast<double>(i) / static_cast<double>(pts - 1);
        OrbitCursor cur(family, x);
        try {
            for (std::size_t j = 0; j < n; ++j) {
                const char sd = cur.x() < c ? 1 : 2;
                if (i == 0)
                    sides[j] = sd;
                else if (sides[j] != sd)
                    out.hit_critical = true;
                cur.advance(omega[j]);
            }
        } catch (const CriticalHit&) {
            out.hit_critical = true;
            continue;
        }
        worst = std::max(worst, std::abs(cur.d2() / cur.d1()));
        out.min_df = std::min(out.min_df, cur.d1());
        out.max_df = std::max(out.max_df, cur.d1());
    }
    out.nonlinearity = worst * J.length();
    return out;
}

namespace {

// Point count of the largest subgrid with at most 17 points of an endpoint-inclusive grid.
std::size_t coarse_grid(std::size_t grid)
{
    if (grid < 3)
        return grid;
    const std::size_t cells = grid - 1;
    std::size_t d = std::min<std::size_t>(16, cells);
    while (cells % d != 0)
        --d;
    return d + 1;
}

} // namespace

std::optional<MarkovReport> markov_inducing_time(const PerturbedFamily& family, NiceSetCache& sets, double x,
                                                 const MarkovOptions& opts)
{
    const Interval V0 = sets.at(0);
    if (!V0.contains(x))
        throw InvalidParams("markov_inducing_time needs x in V^w");
    const MapParams& p = family.base();
    const std::vector<double> omega = sets.omega().prefix(opts.horizon);
    const double reach = 2.0 * std::max(V0.hi - p.c(), p.c() - V0.lo) + 0.5 * tilde_B(p, sets.delta()).size();

    MarkovReport rep;
    double y = x;
    std::vector<Side> path;
    path.reserve(opts.horizon);
    for (std::size_t s = 1; s <= opts.horizon; ++s) {
        if (std::abs(y - p.c()) < kCriticalGuard)
            return std::nullopt;
        path.push_back(p.side_of(y));
        y = family.value(omega[s - 1], y);
        if (std::abs(y - p.c()) >= reach)
            continue;
        const Interval T = sets.at(s);
        if (!T.contains(y))
            continue;
        ++rep.candidates;
        PullbackChain ch;
        try {
            ch = pullback_component(family, std::span<const double>(omega).first(s), T, path);
        } catch (const EmptyPullback&) {
            continue;
        }
        if (ch.order > 0)
            continue;
        const Interval J = ch.G[0];
        const double floor = std::exp(2.0) * T.length() / V0.length();
        auto sub = std::span<const double>(omega).first(s);
        // the coarse grid is a subgrid of the full one, so it can only underestimate the sup
        // and overestimate the inf
        const BranchDistortion coarse = branch_distortion(family, sub, J, s, coarse_grid(opts.grid));
        if (coarse.hit_critical || coarse.nonlinearity > opts.max_nonlinearity || coarse.min_df < floor)
            continue;
        const BranchDistortion full = branch_distortion(family, sub, J, s, opts.grid);
        if (full.hit_critical || full.nonlinearity > opts.max_nonlinearity || full.min_df < floor)
            continue;
        rep.m = s;
        rep.J = J;
        rep.target = T;
        rep.nonlinearity = full.nonlinearity;
        rep.nonlinearity_fine = branch_distortion(family, sub, J, s, 2 * opts.grid).nonlinearity;
        rep.min_df = full.min_df;
        rep.floor = floor;
        return rep;
    }
    return std::nullopt;
}

void survival_function(std::vector<std::size_t> times, std::size_t censored, std::vector<std::size_t>& support,
                       std::vector<double>& survival)
{
    std::sort(times.begin(), times.end());
    const double total = static_cast<double>(times.size() + censored);
    support.clear();
    survival.clear();
    for (std::size_t i = 0; i < times.size();) {
        std::size_t j = i;
        while (j < times.size() && times[j] == times[i])
            ++j;
        support.push_back(times[i]);
        survival.push_back(static_cast<double>(times.size() - j + censored) / total);
        i = j;
    }
}

TailStats inducing_tail_stats(const PerturbedFamily& family, const NoiseModel& model, const TailOptions& opts)
{
    TailStats ts;
    ts.ensemble = opts.ensemble;
    ts.horizon = opts.markov.horizon;
    ts.moment_p = opts.moment_p;
    const std::size_t per = std::max<std::size_t>(opts.members_per_omega, 1);
    std::vector<std::size_t> times;
    times.reserve(opts.ensemble);
    double moment_sum = 0.0;
    std::size_t moment_n = 0;

    for (std::size_t first = 0; first < opts.ensemble; first += per) {
        const std::uint64_t sid = opts.stream_base + first / per;
        NiceSetCache sets(family, OmegaStream(model, sid), opts.delta0, opts.nice_depth);
        const Interval V0 = sets.at(0);
        AuxRng rng(model.seed, sid);
        const std::size_t last = std::min(opts.ensemble, first + per);
        for (std::size_t i = first; i < last; ++i) {
            double x = rng.uniform(V0.lo, V0.hi);
            if (!V0.contains(x) || x == family.base().c())
                x = 0.5 * (V0.lo + V0.hi) + 0.25 * V0.length();
            std::optional<MarkovReport> m;
            try {
                m = markov_inducing_time(family, sets, x, opts.markov);
            } catch (const CriticalHit&) {
            }
            if (m)
                times.push_back(m->m);
            else
                ++ts.censored;

            std::optional<ReturnEvent> h;
            try {
                h = good_return_time(family, sets.omega(), x, opts.delta0, opts.theta, opts.markov.horizon);
            } catch (const CriticalHit&) {
            }
            if (h) {
                moment_sum += std::pow(static_cast<double>(h->s), opts.moment_p);
                ++moment_n;
                if (m && m->m > h->s)
                    ++ts.h_violations;
            } else {
                ++ts.h_missing;
            }
        }
    }
    ts.h_moment = moment_n ? moment_sum / static_cast<double>(moment_n) : std::numeric_limits<double>::quiet_NaN();
    survival_function(times, ts.censored, ts.m_values, ts.survival);

    // tail range: survival at most 1/2, at least 10 members still surviving, horizon excluded
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < ts.m_values.size(); ++i) {
        const double S = ts.survival[i];
        const double alive = S * static_cast<double>(ts.ensemble) - static_cast<double>(ts.censored);
        if (S > 0.5 || alive < 10.0 || ts.m_values[i] >= ts.horizon)
            continue;
        if (lx.empty())
            ts.fit_lo = ts.m_values[i];
        ts.fit_hi = ts.m_values[i];
        lx.push_back(std::log(static_cast<double>(ts.m_values[i])));
        ly.push_back(std::log(S));
    }
    ts.fit_points = lx.size();
    if (lx.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= static_cast<double>(lx.size());
        my /= static_cast<double>(lx.size());
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (ly[i] - my);
        }
        ts.fit_slope = sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
        ts.fit_intercept = my - ts.fit_slope * mx;
    } else {
        ts.fit_slope = std::numeric_limits<double>::quiet_NaN();
    }
    return ts;
}

WindowSample window_check(const PerturbedFamily& family, std::span<const double> omega, double x, std::size_t n,
                          double theta0, std::size_t grid)
{
    WindowSample w;
    w.x = x;
    w.n = n;
    OrbitCursor cur(family, x);
    for (std::size_t j = 0; j < n; ++j)
        cur.advance(omega[j]);
    w.asum = cur.asum();
    const double r = theta0 / w.asum;
    w.J = {std::max(0.0, x - r), std::min(1.0, x + r)};
    const double c = family.base().c();
    if (w.J.lo < c && w.J.hi > c) {
        // keep the side of x
        if (x < c)
            w.J.hi = c;
        else
            w.J.lo = c;
    }
    const BranchDistortion d = branch_distortion(family, omega, w.J, n, grid);
    w.diffeomorphic = !d.hit_critical;
    w.nonlinearity = d.nonlinearity;
    return w;
}

} // namespace lorenz
