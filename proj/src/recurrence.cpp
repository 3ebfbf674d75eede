#include "lorenz/recurrence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <tuple>

namespace lorenz {

CriticalNbhd tilde_B(const MapParams& p, double delta, double delta_star)
{
    const double limit = std::min({p.u() - (1.0 - p.v()), p.u(), p.v()});
    if (!(delta > 0.0 && delta < limit))
        throw DeltaOutOfRange("delta must lie in (0, " + std::to_string(limit) + "), got " + std::to_string(delta));
    CriticalNbhd nb;
    nb.delta = delta;
    nb.c = p.c();
    nb.left_radius = p.c() * detail::root(delta / p.u(), p.ell());
    nb.right_radius = (1.0 - p.c()) * detail::root(delta / p.v(), p.ell());
    nb.delta_star = delta_star;
    return nb;
}

double delta_of(const MapParams& p, double x)
{
    if (x < p.c())
        return p.u() * detail::power((p.c() - x) / p.c(), p.ell());
    return p.v() * detail::power((x - p.c()) / (1.0 - p.c()), p.ell());
}

double d_star(const MapParams& p, double x, double delta_star)
{
    const double dx = delta_of(p, x);
    return dx < delta_star ? dx : delta_star;
}

const char* to_string(ReturnKind k)
{
    switch (k) {
    case ReturnKind::landing:
        return "landing";
    case ReturnKind::theta_good:
        return "theta_good";
    case ReturnKind::tau_scale:
        return "tau_scale";
    }
    return "?";
}

bool ReturnEvent::satisfied() const
{
    switch (kind) {
    case ReturnKind::landing:
        return true;
    case ReturnKind::theta_good:
        return s >= 1 && param * df >= asum * nbhd_size;
    case ReturnKind::tau_scale:
        return s >= 1 && theta0 * df >= std::numbers::e * param * asum;
    }
    return false;
}

std::optional<std::size_t> landing_time(const PerturbedFamily& family, const OmegaStream& omega, double x,
                                        double delta, std::size_t horizon)
{
    if (horizon < 1)
        throw InvalidParams("landing_time needs horizon >= 1");
    const CriticalNbhd nb = tilde_B(family.base(), delta);
    if (nb.contains(x))
        return 0;
    OrbitCursor cur(family, x);
    for (std::size_t s = 1; s <= horizon; ++s) {
        cur.advance(omega[s - 1]);
        if (nb.contains(cur.x()))
            return s;
    }
    return std::nullopt;
}

std::optional<ReturnEvent> good_return_time(const PerturbedFamily& family, const OmegaStream& omega, double x,
                                            double delta, double theta, std::size_t horizon)
{
    const CriticalNbhd nb = tilde_B(family.base(), delta);
    const double size = nb.size();
    OrbitCursor cur(family, x);
    for (std::size_t s = 1; s <= horizon; ++s) {
        cur.advance(omega[s - 1]);
        if (nb.contains(cur.x()) && theta * cur.d1() >= cur.asum() * size) {
            ReturnEvent ev;
            ev.kind = ReturnKind::theta_good;
            ev.s = s;
            ev.delta = delta;
            ev.param = theta;
            ev.df = cur.d1();
            ev.asum = cur.asum();
            ev.nbhd_size = size;
            ev.point = cur.x();
            return ev;
        }
    }
    return std::nullopt;
}

std::vector<double> delta_grid(double delta, double delta_star, unsigned grid_refine)
{
    if (grid_refine == 0)
        throw InvalidParams("grid refinement must be positive");
    std::vector<double> g{delta};
    for (unsigned k = 1;; ++k) {
        const double d = delta * std::exp(static_cast<double>(k) / grid_refine);
        if (d > delta_star)
            break;
        g.push_back(d);
    }
    return g;
}

std::optional<ReturnEvent> hat_h(const PerturbedFamily& family, const OmegaStream& omega, double x,
                                 const HatHParams& p)
{
    const MapParams& base = family.base();
    const std::vector<double> grid = delta_grid(p.delta, p.delta_star, p.grid_refine);
    std::vector<CriticalNbhd> nbs;
    nbs.reserve(grid.size());
    for (double d : grid)
        nbs.push_back(tilde_B(base, d, p.delta_star));

    OrbitCursor cur(family, x);
    for (std::size_t s = 1; s <= p.horizon; ++s) {
        cur.advance(omega[s - 1]);
        const double y = cur.x();
        // smallest grid scale whose neighbourhood can contain y; larger scales only enlarge |B~|
        const double dy = delta_of(base, y);
        auto it = std::lower_bound(grid.begin(), grid.end(), dy);
        std::size_t k = static_cast<std::size_t>(it - grid.begin());
        if (k > 0)
            --k;
        for (; k < nbs.size(); ++k) {
            if (!nbs[k].contains(y))
                continue;
            if (p.theta * cur.d1() >= cur.asum() * nbs[k].size()) {
                ReturnEvent ev;
                ev.kind = ReturnKind::theta_good;
                ev.s = s;
                ev.delta = grid[k];
                ev.param = p.theta;
                ev.df = cur.d1();
                ev.asum = cur.asum();
                ev.nbhd_size = nbs[k].size();
                ev.point = y;
                return ev;
            }
            break;
        }
        if (p.theta0 * cur.d1() >= std::numbers::e * p.tau * cur.asum()) {
            ReturnEvent ev;
            ev.kind = ReturnKind::tau_scale;
            ev.s = s;
            ev.delta = p.delta;
            ev.param = p.tau;
            ev.theta0 = p.theta0;
            ev.df = cur.d1();
            ev.asum = cur.asum();
            ev.point = y;
            return ev;
        }
    }
    return std::nullopt;
}

int depth_of(double df, double dist, double eps)
{
    const double p = df * dist;
    if (p >= eps)
        return 0;
    int q = static_cast<int>(std::ceil(std::log(eps / p)));
    q = std::max(q, 1);
    while (p < std::exp(-static_cast<double>(q)) * eps)
        ++q;
    while (q > 0 && p >= std::exp(-static_cast<double>(q - 1)) * eps)
        --q;
    return q;
}

long long DepthTrace::Q(std::size_t n1, std::size_t n2) const
{
    if (n1 > n2 || n2 >= size())
        throw InvalidParams("depth range out of bounds");
    return q_prefix[n2 + 1] - q_prefix[n1];
}

long long DepthTrace::Gamma(std::size_t n1, std::size_t n2) const
{
    if (n1 > n2 || n2 >= size())
        throw InvalidParams("depth range out of bounds");
    return g_prefix[n2 + 1] - g_prefix[n1];
}

BadFlags DepthTrace::bad(double m, double kappa) const
{
    BadFlags f;
    f.clause1 = true;
    for (std::size_t s = 0; s < size(); ++s) {
        const double Qs = static_cast<double>(q_prefix[s + 1]);
        const double Gs = static_cast<double>(g_prefix[s + 1]);
        if (!(Qs > std::min(m, kappa * Gs))) {
            f.clause1 = false;
            break;
        }
    }
    f.clause2 = size() > 0 && static_cast<double>(q_prefix.back()) >= m;
    return f;
}

bool DepthTrace::bad_c(double m, double kappa) const { return size() > 0 && in_nbhd[0] && bad(m, kappa).bad(); }

DepthTrace depth_trace(const PerturbedFamily& family, const OmegaStream& omega, double x, double eps, std::size_t n)
{
    if (n < 1)
        throw InvalidParams("depth_trace needs n >= 1");
    const MapParams& base = family.base();
    const CriticalNbhd nb = tilde_B(base, eps);
    DepthTrace tr;
    tr.eps = eps;
    tr.x0 = x;
    tr.q.reserve(n);
    tr.q_prefix.assign(1, 0);
    tr.g_prefix.assign(1, 0);
    for (std::size_t j = 0; j < n; ++j) {
        const double d = std::abs(x - base.c());
        if (d < kCriticalGuard)
            throw CriticalHit(j);
        const double t = omega[j];
        const double df = family.derivatives(t, x).d1;
        const int q = depth_of(df, d, eps);
        const bool in = nb.contains(x);
        tr.q.push_back(q);
        tr.df.push_back(df);
        tr.dist.push_back(d);
        tr.in_nbhd.push_back(in ? 1 : 0);
        tr.q_prefix.push_back(tr.q_prefix.back() + q);
        tr.g_prefix.push_back(tr.g_prefix.back() + (in ? 1 : 0));
        x = family.value(t, x);
    }
    return tr;
}

void BindingConstants::validate(const MapParams& params, double W0) const
{
    if (!(L > std::pow(2.0, params.ell() + 1.0)))
        throw InvalidParams("binding constant L must exceed 2^(l+1)");
    if (!(zeta > 0.0 && zeta < 1.0 / params.ell()))
        throw InvalidParams("binding constant zeta must lie in (0, 1/l)");
    if (!(theta > 0.0 && theta < 1.0))
        throw InvalidParams("binding constant theta must lie in (0, 1)");
    if (4.0 * theta * W0 > theta1)
        throw InvalidParams("binding constant theta violates 4 theta W0 <= theta1");
}

namespace {

struct CriticalOrbit {
    std::vector<double> pts;
    std::vector<double> df;    // Df^j(v)
    std::vector<double> asum;  // A(v, f, j)
};

// Unperturbed orbit of a critical value with n + 1 points and derivatives up to Df^{n+1}.
CriticalOrbit critical_orbit(const MapParams& p, double v, std::size_t n)
{
    CriticalOrbit o;
    o.pts.reserve(n + 2);
    double x = v, d = 1.0, a = 0.0;
    for (std::size_t j = 0; j <= n + 1; ++j) {
        o.pts.push_back(x);
        o.df.push_back(d);
        o.asum.push_back(a);
        if (j == n + 1)
            break;
        const double dist = std::abs(x - p.c());
        if (dist < kCriticalGuard)
            throw CriticalHit(j);
        double d1, d2, d3;
        p.derivatives(x, d1, d2, d3);
        a += d / dist;
        d *= d1;
        x = p.value(x);
    }
    return o;
}

double value_of(const MapParams& p, Side side) { return side == Side::left ? p.c1_minus() : p.c1_plus(); }

} // namespace

double critical_sum_W0(const MapParams& params, std::size_t horizon)
{
    return std::max(summability_stats(params, Side::left, horizon).partial_sum,
                    summability_stats(params, Side::right, horizon).partial_sum);
}

BindingSearch binding_period(const MapParams& params, Side value_side, double delta, const BindingConstants& k,
                             std::size_t horizon)
{
    if (horizon < 1)
        throw InvalidParams("binding_period needs horizon >= 1");
    BindingSearch out;
    out.W0 = critical_sum_W0(params);
    k.validate(params, out.W0);
    const CriticalNbhd big = tilde_B(params, k.L * delta, k.delta_star);
    const double v = value_of(params, value_side);
    const CriticalOrbit o = critical_orbit(params, v, horizon);

    const double cap = k.theta / delta;
    std::size_t N = 0;
    while (N < horizon && o.asum[N + 1] <= cap)
        ++N;
    out.N = N;
    out.horizon_reached = N == horizon;

    std::size_t M2 = 0;
    while (M2 < horizon && !big.contains(o.pts[M2]))
        ++M2;
    out.M2 = M2;

    for (std::size_t M = std::min(N, M2); M >= 1; --M) {
        const double dp = std::max(d_star(params, o.pts[M], k.delta_star), delta);
        if (o.df[M + 1] >= std::pow(dp / delta, 1.0 - k.zeta)) {
            BindingPeriodRecord r;
            r.side = value_side;
            r.v = v;
            r.delta = delta;
            r.M = M;
            r.constants = k;
            r.A_M = o.asum[M];
            r.df_M1 = o.df[M + 1];
            r.delta_prime = dp;
            out.record = r;
            break;
        }
    }
    return out;
}

bool BindingPeriodRecord::verify(const MapParams& params) const
{
    if (M < 1)
        return false;
    const CriticalOrbit o = critical_orbit(params, v, M);
    if (!(o.asum[M] <= constants.theta / delta))
        return false;
    const CriticalNbhd big = tilde_B(params, constants.L * delta, constants.delta_star);
    for (std::size_t j = 0; j < M; ++j)
        if (big.contains(o.pts[j]))
            return false;
    const double dp = std::max(d_star(params, o.pts[M], constants.delta_star), delta);
    return o.df[M + 1] >= std::pow(dp / delta, 1.0 - constants.zeta);
}

Interval pullback_step(const PerturbedFamily& family, double t, Interval target, Side side, bool& at_c)
{
    const double c = family.base().c();
    at_c = false;
    if (side == Side::left) {
        const double top = family.left_sup(t);
        const double lo = std::max(target.lo, 0.0);
        const double hi = std::min(target.hi, top);
        if (!(hi > lo))
            return {};
        at_c = target.hi >= top;
        const double a = *family.inverse(t, lo, Side::left);
        const double b = at_c ? c : *family.inverse(t, hi, Side::left);
        return {a, b};
    }
    const double bottom = family.right_inf(t);
    const double lo = std::max(target.lo, bottom);
    const double hi = std::min(target.hi, 1.0);
    if (!(hi > lo))
        return {};
    at_c = target.lo <= bottom;
    const double a = at_c ? c : *family.inverse(t, lo, Side::right);
    const double b = *family.inverse(t, hi, Side::right);
    return {a, b};
}

PullbackChain pullback_component(const PerturbedFamily& family, std::span<const double> omega, Interval target,
                                 std::span<const Side> path)
{
    const std::size_t s = path.size();
    if (!omega.empty() && omega.size() < s)
        throw InvalidParams("noise sequence shorter than the branch path");
    PullbackChain ch;
    ch.G.assign(s + 1, Interval{});
    ch.path.assign(path.begin(), path.end());
    ch.touches_c.assign(s + 1, 0);
    ch.G[s] = target;
    for (std::size_t j = s; j-- > 0;) {
        const double t = omega.empty() ? 0.0 : omega[j];
        bool at_c = false;
        Interval g = pullback_step(family, t, ch.G[j + 1], path[j], at_c);
        if (g.empty())
            throw EmptyPullback(j);
        ch.G[j] = g;
        ch.touches_c[j] = at_c ? 1 : 0;
        if (at_c)
            ++ch.order;
    }
    return ch;
}

PullbackChain pullback_along_orbit(const PerturbedFamily& family, std::span<const double> omega, Interval target,
                                   double x, std::size_t s)
{
    if (!omega.empty() && omega.size() < s)
        throw InvalidParams("noise sequence shorter than the orbit segment");
    const MapParams& base = family.base();
    std::vector<Side> path(s);
    for (std::size_t j = 0; j < s; ++j) {
        if (std::abs(x - base.c()) < kCriticalGuard)
            throw CriticalHit(j);
        path[j] = base.side_of(x);
        x = family.value(omega.empty() ? 0.0 : omega[j], x);
    }
    return pullback_component(family, omega, target, path);
}

namespace {

double dist_to_cv(const MapParams& p, Interval w)
{
    double best = 1.0;
    for (double v : {p.c1_plus(), p.c1_minus()}) {
        double d = 0.0;
        if (v < w.lo)
            d = w.lo - v;
        else if (v > w.hi)
            d = v - w.hi;
        best = std::min(best, d);
    }
    return best;
}

} // namespace

BCReport backward_contraction_check(const MapParams& params, double r, std::span<const double> deltas,
                                    std::size_t s_max, const BCOptions& opts)
{
    BCReport rep;
    rep.r = r;
    rep.deltas.assign(deltas.begin(), deltas.end());
    rep.s_max = s_max;
    const PerturbedFamily family(params);
    const double limit = std::min({params.u() - (1.0 - params.v()), params.u(), params.v()});

    std::set<std::tuple<std::size_t, std::size_t, long long, long long>> seen;
    std::size_t active = 0;
    for (std::size_t di = 0; di < deltas.size(); ++di) {
        const double delta = deltas[di];
        if (!(r * delta < limit))
            continue;
        ++active;
        const CriticalNbhd target = tilde_B(params, r * delta);
        AuxRng rng(opts.seed, 0x4243000ULL + di);
        for (std::size_t k = 0; k < opts.samples; ++k) {
            double x;
            if (k % 2 == 0) {
                x = rng.uniform();
            } else {
                const double v = (k % 4 == 1) ? params.c1_plus() : params.c1_minus();
                x = std::clamp(v + delta * (2.0 * rng.uniform() - 1.0), 0.0, 1.0);
            }
            double y = x;
            for (std::size_t j = 1; j <= s_max; ++j) {
                if (std::abs(y - params.c()) < kCriticalGuard)
                    break;
                y = params.value(y);
                if (!target.contains(y))
                    continue;
                PullbackChain ch;
                try {
                    ch = pullback_along_orbit(family, {}, target.interval(), x, j);
                } catch (const Error&) {
                    break;
                }
                for (std::size_t i = 0; i < j; ++i) {
                    const Interval W = ch.G[i];
                    const std::size_t s = j - i;
                    auto key = std::make_tuple(di, s, std::llround(W.lo * 1e12), std::llround(W.hi * 1e12));
                    if (!seen.insert(key).second)
                        continue;
                    ++rep.components;
                    const double dcv = dist_to_cv(params, W);
                    if (dcv < delta) {
                        ++rep.near_cv;
                        rep.max_ratio = std::max(rep.max_ratio, W.length() / delta);
                        if (W.length() >= delta)
                            rep.violations.push_back({delta, s, W, dcv});
                    }
                }
            }
        }
    }
    rep.vacuous = active == 0;
    return rep;
}

} // namespace lorenz
