#include "lorenz/expansion.hpp"

#include "lorenz/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lorenz {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_decreasing(std::span<const double> ladder)
{
    if (ladder.empty())
        throw InvalidParams("eps ladder is empty");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (!(ladder[i] < ladder[i - 1]))
            throw InvalidParams("eps ladder must be strictly decreasing");
}

double median_of(std::vector<double> v)
{
    if (v.empty())
        return kNaN;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}

double percentile(std::vector<double> v, double q)
{
    if (v.empty())
        return kNaN;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(std::floor(pos));
    const std::size_t j = std::min(i + 1, v.size() - 1);
    return v[i] + (pos - static_cast<double>(i)) * (v[j] - v[i]);
}

// x uniform on [0,1] outside the open interval U and away from c.
double uniform_outside(AuxRng& rng, Interval U, double c)
{
    for (;;) {
        const double x = rng.uniform();
        if (!U.contains(x) && x != c && x > 0.0)
            return x;
    }
}

EnvelopeFit fit_envelope(std::vector<double> s, std::vector<double> y, double anchor)
{
    EnvelopeFit e;
    e.anchor = anchor;
    if (!s.empty()) {
        e.fit = lower_envelope(s, y, anchor);
        for (std::size_t i = 0; i < s.size(); ++i)
            if (y[i] < e.fit(s[i]))
                ++e.violations;
    }
    e.s = std::move(s);
    e.log_df = std::move(y);
    return e;
}

} // namespace

LinearBound lower_envelope(std::span<const double> s, std::span<const double> y, double anchor)
{
    if (s.empty() || s.size() != y.size())
        throw InvalidParams("lower_envelope needs matching nonempty samples");
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return s[a] < s[b] || (s[a] == s[b] && y[a] < y[b]);
    });
    struct P {
        double s, y;
    };
    std::vector<P> hull;
    for (std::size_t k : idx) {
        const P p{s[k], y[k]};
        if (!hull.empty() && hull.back().s == p.s)
            continue;  // same abscissa, larger y
        while (hull.size() >= 2) {
            const P& a = hull[hull.size() - 2];
            const P& b = hull.back();
            // drop b unless it lies strictly below the chord a-p
            if ((b.y - a.y) * (p.s - a.s) >= (p.y - a.y) * (b.s - a.s))
                hull.pop_back();
            else
                break;
        }
        hull.push_back(p);
    }
    LinearBound lb;
    if (hull.size() == 1) {
        lb.intercept = hull[0].y;
        lb.slope = 0.0;
    } else {
        std::size_t i = 0;
        while (i + 2 < hull.size() && hull[i + 1].s < anchor)
            ++i;
        lb.slope = (hull[i + 1].y - hull[i].y) / (hull[i + 1].s - hull[i].s);
        lb.intercept = hull[i].y - lb.slope * hull[i].s;
    }
    // absorb rounding so that the bound holds exactly on the samples
    double deficit = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k)
        deficit = std::max(deficit, lb(s[k]) - y[k]);
    lb.intercept -= deficit;
    while (true) {
        bool ok = true;
        for (std::size_t k = 0; k < s.size() && ok; ++k)
            ok = lb(s[k]) <= y[k];
        if (ok)
            break;
        lb.intercept = std::nextafter(lb.intercept, -std::numeric_limits<double>::infinity());
    }
    return lb;
}

ManeReport mane_estimate(const PerturbedFamily& family, const NoiseModel* model, Interval U, const ManeOptions& opts)
{
    const MapParams& p = family.base();
    if (!U.contains(p.c()))
        throw InvalidParams("Mane neighbourhood must contain c");
    if (!(opts.C_ref > 0.0))
        throw InvalidParams("C_ref must be positive");
    const bool random = model != nullptr && model->eps > 0.0;
    if (random)
        model->validate(family);

    struct Orbit {
        std::vector<double> n, log_df;
    };
    std::vector<Orbit> orbits(opts.ensemble);
    parallel_for(opts.ensemble, [&](std::size_t i) {
        const std::uint64_t sid = opts.stream_base + i;
        AuxRng rng(opts.seed, sid);
        // starting points do not depend on U, so sample sets are nested for nested U
        const double x = rng.uniform();
        if (U.contains(x) || x == p.c() || x == 0.0)
            return;
        std::vector<double> om = random ? sample_omega(*model, sid, opts.horizon) : std::vector<double>(opts.horizon, 0.0);
        OrbitCursor cur(family, x);
        Orbit& o = orbits[i];
        try {
            for (std::size_t n = 1; n <= opts.horizon; ++n) {
                cur.advance(om[n - 1]);
                o.n.push_back(static_cast<double>(n));
                o.log_df.push_back(std::log(cur.d1()));
                if (U.contains(cur.x()))
                    break;
            }
        } catch (const CriticalHit&) {
        }
    });

    ManeReport rep;
    rep.U = U;
    rep.random = random;
    rep.C_ref = opts.C_ref;
    for (const auto& o : orbits)
        rep.orbits += o.n.empty() ? 0 : 1;
    const double logC = std::log(opts.C_ref);
    double eta = std::numeric_limits<double>::infinity();
    for (const Orbit& o : orbits) {
        rep.samples += o.n.size();
        for (std::size_t k = 0; k < o.n.size(); ++k) {
            const double r = (o.log_df[k] - logC) / o.n[k];
            if (r < eta) {
                eta = r;
                rep.worst_n = static_cast<std::size_t>(o.n[k]);
                rep.worst_df = std::exp(o.log_df[k]);
            }
        }
    }
    if (rep.samples == 0)
        eta = kNaN;
    rep.eta = eta;
    rep.lambda = std::exp(eta);
    rep.orbit_minima.reserve(orbits.size());
    for (const Orbit& o : orbits) {
        if (o.n.empty())
            continue;
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < o.n.size(); ++k)
            m = std::min(m, o.log_df[k] - logC - eta * o.n[k]);
        rep.orbit_minima.push_back(std::exp(m));
    }
    return rep;
}

GrowthReport growth_envelopes(const PerturbedFamily& family, const NoiseModel& model, std::span<const double> ladder,
                               const GrowthOptions& opts)
{
    require_decreasing(ladder);
    const MapParams& p = family.base();
    GrowthReport rep;
    for (std::size_t r = 0; r < ladder.size(); ++r) {
        const double eps = ladder[r];
        NoiseModel m = model;
        m.eps = eps;
        m.validate(family);
        const CriticalNbhd nb1 = tilde_B(p, eps);
        const CriticalNbhd nb2 = tilde_B(p, 2.0 * eps);

        std::vector<double> s1(opts.ensemble, kNaN), y1(opts.ensemble, kNaN);
        std::vector<std::vector<double>> y2(opts.ensemble);
        parallel_for(opts.ensemble, [&](std::size_t i) {
            const std::uint64_t sid = opts.stream_base + (static_cast<std::uint64_t>(r) << 32) + i;
            OmegaStream om(m, sid);
            AuxRng rng(m.seed, sid);
            try {
                const double v = i % 2 == 0 ? p.c1_minus() : p.c1_plus();
                double x = std::clamp(v + 4.0 * eps * (2.0 * rng.uniform() - 1.0), 1e-12, 1.0 - 1e-12);
                if (x != p.c()) {
                    OrbitCursor cur(family, x);
                    for (std::size_t s = 1; s <= opts.horizon; ++s) {
                        cur.advance(om[s - 1]);
                        if (nb2.contains(cur.x())) {
                            s1[i] = static_cast<double>(s);
                            y1[i] = std::log(cur.d1());
                            break;
                        }
                    }
                }
            } catch (const CriticalHit&) {
            }
            try {
                const double x = uniform_outside(rng, nb1.interval(), p.c());
                OrbitCursor cur(family, x);
                OmegaStream om2 = om.shift(opts.horizon);
                for (std::size_t s = 1; s <= opts.horizon; ++s) {
                    cur.advance(om2[s - 1]);
                    y2[i].push_back(std::log(cur.d1()));
                    if (nb1.contains(cur.x()))
                        break;
                }
            } catch (const CriticalHit&) {
            }
        });

        GrowthRung g;
        g.eps = eps;
        g.D = nb1.D();

        std::vector<double> s_near, y_near;
        for (std::size_t i = 0; i < opts.ensemble; ++i)
            if (std::isfinite(s1[i])) {
                s_near.push_back(s1[i]);
                y_near.push_back(y1[i]);
            }
        const double anchor1 = median_of(s_near);
        g.near_cv = fit_envelope(s_near, y_near, anchor1);

        // only the per-s minima matter for a lower envelope
        std::vector<double> min_y(opts.horizon + 1, std::numeric_limits<double>::infinity());
        std::vector<double> all_s;
        for (const auto& row : y2)
            for (std::size_t k = 0; k < row.size(); ++k) {
                min_y[k + 1] = std::min(min_y[k + 1], row[k]);
                all_s.push_back(static_cast<double>(k + 1));
            }
        std::vector<double> s_av, y_av;
        for (std::size_t s = 1; s <= opts.horizon; ++s)
            if (std::isfinite(min_y[s])) {
                s_av.push_back(static_cast<double>(s));
                y_av.push_back(min_y[s]);
            }
        g.avoiding = fit_envelope(s_av, y_av, median_of(all_s));

        g.Lambda_hat = s_near.empty() ? kNaN : std::exp(g.near_cv.fit.intercept) * g.D;
        auto alpha_of = [&](double slope) { return slope > 0.0 ? std::log(slope) / std::log(eps) : kNaN; };
        g.alpha_hat = s_near.empty() ? kNaN : alpha_of(g.near_cv.fit.slope);
        g.A_hat = s_av.empty() ? kNaN : std::exp(g.avoiding.fit.intercept) / std::pow(eps, 1.0 - 1.0 / p.ell());

        std::vector<double> boot;
        if (!s_near.empty()) {
            AuxRng rng(model.seed, opts.stream_base + 0xB007 + r);
            std::vector<double> bs(s_near.size()), by(s_near.size());
            for (std::size_t b = 0; b < opts.bootstrap; ++b) {
                for (std::size_t k = 0; k < s_near.size(); ++k) {
                    const std::size_t j = static_cast<std::size_t>(rng.next() % s_near.size());
                    bs[k] = s_near[j];
                    by[k] = y_near[j];
                }
                const double a = alpha_of(lower_envelope(bs, by, median_of(bs)).slope);
                if (std::isfinite(a))
                    boot.push_back(a);
            }
        }
        g.alpha_lo = percentile(boot, 0.025);
        g.alpha_hi = percentile(boot, 0.975);
        rep.rungs.push_back(std::move(g));
    }

    rep.Lambda_increasing = true;
    double amin = std::numeric_limits<double>::infinity(), amax = 0.0;
    for (std::size_t r = 0; r < rep.rungs.size(); ++r) {
        if (r > 0 && !(rep.rungs[r].Lambda_hat >= rep.rungs[r - 1].Lambda_hat))
            rep.Lambda_increasing = false;
        amin = std::min(amin, rep.rungs[r].A_hat);
        amax = std::max(amax, rep.rungs[r].A_hat);
    }
    rep.A_spread = amax / amin;
    return rep;
}

KoebeResult koebe_check(const MapParams& params, const PullbackChain& chain, Interval image, double tau,
                        std::size_t grid)
{
    if (chain.order > 0)
        throw NotDiffeomorphic();
    if (!(tau > 0.0))
        throw InvalidParams("tau must be positive");
    KoebeResult res;
    res.tau = tau;
    res.s = chain.s();
    res.T = chain.G.front();
    const Interval target = chain.G.back();
    res.bound = std::pow((1.0 + tau) / tau, 2.0);
    res.tau_prime = tau * tau / (1.0 + 2.0 * tau);

    const double margin = std::min(image.lo - target.lo, target.hi - image.hi);
    res.applicable = !image.empty() && margin >= tau * image.length();
    if (!res.applicable)
        return res;

    const PerturbedFamily family(params);
    res.J = pullback_component(family, {}, image, chain.path).G.front();
    const std::size_t s = res.s;
    auto df_at = [&](double x) {
        OrbitCursor cur(family, x);
        for (std::size_t j = 0; j < s; ++j)
            cur.advance(0.0);
        return cur.d1();
    };
    auto ratio_on = [&](Interval I, std::size_t pts) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t i = 0; i < pts; ++i) {
            const double x = I.lo + I.length() * static_cast<double>(i) / static_cast<double>(pts - 1);
            const double d = df_at(x);
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        return hi / lo;
    };
    const std::size_t pts = std::max<std::size_t>(grid, 2);
    res.ratio = ratio_on(res.J, pts);
    res.ratio_fine = ratio_on(res.J, 2 * pts - 1);
    res.pass = res.ratio <= res.bound && res.ratio_fine <= res.bound;

    res.macro_margin = std::min(res.J.lo - res.T.lo, res.T.hi - res.J.hi) / res.J.length();
    res.macro_pass = res.macro_margin >= res.tau_prime * (1.0 - 1e-9);

    // one-sided bound against either endpoint of T
    const double k = std::pow(tau / (1.0 + tau), 2.0);
    const double dfa = df_at(res.T.lo);
    const double dfb = df_at(res.T.hi);
    res.one_sided_worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts; ++i) {
        const double x = res.T.lo + res.T.length() * (static_cast<double>(i) + 0.5) / static_cast<double>(pts);
        OrbitCursor cur(family, x);
        for (std::size_t j = 0; j < s; ++j)
            cur.advance(0.0);
        const double Fx = cur.x();
        if (std::abs(target.lo - Fx) >= tau * std::abs(Fx - target.hi)) {
            ++res.one_sided_points;
            res.one_sided_worst = std::min(res.one_sided_worst, cur.d1() / (k * dfb));
        }
        if (std::abs(target.hi - Fx) >= tau * std::abs(Fx - target.lo)) {
            ++res.one_sided_points;
            res.one_sided_worst = std::min(res.one_sided_worst, cur.d1() / (k * dfa));
        }
    }
    if (res.one_sided_points == 0)
        res.one_sided_worst = kNaN;
    res.one_sided_pass = res.one_sided_points == 0 || res.one_sided_worst >= 1.0;
    return res;
}

KoebeSummary koebe_random_branches(const MapParams& params, std::size_t count, std::size_t s_max, double tau,
                                   std::uint64_t seed, std::size_t grid)
{
    if (s_max < 1)
        throw InvalidParams("koebe_random_branches needs s_max >= 1");
    const PerturbedFamily family(params);
    KoebeSummary sum;
    sum.requested = count;
    AuxRng rng(seed, 0x4b4f454245ULL);
    while (sum.checked < count && sum.attempts < 100 * count) {
        ++sum.attempts;
        const double x = rng.uniform();
        const std::size_t s = 1 + static_cast<std::size_t>(rng.next() % s_max);
        const double r0 = rng.uniform(1e-4, 0.05);
        double y = x;
        try {
            OrbitCursor cur(family, x);
            for (std::size_t j = 0; j < s; ++j)
                cur.advance(0.0);
            y = cur.x();
        } catch (const CriticalHit&) {
            continue;
        }
        const double r = std::min({r0, 0.999 * y, 0.999 * (1.0 - y)});
        if (!(r > 0.0))
            continue;
        PullbackChain ch;
        try {
            ch = pullback_along_orbit(family, {}, Interval{y - r, y + r}, x, s);
        } catch (const Error&) {
            continue;
        }
        if (ch.order > 0)
            continue;
        const double half = r / (1.0 + 2.0 * tau) * (1.0 - 1e-9);
        KoebeResult kr = koebe_check(params, ch, Interval{y - half, y + half}, tau, grid);
        if (!kr.applicable)
            continue;
        ++sum.checked;
        if (!kr.pass || !kr.macro_pass || !kr.one_sided_pass)
            ++sum.violations;
        sum.worst_ratio_over_bound = std::max(sum.worst_ratio_over_bound, std::max(kr.ratio, kr.ratio_fine) / kr.bound);
        sum.results.push_back(kr);
    }
    return sum;
}

std::optional<LandingDistortion> landing_distortion(const PerturbedFamily& family, const OmegaStream& omega, double x,
                                                    double eps, std::size_t horizon)
{
    const CriticalNbhd nb = tilde_B(family.base(), eps);
    OrbitCursor cur(family, x);
    for (std::size_t n = 1; n <= horizon; ++n) {
        cur.advance(omega[n - 1]);
        if (nb.contains(cur.x()))
            return LandingDistortion{n, cur.asum() * nb.size() / cur.d1()};
    }
    return std::nullopt;
}

DistortionTrend total_distortion_trend(const PerturbedFamily& family, const NoiseModel& model,
                                       std::span<const double> ladder, const DistortionOptions& opts)
{
    require_decreasing(ladder);
    const MapParams& p = family.base();
    DistortionTrend out;
    for (std::size_t r = 0; r < ladder.size(); ++r) {
        const double eps = ladder[r];
        NoiseModel m = model;
        m.eps = eps;
        m.validate(family);
        const CriticalNbhd nb = tilde_B(p, eps);
        std::vector<double> ratio(opts.ensemble, kNaN);
        std::vector<std::size_t> when(opts.ensemble, 0);
        parallel_for(opts.ensemble, [&](std::size_t i) {
            const std::uint64_t sid = opts.stream_base + (static_cast<std::uint64_t>(r) << 32) + i;
            OmegaStream om(m, sid);
            AuxRng rng(m.seed, sid);
            const double x = uniform_outside(rng, nb.interval(), p.c());
            try {
                if (auto l = landing_distortion(family, om, x, eps, opts.horizon)) {
                    ratio[i] = l->ratio;
                    when[i] = l->n;
                }
            } catch (const CriticalHit&) {
            }
        });
        DistortionRung g;
        g.eps = eps;
        double total = 0.0;
        for (std::size_t i = 0; i < opts.ensemble; ++i) {
            if (!std::isfinite(ratio[i]))
                continue;
            ++g.samples;
            total += ratio[i];
            if (ratio[i] > g.theta_hat) {
                g.theta_hat = ratio[i];
                g.n_at_max = when[i];
            }
        }
        g.mean_ratio = g.samples ? total / static_cast<double>(g.samples) : kNaN;
        out.rungs.push_back(g);
    }
    out.nonincreasing = true;
    for (std::size_t r = 1; r < out.rungs.size(); ++r)
        if (out.rungs[r].theta_hat > 1.2 * out.rungs[r - 1].theta_hat)
            out.nonincreasing = false;
    return out;
}

} // namespace lorenz
