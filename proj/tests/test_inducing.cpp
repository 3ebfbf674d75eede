#include "doctest.h"

#include "lorenz/inducing.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace lorenz;

namespace {

const MapParams canon = MapParams::canonical();
const PerturbedFamily fam(canon);

bool in_nbhd_oracle(double x, double delta)
{
    if (x == canon.c())
        return true;
    const double y = eval(canon, x);
    return x < canon.c() ? canon.c1_minus() - y < delta : y - canon.c1_plus() < delta;
}

std::optional<std::size_t> first_entry(double y, const std::vector<double>& om, double delta, std::size_t n)
{
    for (std::size_t i = 0; i <= n; ++i) {
        if (in_nbhd_oracle(y, delta))
            return i;
        if (i < n)
            y = fam.value(om[i], y);
    }
    return std::nullopt;
}

double dist_to_edge(double y, double delta)
{
    auto nb = tilde_B(canon, delta);
    return std::min(std::abs(y - nb.lo()), std::abs(y - nb.hi()));
}

} // namespace

TEST_CASE("nice set at depth zero is B~(delta)")
{
    NoiseModel nm{.eps = 0.001, .seed = 21};
    OmegaStream om(nm, 0);
    auto V = nice_set_at(fam, om, 0.002, 0);
    auto nb = tilde_B(canon, 0.002);
    CHECK(V.V.lo == nb.lo());
    CHECK(V.V.hi == nb.hi());
    CHECK(V.contained());
}

TEST_CASE("nice sets grow with depth and stay between B~(delta) and B~(2 delta)")
{
    NoiseModel nm{.eps = 0.001, .seed = 22};
    for (std::uint64_t sid = 0; sid < 4; ++sid) {
        OmegaStream om(nm, sid);
        Interval prev = tilde_B(canon, 0.002).interval();
        for (std::size_t d = 0; d <= 150; d += 5) {
            auto V = nice_set_at(fam, om, 0.002, d);
            CHECK(V.contained());
            CHECK(V.V.lo <= prev.lo);
            CHECK(V.V.hi >= prev.hi);
            prev = V.V;
        }
    }
}

TEST_CASE("nice set points enter B~ within the depth and the ends sit on pullback boundaries")
{
    NoiseModel nm{.eps = 0.001, .seed = 23};
    std::mt19937_64 gen(1);
    const std::size_t n = 60;
    for (std::uint64_t sid = 0; sid < 5; ++sid) {
        OmegaStream om(nm, sid);
        auto pre = om.prefix(n);
        auto V = nice_set_at(fam, om, 0.002, n);
        std::uniform_real_distribution<double> u(V.V.lo, V.V.hi);
        for (int k = 0; k < 200; ++k) {
            const double y = u(gen);
            if (y == canon.c())
                continue;
            CHECK(first_entry(y, pre, 0.002, n).has_value());
        }
        for (double a : {V.V.lo, V.V.hi}) {
            double y = a, best = 1.0;
            for (std::size_t i = 0; i <= n; ++i) {
                best = std::min(best, dist_to_edge(y, 0.002));
                if (i < n && std::abs(y - canon.c()) > 1e-14)
                    y = fam.value(pre[i], y);
            }
            CHECK(best <= 1e-8);
        }
    }
}

TEST_CASE("high-precision nice set build is nice")
{
    NoiseModel nm{.eps = 0.001, .seed = 24};
    NiceSetOptions opts{.depth = 400, .verify_horizon = 300, .precision_bits = 512};
    for (std::uint64_t sid = 0; sid < 3; ++sid) {
        OmegaStream om(nm, sid);
        auto V = nice_set_build(fam, om, 0.002, opts);
        CHECK(V.contained());
        CHECK(V.verify_horizon == 300);
        auto Vd = nice_set_at(fam, om, 0.002, 400);
        CHECK(std::abs(V.V.lo - Vd.V.lo) < 1e-12);
        CHECK(std::abs(V.V.hi - Vd.V.hi) < 1e-12);
    }
    CHECK_THROWS_AS(nice_set_build(fam, OmegaStream(nm, 0), 0.002, {.depth = 10, .verify_horizon = 20}),
                    InvalidParams);
}

TEST_CASE("nice set cache matches direct construction")
{
    NoiseModel nm{.eps = 0.001, .seed = 25};
    OmegaStream om(nm, 3);
    NiceSetCache cache(fam, om, 0.002, 80);
    for (std::size_t k : {0ul, 1ul, 7ul, 40ul}) {
        auto V = nice_set_at(fam, om, 0.002, 80, k);
        CHECK(cache.at(k).lo == V.V.lo);
        CHECK(cache.at(k).hi == V.V.hi);
    }
}

TEST_CASE("markov inducing times carry a passing report")
{
    NoiseModel nm{.eps = 0.001, .seed = 26};
    std::mt19937_64 gen(2);
    int found = 0;
    for (std::uint64_t sid = 0; sid < 10; ++sid) {
        OmegaStream om(nm, sid);
        NiceSetCache sets(fam, om, 0.002, 80);
        const Interval V0 = sets.at(0);
        auto pre = om.prefix(400);
        std::uniform_real_distribution<double> u(V0.lo, V0.hi);
        for (int k = 0; k < 5; ++k) {
            const double x = u(gen);
            auto rep = markov_inducing_time(fam, sets, x, {});
            if (!rep)
                continue;
            ++found;
            CHECK(rep->J.lo < x);
            CHECK(rep->J.hi > x);
            CHECK(rep->nonlinearity <= 1.0);
            CHECK(rep->min_df >= rep->floor);
            CHECK(rep->floor == doctest::Approx(std::exp(2.0) * rep->target.length() / V0.length()));
            CHECK(rep->target.lo == sets.at(rep->m).lo);
            CHECK(std::abs(rep->nonlinearity_fine - rep->nonlinearity) <= 0.1 * rep->nonlinearity);

            // J maps onto the target, on a single branch at every step
            auto img = [&](double y) {
                for (std::size_t j = 0; j < rep->m; ++j)
                    y = fam.value(pre[j], y);
                return y;
            };

            // independent sup |D2/D1| |J| on an offset grid
            double worst = 0.0, min_df = 1e300, max_df = 0.0;
            for (int i = 0; i < 301; ++i) {
                double y = rep->J.lo + rep->J.length() * (i + 0.5) / 301.0;
                double d1 = 1.0, d2 = 0.0;
                for (std::size_t j = 0; j < rep->m; ++j) {
                    auto d = fam.derivatives(pre[j], y);
                    d2 = d.d2 * d1 * d1 + d.d1 * d2;
                    d1 *= d.d1;
                    y = fam.value(pre[j], y);
                }
                worst = std::max(worst, std::abs(d2 / d1));
                min_df = std::min(min_df, d1);
                max_df = std::max(max_df, d1);
            }
            // pullback endpoints are accurate to about 1e-13, pushed forward by Df^m
            const double tol = 1e-12 * max_df + 1e-12;
            CHECK(std::abs(img(rep->J.lo) - rep->target.lo) <= tol);
            CHECK(std::abs(img(rep->J.hi) - rep->target.hi) <= tol);
            CHECK(worst * rep->J.length() <= 1.1 * rep->nonlinearity + 1e-12);
            CHECK(min_df >= rep->min_df * (1 - 1e-9));
        }
    }
    CHECK(found >= 40);
}

TEST_CASE("inducing times do not exceed good returns under the theta cap")
{
    NoiseModel nm{.eps = 0.001, .seed = 27};
    TailOptions opts{.ensemble = 300, .members_per_omega = 30, .nice_depth = 80, .delta0 = 0.002, .theta = 0.0017};
    auto ts = inducing_tail_stats(fam, nm, opts);
    // under the cap no good return occurs at this scale, so the inequality is vacuous
    CHECK(ts.h_violations == 0);
    CHECK(ts.h_missing == ts.ensemble);
    CHECK(std::isnan(ts.h_moment));
}

TEST_CASE("tail statistics")
{
    NoiseModel nm{.eps = 0.001, .seed = 28};
    TailOptions opts{.ensemble = 1000, .members_per_omega = 50, .nice_depth = 80, .delta0 = 0.002, .theta = 1.0};
    auto ts = inducing_tail_stats(fam, nm, opts);
    REQUIRE(!ts.survival.empty());
    CHECK(ts.survival.front() <= 1.0);
    for (std::size_t i = 1; i < ts.survival.size(); ++i) {
        CHECK(ts.survival[i] <= ts.survival[i - 1]);
        CHECK(ts.m_values[i] > ts.m_values[i - 1]);
    }
    CHECK(ts.censored_fraction() >= 0.0);
    CHECK(ts.censored_fraction() <= 1.0);
    CHECK(ts.fit_points >= 2);
    CHECK(ts.fit_hi < ts.horizon);
    CHECK(ts.fit_slope < 0.0);

    // h moment under doubling of the ensemble
    opts.ensemble = 2000;
    auto ts2 = inducing_tail_stats(fam, nm, opts);
    REQUIRE(std::isfinite(ts.h_moment));
    REQUIRE(std::isfinite(ts2.h_moment));
    CHECK(std::abs(ts2.h_moment - ts.h_moment) <= 0.2 * ts2.h_moment);
    MESSAGE("theta=1: m_V > h for " << ts2.h_violations << " of " << ts2.ensemble << " members");
}

TEST_CASE("survival function by hand")
{
    std::vector<std::size_t> sup;
    std::vector<double> S;
    survival_function({3, 1, 3, 7}, 1, sup, S);
    REQUIRE(sup == std::vector<std::size_t>{1, 3, 7});
    CHECK(S[0] == doctest::Approx(0.8));
    CHECK(S[1] == doctest::Approx(0.4));
    CHECK(S[2] == doctest::Approx(0.2));
}

TEST_CASE("distortion window around a point is small")
{
    NoiseModel nm{.eps = 0.01, .seed = 29};
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> un(1, 30);
    int done = 0;
    for (int k = 0; done < 100; ++k) {
        const double x = ux(gen);
        const std::size_t n = un(gen);
        auto om = sample_omega(nm, 700 + k, n);
        WindowSample w;
        try {
            w = window_check(fam, om, x, n, 0.01);
        } catch (const CriticalHit&) {
            continue;
        }
        ++done;
        CHECK(w.J.lo <= x);
        CHECK(w.J.hi >= x);
        CHECK(w.diffeomorphic);
        CHECK(w.nonlinearity <= 0.6);
    }
}

TEST_CASE("branch distortion of the identity composition")
{
    std::vector<double> none;
    auto d = branch_distortion(fam, none, Interval{0.2, 0.3}, 0);
    CHECK(d.nonlinearity == 0.0);
    CHECK(d.min_df == 1.0);
    CHECK(d.max_df == 1.0);
    CHECK_FALSE(d.hit_critical);

    std::vector<double> zero{0.0};
    auto across = branch_distortion(fam, zero, Interval{0.4, 0.6}, 1);
    CHECK(across.hit_critical);
}
