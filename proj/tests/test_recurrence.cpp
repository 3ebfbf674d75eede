#include "doctest.h"

#include "lorenz/recurrence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace lorenz;

namespace {

const MapParams canon = MapParams::canonical();
const PerturbedFamily fam(canon);

// Membership in B~(delta) through the image: |f(x) - CV| < delta on x's side.
bool in_nbhd_oracle(const MapParams& p, double x, double delta)
{
    if (x == p.c())
        return true;
    const double y = eval(p, x);
    return x < p.c() ? p.c1_minus() - y < delta : y - p.c1_plus() < delta;
}

// Radius of B~(delta) on one side by bisection on the image condition.
double radius_by_bisection(const MapParams& p, double delta, Side side)
{
    double in = 0.0;
    double out = side == Side::left ? p.c() : 1.0 - p.c();
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (in + out);
        const double x = side == Side::left ? p.c() - mid : p.c() + mid;
        (in_nbhd_oracle(p, x, delta) ? in : out) = mid;
    }
    return in;
}

double nbhd_size_oracle(const MapParams& p, double delta)
{
    return radius_by_bisection(p, delta, Side::left) + radius_by_bisection(p, delta, Side::right);
}

struct Scan {
    std::vector<double> pts, df, asum;
};

// Plain loop over the orbit, independent of OrbitCursor.
Scan scan_orbit(const PerturbedFamily& f, const std::vector<double>& om, double x, std::size_t n)
{
    Scan s;
    double d = 1.0, a = 0.0;
    s.pts.push_back(x);
    s.df.push_back(d);
    s.asum.push_back(a);
    for (std::size_t i = 0; i < n; ++i) {
        a += d / std::abs(x - f.base().c());
        d *= f.derivatives(om[i], x).d1;
        x = f.value(om[i], x);
        s.pts.push_back(x);
        s.df.push_back(d);
        s.asum.push_back(a);
    }
    return s;
}

std::optional<std::size_t> brute_h(const Scan& sc, double delta, double theta)
{
    const double size = nbhd_size_oracle(canon, delta);
    for (std::size_t s = 1; s < sc.pts.size(); ++s)
        if (in_nbhd_oracle(canon, sc.pts[s], delta) && theta * sc.df[s] >= sc.asum[s] * size)
            return s;
    return std::nullopt;
}

} // namespace

TEST_CASE("critical neighbourhood of the canonical map")
{
    auto nb = tilde_B(canon, 0.009);
    CHECK(nb.left_radius == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(nb.right_radius == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(nb.size() == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(nb.D() == doctest::Approx(0.09).epsilon(1e-12));
    CHECK(nb.contains(0.46));
    CHECK_FALSE(nb.contains(0.44));
    CHECK(tilde_B(canon, 1e-12).size() < 1e-5);
    CHECK_THROWS_AS(tilde_B(canon, 0.0), DeltaOutOfRange);
    CHECK_THROWS_AS(tilde_B(canon, 0.8), DeltaOutOfRange);
}

TEST_CASE("closed-form radii agree with a root find and grow with delta")
{
    for (const MapParams& p : {canon, MapParams(0.4, 3.0, 0.8, 0.7), MapParams(0.55, 1.5, 0.85, 0.6)}) {
        double prev = 0.0;
        for (double delta : {1e-4, 1e-3, 0.005, 0.02, 0.05, 0.1}) {
            auto nb = tilde_B(p, delta);
            CHECK(std::abs(nb.left_radius - radius_by_bisection(p, delta, Side::left)) <= 1e-10);
            CHECK(std::abs(nb.right_radius - radius_by_bisection(p, delta, Side::right)) <= 1e-10);
            CHECK(nb.size() > prev);
            prev = nb.size();
        }
    }
}

TEST_CASE("delta_of and d_star")
{
    CHECK(delta_of(canon, 0.45) == doctest::Approx(0.009));
    CHECK(delta_of(canon, 0.55) == doctest::Approx(0.009));
    CHECK(d_star(canon, 0.45) == doctest::Approx(0.009));
    CHECK(d_star(canon, 0.1) == kDefaultDeltaStar);
}

TEST_CASE("landing time")
{
    NoiseModel nm{.eps = 0.0};
    OmegaStream zero(nm, 0);
    CHECK(landing_time(fam, zero, 0.47, 0.009, 10) == std::size_t{0});

    std::vector<double> om(200, 0.0);
    auto sc = scan_orbit(fam, om, 0.25, 200);
    std::optional<std::size_t> want;
    for (std::size_t s = 0; s <= 200 && !want; ++s)
        if (sc.pts[s] > 0.45 && sc.pts[s] < 0.55)
            want = s;
    CHECK(landing_time(fam, zero, 0.25, 0.009, 200) == want);

    CHECK_FALSE(landing_time(fam, zero, 0.25, 1e-9, 3).has_value());
}

TEST_CASE("good return time agrees with a brute-force scan")
{
    NoiseModel nm{.eps = 0.01, .seed = 11};
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    const std::size_t horizon = 300;
    int found = 0;
    for (int k = 0; k < 100; ++k) {
        double x = ux(gen);
        OmegaStream om(nm, 100 + k);
        auto prefix = om.prefix(horizon);
        const double theta = k % 2 == 0 ? 0.5 : 1.0;
        auto sc = scan_orbit(fam, prefix, x, horizon);
        auto want = brute_h(sc, 0.01, theta);
        auto got = good_return_time(fam, om, x, 0.01, theta, horizon);
        REQUIRE(got.has_value() == want.has_value());
        if (got) {
            ++found;
            CHECK(got->s == *want);
            CHECK(got->satisfied());
            CHECK(got->df == doctest::Approx(sc.df[got->s]).epsilon(1e-12));
            CHECK(got->asum == doctest::Approx(sc.asum[got->s]).epsilon(1e-12));
        }
    }
    CHECK(found > 20);
}

TEST_CASE("huge theta reduces the good return to the first landing")
{
    NoiseModel nm{.eps = 0.01, .seed = 12};
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    int compared = 0;
    for (int k = 0; k < 100; ++k) {
        double x = ux(gen);
        OmegaStream om(nm, k);
        if (tilde_B(canon, 0.01).contains(x))
            continue;
        auto l = landing_time(fam, om, x, 0.01, 500);
        auto h = good_return_time(fam, om, x, 0.01, 1e3, 500);
        if (!l)
            continue;
        ++compared;
        REQUIRE(h.has_value());
        CHECK(h->s == *l);
    }
    CHECK(compared > 50);
}

TEST_CASE("hat h agrees with the brute-force minimum over scales")
{
    NoiseModel nm{.eps = 0.01, .seed = 13};
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    HatHParams p{.delta = 0.002, .theta = 0.3, .theta0 = 0.01, .tau = 0.05, .horizon = 400};
    int kinds[2] = {0, 0};
    for (int k = 0; k < 50; ++k) {
        double x = ux(gen);
        OmegaStream om(nm, 200 + k);
        auto prefix = om.prefix(p.horizon);
        auto sc = scan_orbit(fam, prefix, x, p.horizon);

        std::optional<std::size_t> h_best;
        for (double d = p.delta; d <= p.delta_star; d *= std::numbers::e) {
            auto h = brute_h(sc, d, p.theta);
            if (h && (!h_best || *h < *h_best))
                h_best = h;
        }
        std::optional<std::size_t> T;
        for (std::size_t s = 1; s <= p.horizon && !T; ++s)
            if (p.theta0 * sc.df[s] >= std::numbers::e * p.tau * sc.asum[s])
                T = s;

        auto got = hat_h(fam, om, x, p);
        if (!h_best && !T) {
            CHECK_FALSE(got.has_value());
            continue;
        }
        REQUIRE(got.has_value());
        const std::size_t want = std::min(h_best.value_or(SIZE_MAX), T.value_or(SIZE_MAX));
        CHECK(got->s == want);
        const bool theta_kind = h_best && *h_best == want;
        CHECK((got->kind == ReturnKind::theta_good) == theta_kind);
        CHECK(got->satisfied());
        ++kinds[theta_kind ? 0 : 1];
    }
    CHECK(kinds[0] + kinds[1] > 10);
}

TEST_CASE("tau-scale return without any visit to B~")
{
    // first step from near the repelling fixed point 0 expands strongly and stays far from c
    NoiseModel nm{.eps = 0.0};
    OmegaStream zero(nm, 0);
    HatHParams p{.delta = 1e-4, .theta = 0.5, .theta0 = 0.01, .tau = 1e-4, .horizon = 5};
    auto got = hat_h(fam, zero, 0.01, p);
    REQUIRE(got.has_value());
    CHECK(got->kind == ReturnKind::tau_scale);
    CHECK(got->satisfied());
}

TEST_CASE("refining the scale grid never delays hat h")
{
    NoiseModel nm{.eps = 0.01, .seed = 14};
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    for (int k = 0; k < 60; ++k) {
        double x = ux(gen);
        OmegaStream om(nm, 300 + k);
        HatHParams coarse{.delta = 0.002, .theta = 0.3, .theta0 = 0.01, .tau = 0.05, .horizon = 300};
        HatHParams fine = coarse;
        fine.grid_refine = 4;
        auto a = hat_h(fam, om, x, coarse);
        auto b = hat_h(fam, om, x, fine);
        if (a) {
            REQUIRE(b.has_value());
            CHECK(b->s <= a->s);
        }
    }
    auto g = delta_grid(0.001, 0.05, 2);
    CHECK(g.front() == 0.001);
    CHECK(g.back() <= 0.05);
    CHECK(g.size() == 8);
}

TEST_CASE("depth function")
{
    CHECK(depth_of(2.0, 0.5, 0.9) == 0);
    for (double p : {1e-3, 3e-4, 0.0123, 0.5}) {
        for (double eps : {1e-3, 0.01}) {
            int q = 0;
            while (p < std::exp(-double(q)) * eps)
                ++q;
            CHECK(depth_of(p, 1.0, eps) == q);
        }
    }
}

TEST_CASE("depth trace: recount, additivity and non-flatness")
{
    NoiseModel nm{.eps = 0.005, .seed = 15};
    const double eps = 0.005;
    const double O1 = canon.O1(), O2 = canon.O2();
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    for (int k = 0; k < 20; ++k) {
        double x = ux(gen);
        OmegaStream om(nm, 400 + k);
        const std::size_t n = 500;
        auto tr = depth_trace(fam, om, x, eps, n);
        auto sc = scan_orbit(fam, om.prefix(n), x, n);
        long long visits = 0, qsum = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const bool in = in_nbhd_oracle(canon, sc.pts[j], eps);
            visits += in;
            qsum += tr.q[j];
            if (in) {
                const double bound = O1 * std::pow(std::exp(-double(tr.q[j])) * eps / O2, 1.0 - 1.0 / canon.ell());
                CHECK(tr.df[j] >= bound * (1 - 1e-12));
            }
        }
        CHECK(tr.Gamma(0, n - 1) == visits);
        CHECK(tr.Q(0, n - 1) == qsum);
        for (std::size_t split : {0ul, 17ul, 250ul, 498ul}) {
            CHECK(tr.Q(0, n - 1) == tr.Q(0, split) + tr.Q(split + 1, n - 1));
            CHECK(tr.Gamma(0, n - 1) == tr.Gamma(0, split) + tr.Gamma(split + 1, n - 1));
        }
        auto f = tr.bad(1e9, 0.0);
        CHECK(f.approximate);
        CHECK_FALSE(f.clause2);
    }
}

TEST_CASE("bad set clauses on a hand-built trace")
{
    DepthTrace tr;
    tr.q = {3, 0, 2};
    tr.in_nbhd = {1, 0, 1};
    tr.q_prefix = {0, 3, 3, 5};
    tr.g_prefix = {0, 1, 1, 2};
    auto f = tr.bad(4.0, 1.0);
    CHECK(f.clause1);  // 3 > min(4,1), 3 > min(4,1), 5 > min(4,2)
    CHECK(f.clause2);  // 5 >= 4
    CHECK(tr.bad_c(4.0, 1.0));
    CHECK_FALSE(tr.bad(6.0, 1.0).clause2);
    CHECK_FALSE(tr.bad(4.0, 3.0).clause1);
}

TEST_CASE("binding periods re-verify and grow along a halving ladder")
{
    BindingConstants k;
    const double W0 = critical_sum_W0(canon);
    CHECK(W0 == doctest::Approx(2.48767).epsilon(1e-4));
    CHECK_NOTHROW(k.validate(canon, W0));
    CHECK_THROWS_AS(BindingConstants{.L = 8.0}.validate(canon, W0), InvalidParams);
    CHECK_THROWS_AS(BindingConstants{.zeta = 0.5}.validate(canon, W0), InvalidParams);

    for (Side side : {Side::left, Side::right}) {
        std::size_t prev = 0;
        for (double delta = 0.01; delta > 1e-7; delta /= 2) {
            auto res = binding_period(canon, side, delta, k, 5000);
            REQUIRE(res.record.has_value());
            const auto& r = *res.record;
            CHECK(r.verify(canon));

            // independent re-evaluation of the three conditions
            const double v = side == Side::left ? canon.c1_minus() : canon.c1_plus();
            double x = v, d = 1.0, a = 0.0;
            const double big = k.L * delta;
            bool avoid = true;
            for (std::size_t j = 0; j <= r.M; ++j) {
                if (j < r.M && in_nbhd_oracle(canon, x, big))
                    avoid = false;
                if (j == r.M) {
                    CHECK(a <= k.theta / delta);
                    const double dx = delta_of(canon, x);
                    const double ds = dx < k.delta_star ? dx : k.delta_star;
                    const double dp = std::max(ds, delta);
                    d *= derivative(canon, x).d1;
                    CHECK(d >= std::pow(dp / delta, 1.0 - k.zeta));
                    break;
                }
                a += d / std::abs(x - canon.c());
                d *= derivative(canon, x).d1;
                x = eval(canon, x);
            }
            CHECK(avoid);
            CHECK(r.M >= prev);
            prev = r.M;
        }
    }
}

TEST_CASE("pullback of length zero and one")
{
    Interval T{0.3, 0.6};
    auto ch0 = pullback_component(fam, {}, T, {});
    CHECK(ch0.G.size() == 1);
    CHECK(ch0.G[0].lo == T.lo);
    CHECK(ch0.G[0].hi == T.hi);
    CHECK(ch0.order == 0);

    // left branch: x = c (1 - sqrt(1 - y/u))
    std::vector<Side> left{Side::left};
    auto ch1 = pullback_component(fam, {}, T, left);
    auto inv_left = [](double y) { return 0.5 * (1.0 - std::sqrt(1.0 - y / 0.9)); };
    CHECK(ch1.G[0].lo == doctest::Approx(inv_left(0.3)).epsilon(1e-12));
    CHECK(ch1.G[0].hi == doctest::Approx(inv_left(0.6)).epsilon(1e-12));
    CHECK(ch1.order == 0);

    std::vector<Side> right{Side::right};
    auto inv_right = [](double y) { return 0.5 + 0.5 * std::sqrt((y - 0.1) / 0.9); };
    auto ch2 = pullback_component(fam, {}, T, right);
    CHECK(ch2.G[0].lo == doctest::Approx(inv_right(0.3)).epsilon(1e-12));
    CHECK(ch2.G[0].hi == doctest::Approx(inv_right(0.6)).epsilon(1e-12));

    CHECK_THROWS_AS(pullback_component(fam, {}, Interval{0.01, 0.05}, right), EmptyPullback);
}

TEST_CASE("order counts endpoints that pull back onto c")
{
    // a target whose right end is c1- pulls back on the left branch to an interval ending at c
    Interval T{0.8, canon.c1_minus()};
    std::vector<Side> path{Side::right, Side::left};
    auto ch = pullback_component(fam, {}, T, path);
    CHECK(ch.order == 1);
    CHECK(ch.touches_c[1]);
    CHECK_FALSE(ch.touches_c[0]);
    CHECK(ch.G[1].hi == canon.c());

    Interval T2{0.8, 0.85};
    CHECK(pullback_component(fam, {}, T2, path).order == 0);
}

TEST_CASE("chains map each component onto the next")
{
    NoiseModel nm{.eps = 0.01, .seed = 16};
    std::mt19937_64 gen(10);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    const Interval target = tilde_B(canon, 0.01).interval();
    int built = 0;
    for (int k = 0; k < 200 && built < 40; ++k) {
        double x = ux(gen);
        auto om = sample_omega(nm, 500 + k, 40);
        auto sc = scan_orbit(fam, om, x, 40);
        for (std::size_t s = 1; s <= 40; ++s) {
            if (!target.contains(sc.pts[s]))
                continue;
            auto ch = pullback_along_orbit(fam, om, target, x, s);
            ++built;
            CHECK(ch.G[0].lo < x);
            CHECK(ch.G[0].hi > x);
            for (std::size_t j = 0; j < s; ++j) {
                const Interval g = ch.G[j];
                // f(G_j) is G_{j+1} cut down to the image of the branch used
                const bool left = ch.path[j] == Side::left;
                const double lo = g.lo == canon.c() ? fam.right_inf(om[j]) : fam.value(om[j], g.lo);
                const double hi = g.hi == canon.c() ? fam.left_sup(om[j]) : fam.value(om[j], g.hi);
                const double want_lo = left ? ch.G[j + 1].lo : std::max(ch.G[j + 1].lo, fam.right_inf(om[j]));
                const double want_hi = left ? std::min(ch.G[j + 1].hi, fam.left_sup(om[j])) : ch.G[j + 1].hi;
                CHECK(std::abs(lo - want_lo) <= 1e-12);
                CHECK(std::abs(hi - want_hi) <= 1e-12);
                CHECK(bool(ch.touches_c[j]) == (g.lo == canon.c() || g.hi == canon.c()));
            }
            break;
        }
    }
    CHECK(built >= 40);
}

TEST_CASE("backward contraction: closed form at s = 1")
{
    // components of f^-1(B~(r delta)) near CV, computed directly
    const double r = 2.0;
    for (double delta : {0.01, 0.005}) {
        const Interval T = tilde_B(canon, r * delta).interval();
        const double inv_l[2] = {0.5 * (1.0 - std::sqrt(1.0 - T.lo / 0.9)), 0.5 * (1.0 - std::sqrt(1.0 - T.hi / 0.9))};
        const double inv_r[2] = {0.5 + 0.5 * std::sqrt((T.lo - 0.1) / 0.9), 0.5 + 0.5 * std::sqrt((T.hi - 0.1) / 0.9)};
        for (const double* w : {inv_l, inv_r}) {
            std::vector<Side> path{w == inv_l ? Side::left : Side::right};
            auto ch = pullback_component(fam, {}, T, path);
            CHECK(ch.G[0].lo == doctest::Approx(w[0]).epsilon(1e-12));
            CHECK(ch.G[0].hi == doctest::Approx(w[1]).epsilon(1e-12));
        }
        // neither component is near CV = {0.1, 0.9}, so s = 1 cannot violate
        std::vector<double> ds{delta};
        auto rep = backward_contraction_check(canon, r, ds, 1, {.samples = 2000});
        CHECK(rep.violations.empty());
        CHECK(rep.near_cv == 0);
    }
}

TEST_CASE("backward contraction: vacuous rungs and a detector that fires")
{
    std::vector<double> too_big{0.5};
    auto vac = backward_contraction_check(canon, 2.0, too_big, 30);
    CHECK(vac.vacuous);
    CHECK(vac.violations.empty());

    // u = v = 0.51: the critical values fall straight back next to c, the orbit is trapped
    MapParams sink(0.5, 2.0, 0.51, 0.51);
    std::vector<double> ds{0.005};
    auto rep = backward_contraction_check(sink, 2.0, ds, 30, {.samples = 1000});
    CHECK_FALSE(rep.vacuous);
    CHECK(rep.violations.size() > 0);
    for (const auto& v : rep.violations) {
        CHECK(v.W.length() >= v.delta);
        CHECK(v.dist_cv < v.delta);
    }
}
