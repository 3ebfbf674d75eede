#include "doctest.h"

#include "lorenz/lorenz_map.hpp"
#include "lorenz/orbit.hpp"

#include "fd_oracle.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace lorenz;

namespace {

const MapParams canon = MapParams::canonical();

// Reference implementation of the map written out literally, without the shared helpers.
double ref_f(const MapParams& p, double x)
{
    if (x < p.c())
        return p.u() * (1.0 - std::pow((p.c() - x) / p.c(), p.ell()));
    return 1.0 - p.v() + p.v() * std::pow((x - p.c()) / (1.0 - p.c()), p.ell());
}

} // namespace

TEST_CASE("eval examples")
{
    PerturbedFamily fam(canon);
    CHECK(eval(fam, 0.0, 0.0) == 0.0);
    CHECK(eval(fam, 0.0, 1.0) == 1.0);
    CHECK(eval(fam, 0.0, 0.25) == doctest::Approx(0.675).epsilon(1e-15));
    CHECK(eval(fam, 0.0, 0.75) == doctest::Approx(0.325).epsilon(1e-15));
    CHECK_THROWS_AS(eval(fam, 0.0, 0.5), CriticalPointEval);
    CHECK_THROWS_AS(eval(fam, 1.0, 0.25), NoiseOutOfRange);
}

TEST_CASE("endpoints stay fixed under noise")
{
    PerturbedFamily fam(canon);
    for (double t : {-fam.eps_max(), -0.01, 0.0, 0.003, fam.eps_max()}) {
        CHECK(fam.value(t, 0.0) == 0.0);
        CHECK(fam.value(t, 1.0) == 1.0);
    }
}

TEST_CASE("derivative examples")
{
    auto d = derivative(canon, 0.25);
    CHECK(d.d1 == doctest::Approx(1.8));
    CHECK(d.d2 == doctest::Approx(-7.2));
    CHECK(derivative(canon, 0.5 - 1e-9).d1 < 1e-7);
    CHECK(derivative(canon, 0.5 + 1e-9).d1 < 1e-7);
    CHECK_THROWS_AS(derivative(canon, 0.5), CriticalPointEval);
}

TEST_CASE("critical values")
{
    auto [cp, cm] = critical_values(canon);
    CHECK(cp == doctest::Approx(0.1));
    CHECK(cm == doctest::Approx(0.9));
    auto [cp2, cm2] = critical_values(MapParams(0.4, 3.0, 0.8, 0.7));
    CHECK(cp2 == doctest::Approx(0.3));
    CHECK(cm2 == doctest::Approx(0.8));
}

TEST_CASE("constructor rejects invalid parameters")
{
    CHECK_THROWS_AS(MapParams(0.5, 2.0, 0.5, 0.9), InvalidParams);
    CHECK_THROWS_AS(MapParams(0.5, 2.0, 0.9, 0.5), InvalidParams);
    CHECK_THROWS_AS(MapParams(0.0, 2.0, 0.9, 0.9), InvalidParams);
    CHECK_THROWS_AS(MapParams(0.5, 1.0, 0.9, 0.9), InvalidParams);
    CHECK_THROWS_AS(MapParams(0.5, 2.0, 1.0, 0.9), InvalidParams);
    CHECK_THROWS_AS(PerturbedFamily(canon, 0.6), InvalidParams);
}

TEST_CASE("inverse branch examples")
{
    PerturbedFamily fam(canon);
    CHECK(*inverse_branch(fam, 0.0, 0.675, Side::left) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(*inverse_branch(fam, 0.0, 0.9, Side::left) == doctest::Approx(0.5));
    CHECK_FALSE(inverse_branch(fam, 0.0, 0.05, Side::right).has_value());
    CHECK_FALSE(inverse_branch(fam, 0.0, 0.95, Side::left).has_value());
}

TEST_CASE("schwarzian")
{
    CHECK(schwarzian(canon, 0.25) == doctest::Approx(-24.0));
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        double x = U(gen);
        if (std::abs(x - 0.5) < 1e-9)
            continue;
        CHECK(schwarzian(canon, x) < 0.0);
    }

    // finite-difference oracle for a cubic critical order
    MapParams p3(0.4, 3.0, 0.8, 0.7);
    for (double x : {0.1, 0.25, 0.33, 0.55, 0.7, 0.9})
        CHECK(schwarzian(p3, x) == doctest::Approx(oracle::schwarzian_fd(p3, x)).epsilon(1e-6));
}

TEST_CASE("closed form agrees with a literal reference for several parameter sets")
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (const MapParams& p : {canon, MapParams(0.4, 3.0, 0.8, 0.7), MapParams(0.55, 2.5, 0.7, 0.6)}) {
        for (int i = 0; i < 1000; ++i) {
            double x = U(gen);
            if (x == p.c())
                continue;
            CHECK(p.value(x) == doctest::Approx(ref_f(p, x)).epsilon(1e-13));
        }
    }
}

TEST_CASE("eps_max keeps branches monotone and inside the interval")
{
    for (const MapParams& p : {canon, MapParams(0.4, 3.0, 0.8, 0.7)}) {
        PerturbedFamily fam(p);
        CHECK(fam.eps_max() > 0.0);
        for (double t : {-fam.eps_max(), fam.eps_max()}) {
            const int n = 10000;
            for (Side s : {Side::left, Side::right}) {
                double a = s == Side::left ? 0.0 : p.c();
                double b = s == Side::left ? p.c() : 1.0;
                double prev = -1.0;
                for (int i = 0; i <= n; ++i) {
                    double x = a + (b - a) * i / n;
                    if (x == p.c())
                        continue;
                    double y = fam.value(t, x);
                    CHECK(y > prev);
                    CHECK(y >= 0.0);
                    CHECK(y <= 1.0);
                    prev = y;
                }
            }
        }
    }
}

TEST_CASE("inverse round trip on both branches and the taper zone")
{
    PerturbedFamily fam(canon);
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_real_distribution<double> T(-fam.eps_max(), fam.eps_max());
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        for (Side s : {Side::left, Side::right}) {
            double x = s == Side::left ? 0.5 * U(gen) : 0.5 + 0.5 * U(gen);
            if (x == 0.5)
                continue;
            double t = (i % 2 == 0) ? 0.0 : T(gen);
            auto back = fam.inverse(t, fam.value(t, x), s);
            REQUIRE(back.has_value());
            worst = std::max(worst, std::abs(*back - x));
        }
    }
    CHECK(worst <= 1e-11);
}

TEST_CASE("noise sensitivity is bounded by one")
{
    PerturbedFamily fam(canon);
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> T(-fam.eps_max(), fam.eps_max());
    for (int i = 0; i < 200; ++i) {
        double t = T(gen), s = T(gen);
        if (t == s)
            continue;
        for (int k = 0; k <= 1000; ++k) {
            double x = k / 1000.0;
            if (x == 0.5)
                continue;
            CHECK(std::abs(fam.value(t, x) - fam.value(s, x)) <= std::abs(t - s) * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("taper derivatives match finite differences")
{
    PerturbedFamily fam(canon);
    for (double x : {0.01, 0.02, 0.04, 0.96, 0.975, 0.99}) {
        const double h = 1e-6;
        CHECK(fam.taper_d1(x) == doctest::Approx((fam.taper(x + h) - fam.taper(x - h)) / (2 * h)).epsilon(1e-6));
        CHECK(fam.taper_d2(x) ==
              doctest::Approx((fam.taper(x + 1e-4) - 2 * fam.taper(x) + fam.taper(x - 1e-4)) / 1e-8).epsilon(1e-4));
        CHECK(std::abs(fam.taper_d1(x)) <= 2.0 / fam.margin());
    }
}

TEST_CASE("random orbit examples")
{
    PerturbedFamily fam(canon);
    std::vector<double> zero(4, 0.0);
    auto r = random_orbit(fam, 0.25, zero, 1);
    REQUIRE(r.points.size() == 2);
    CHECK(r.points[1] == doctest::Approx(0.675));
    CHECK(r.d1[0] == 1.0);
    CHECK(r.d1[1] == doctest::Approx(1.8));
    CHECK(r.asum[1] == doctest::Approx(4.0));

    auto r0 = random_orbit(fam, 0.3, zero, 0);
    CHECK(r0.points.size() == 1);
    CHECK(r0.d1[0] == 1.0);
    CHECK(r0.asum[0] == 0.0);

    // 0.25 -> 0.675 -> ...; an orbit started at c is flagged immediately
    auto rc = random_orbit(fam, 0.5, zero, 3);
    CHECK(rc.hit_critical);
    CHECK(rc.points.size() == 1);
}

TEST_CASE("chain rule matches finite differences along random orbits")
{
    PerturbedFamily fam(canon);
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_real_distribution<double> T(-0.01, 0.01);
    int tested = 0;
    while (tested < 200) {
        const std::size_t n = 1 + gen() % 20;
        std::vector<double> omega(n);
        for (auto& t : omega)
            t = T(gen);
        const double x = 0.05 + 0.9 * U(gen);
        auto rec = random_orbit(fam, x, omega, n);
        bool far = !rec.hit_critical;
        for (double y : rec.points)
            far = far && std::abs(y - 0.5) >= 1e-3;
        if (!far)
            continue;
        double peak = 1.0;
        for (double d : rec.d1)
            peak = std::max(peak, d);
        // every intermediate image of [x-2h, x+2h] stays far shorter than the distance to c
        const long double h = 2.5e-5L / peak;
        auto fd = oracle::central_fd(fam, omega, x, h);
        CHECK(std::abs(rec.d1[n] - double(fd.d1)) <= 1e-5 * std::abs(rec.d1[n]));
        CHECK(std::abs(rec.d2[n] - double(fd.d2)) <= 1e-3 * std::abs(rec.d2[n]) + 1e-9 * rec.d1[n] * rec.d1[n]);
        ++tested;
    }
}

TEST_CASE("distortion sum is monotone and starts at 1/d(x,c)")
{
    PerturbedFamily fam(canon);
    std::mt19937_64 gen(29);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_real_distribution<double> T(-0.02, 0.02);
    for (int k = 0; k < 100; ++k) {
        std::vector<double> omega(50);
        for (auto& t : omega)
            t = T(gen);
        const double x = U(gen);
        auto rec = random_orbit(fam, x, omega, 50);
        if (rec.length() >= 1)
            CHECK(rec.asum[1] == doctest::Approx(1.0 / std::abs(x - 0.5)));
        for (std::size_t i = 1; i < rec.asum.size(); ++i)
            CHECK(rec.asum[i] >= rec.asum[i - 1]);
    }
}

TEST_CASE("summability statistics")
{
    auto s1 = summability_stats(canon, Side::left, 1);
    CHECK(s1.partial_sum == 1.0);

    auto s = summability_stats(canon, Side::left, 1000);
    CHECK(std::isfinite(s.partial_sum));
    CHECK_FALSE(s.ld_failure);
    CHECK(s.growth_rate > 0.0);

    // u = v = 0.51 has an attracting period-two orbit next to c, so Df^n(v) -> 0
    MapParams sink(0.5, 2.0, 0.51, 0.51);
    auto sf = summability_stats(sink, Side::left, 200);
    CHECK(sf.ld_failure);
    CHECK(sf.growth_rate < 0.0);
}
