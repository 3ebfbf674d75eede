#include "doctest.h"

#include "lorenz/noise.hpp"
#include "lorenz/orbit.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace lorenz;

namespace {
const PerturbedFamily fam(MapParams::canonical());
}

TEST_CASE("sample_omega basics")
{
    NoiseModel m;
    m.eps = 0.01;
    m.seed = 42;
    CHECK(sample_omega(m, 0, 0).empty());
    auto a = sample_omega(m, 3, 1000);
    auto b = sample_omega(m, 3, 1000);
    CHECK(a == b);
    CHECK(a != sample_omega(m, 4, 1000));
}

TEST_CASE("uniform draws: range and mean")
{
    NoiseModel m;
    m.eps = 0.01;
    m.seed = 7;
    const std::size_t n = 1000000;
    auto w = sample_omega(m, 1, n);
    double sum = 0.0, sq = 0.0;
    for (double t : w) {
        REQUIRE(t >= -0.01);
        REQUIRE(t <= 0.01);
        sum += t;
        sq += t * t;
    }
    const double mean = sum / n;
    const double sigma = 0.01 / std::sqrt(3.0) / std::sqrt(double(n));
    CHECK(std::abs(mean) <= 3 * sigma);
    CHECK(sq / n == doctest::Approx(1e-4 / 3.0).epsilon(0.01));
}

TEST_CASE("triangular draws: range and variance")
{
    NoiseModel m;
    m.eps = 0.02;
    m.kind = NoiseKind::triangular;
    auto w = sample_omega(m, 9, 400000);
    double sq = 0.0;
    for (double t : w) {
        REQUIRE(std::abs(t) <= 0.02);
        sq += t * t;
    }
    // variance of the symmetric triangle on [-e, e] is e^2/6
    CHECK(sq / w.size() == doctest::Approx(0.0004 / 6.0).epsilon(0.01));
}

TEST_CASE("shift reproduces the tail of the stream")
{
    NoiseModel m;
    m.eps = 0.01;
    OmegaStream s(m, 12);
    auto full = s.prefix(100);
    auto tail = s.shift(37).prefix(63);
    for (std::size_t i = 0; i < tail.size(); ++i)
        CHECK(tail[i] == full[37 + i]);
    CHECK(s.shift(10).shift(5)[0] == s[15]);
}

TEST_CASE("model validation")
{
    NoiseModel m;
    m.eps = 1.0;
    CHECK_THROWS_AS(m.validate(fam), NoiseOutOfRange);
    m.eps = 0.01;
    m.L = 1.0;
    CHECK_THROWS_AS(m.validate(fam), InvalidParams);
    CHECK_THROWS_AS(noise_kind_from_string("gauss"), InvalidParams);
}

TEST_CASE("skew product")
{
    NoiseModel m;
    m.eps = 0.01;
    OmegaStream w(m, 5);
    auto s0 = skew_step(fam, 0.3, w, 0);
    CHECK(s0.x == 0.3);
    CHECK(s0.omega.offset() == 0);

    NoiseModel z;
    z.eps = 0.0;
    auto s1 = skew_step(fam, 0.3, OmegaStream(z, 1), 1);
    CHECK(s1.x == fam.base().value(0.3));

    auto two = skew_step(fam, 0.3, w, 2);
    auto one = skew_step(fam, 0.3, w, 1);
    auto again = skew_step(fam, one.x, one.omega, 1);
    CHECK(two.x == again.x);
    CHECK(two.omega.offset() == again.omega.offset());
    CHECK_THROWS_AS(skew_step(fam, 0.5, w, 3), CriticalHit);
}

TEST_CASE("cocycle property is bitwise")
{
    NoiseModel m;
    m.eps = 0.02;
    for (std::uint64_t id = 0; id < 20; ++id) {
        OmegaStream w(m, id);
        const std::size_t n = 40, k = 25;
        auto whole = random_orbit(fam, 0.123 + 0.01 * id, w.prefix(n + k), n + k);
        if (whole.hit_critical)
            continue;
        auto first = random_orbit(fam, whole.x0, w.prefix(n), n);
        auto second = random_orbit(fam, first.points.back(), w.shift(n).prefix(k), k);
        for (std::size_t i = 0; i <= k; ++i)
            CHECK(second.points[i] == whole.points[n + i]);
    }
}

TEST_CASE("kernel has unit mass and is uniform on the core")
{
    NoiseModel m;
    m.eps = 0.01;
    OmegaStream w(m, 77);
    const double x = 0.3;
    CHECK(kernel_probability_mc(fam, w, x, 0.0, 1.0, 10000) == 1.0);

    // Kolmogorov-Smirnov against uniform on [f(x) - eps, f(x) + eps]
    const std::size_t n = 100000;
    const double fx = fam.value(0.0, x);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i)
        u[i] = (fam.value(w[i], x) - (fx - 0.01)) / 0.02;
    std::sort(u.begin(), u.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        d = std::max({d, std::abs(u[i] - double(i) / n), std::abs(u[i] - double(i + 1) / n)});
    CHECK(d < 1.63 / std::sqrt(double(n)));
}

TEST_CASE("kernel regularity on the core")
{
    NoiseModel m;
    m.eps = 0.01;
    m.L = 2.0;
    auto rep = kernel_regularity_check(fam, m, 200, 4000);
    CHECK(rep.confirmed_violations == 0);
    for (const auto& s : rep.samples) {
        CHECK(s.in_core);
        // exact value on the core never exceeds |A|/2eps
        CHECK(s.p_exact <= (s.a_hi - s.a_lo) / 0.02 + 1e-12);
        CHECK(s.p_exact <= s.bound + 1e-12);
        CHECK(std::abs(s.p_hat - s.p_exact) <= 5.0 * std::sqrt(0.25 / 4000) + 1e-12);
    }
}
