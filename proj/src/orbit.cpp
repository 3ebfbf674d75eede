#include "lorenz/orbit.hpp"

namespace lorenz {

OrbitRecord random_orbit(const PerturbedFamily& family, double x0, std::span<const double> omega, std::size_t n,
                         double guard)
{
    if (omega.size() < n)
        throw InvalidParams("noise prefix shorter than the requested orbit length");
    OrbitRecord rec;
    rec.x0 = x0;
    rec.omega.assign(omega.begin(), omega.begin() + static_cast<std::ptrdiff_t>(n));
    rec.points.reserve(n + 1);
    rec.d1.reserve(n + 1);
    rec.d2.reserve(n + 1);
    rec.asum.reserve(n + 1);

    OrbitCursor cur(family, x0, guard);
    auto push = [&] {
        rec.points.push_back(cur.x());
        rec.d1.push_back(cur.d1());
        rec.d2.push_back(cur.d2());
        rec.asum.push_back(cur.asum());
    };
    push();
    for (std::size_t i = 0; i < n; ++i) {
        if (cur.at_critical()) {
            rec.hit_critical = true;
            break;
        }
        cur.advance(omega[i]);
        push();
    }
    if (!rec.hit_critical && cur.at_critical() && n > 0)
        rec.hit_critical = true;
    return rec;
}

} // namespace lorenz
