#include "lorenz/acceptance.hpp"

#include "lorenz/expansion.hpp"
#include "lorenz/inducing.hpp"
#include "lorenz/lab.hpp"
#include "lorenz/orbit.hpp"
#include "lorenz/parallel.hpp"
#include "lorenz/recurrence.hpp"
#include "lorenz/transfer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace lorenz {

namespace {

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------- independent oracles

long double compose(const PerturbedFamily& fam, std::span<const double> omega, long double x)
{
    for (double t : omega)
        x = fam.value<long double>(t, x);
    return x;
}

// Fourth-order central differences in long double.
std::pair<long double, long double> central_fd(const PerturbedFamily& fam, std::span<const double> omega, long double x,
                                               long double h)
{
    const long double fm2 = compose(fam, omega, x - 2 * h);
    const long double fm1 = compose(fam, omega, x - h);
    const long double f0 = compose(fam, omega, x);
    const long double fp1 = compose(fam, omega, x + h);
    const long double fp2 = compose(fam, omega, x + 2 * h);
    return {(8 * (fp1 - fm1) - (fp2 - fm2)) / (12 * h), (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h)};
}

// x in B~(delta) read off the image: |f(x) - CV| < delta on x's side.
bool in_nbhd(const MapParams& p, double x, double delta)
{
    if (x == p.c())
        return true;
    const double y = eval(p, x);
    return x < p.c() ? p.c1_minus() - y < delta : y - p.c1_plus() < delta;
}

double nbhd_size(const MapParams& p, double delta)
{
    double total = 0.0;
    for (int side : {-1, 1}) {
        double in = 0.0;
        double out = side < 0 ? p.c() : 1.0 - p.c();
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (in + out);
            (in_nbhd(p, p.c() + side * mid, delta) ? in : out) = mid;
        }
        total += in;
    }
    return total;
}

struct Scan {
    std::vector<double> pts, df, asum;
};

Scan scan(const PerturbedFamily& f, std::span<const double> om, double x, std::size_t n)
{
    Scan s;
    double d = 1.0, a = 0.0;
    for (std::size_t i = 0;; ++i) {
        s.pts.push_back(x);
        s.df.push_back(d);
        s.asum.push_back(a);
        if (i == n)
            break;
        a += d / std::abs(x - f.base().c());
        d *= f.derivatives(om[i], x).d1;
        x = f.value(om[i], x);
    }
    return s;
}

std::optional<std::size_t> scan_h(const MapParams& p, const Scan& sc, double delta, double size, double theta)
{
    for (std::size_t s = 1; s < sc.pts.size(); ++s)
        if (in_nbhd(p, sc.pts[s], delta) && theta * sc.df[s] >= sc.asum[s] * size)
            return s;
    return std::nullopt;
}

// ---------------------------------------------------------------- criteria

Outcome exactness(const ExperimentConfig& cfg)
{
    const PerturbedFamily fam = cfg.family();
    const MapParams& p = fam.base();
    const double em = fam.eps_max();
    std::size_t endpoint_fail = 0, monotone_fail = 0;
    for (double t : {-em, -0.5 * em, 0.0, 0.5 * em, em}) {
        if (fam.value(t, 0.0) != 0.0 || fam.value(t, 1.0) != 1.0)
            ++endpoint_fail;
        for (Side s : {Side::left, Side::right}) {
            const double a = s == Side::left ? 0.0 : p.c();
            const double b = s == Side::left ? p.c() : 1.0;
            double prev = -1.0;
            bool first = true;
            for (int i = 0; i <= 10000; ++i) {
                const double x = a + (b - a) * i / 10000.0;
                if (x == p.c())
                    continue;
                const double y = fam.value(t, x);
                if (!first && !(y > prev))
                    ++monotone_fail;
                prev = y;
                first = false;
            }
        }
    }
    if (eval(p, 0.0) != 0.0 || eval(p, 1.0) != 1.0)
        ++endpoint_fail;
    return {endpoint_fail == 0 && monotone_fail == 0,
            "endpoint failures " + std::to_string(endpoint_fail) + ", monotonicity failures " +
                std::to_string(monotone_fail) + " over t in {0, +-eps_max/2, +-eps_max}"};
}

Outcome chain_rule(const ExperimentConfig& cfg)
{
    const PerturbedFamily fam = cfg.family();
    const double c = fam.base().c();
    const double eps = cfg.noise.eps > 0.0 ? cfg.noise.eps : 0.5 * fam.eps_max();
    std::mt19937_64 gen(cfg.noise.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_real_distribution<double> T(-eps, eps);
    double worst1 = 0.0, worst2 = 0.0;
    int tested = 0;
    while (tested < 200) {
        const std::size_t n = 1 + gen() % 20;
        std::vector<double> omega(n);
        for (auto& t : omega)
            t = T(gen);
        const double x = U(gen);
        const auto rec = random_orbit(fam, x, omega, n);
        bool far = !rec.hit_critical;
        for (double y : rec.points)
            far = far && std::abs(y - c) >= 1e-3;
        if (!far)
            continue;
        const double peak = *std::max_element(rec.d1.begin(), rec.d1.end());
        const long double h = 2.5e-5L / std::max(1.0, peak);
        const auto [fd1, fd2] = central_fd(fam, omega, x, h);
        worst1 = std::max(worst1, static_cast<double>(std::abs(rec.d1[n] - fd1) / std::abs(fd1)));
        worst2 = std::max(worst2, static_cast<double>(std::abs(rec.d2[n] - fd2) / std::abs(fd2)));
        ++tested;
    }
    return {worst1 <= 1e-5 && worst2 <= 1e-3,
            "max relative error D1 " + fmt(worst1) + " (tol 1e-5), D2 " + fmt(worst2) + " (tol 1e-3)"};
}

Outcome negative_schwarzian(const ExperimentConfig& cfg)
{
    const MapParams p = cfg.params();
    std::mt19937_64 gen(cfg.noise.seed + 1);
    std::size_t positive = 0, mismatch = 0;
    double max_s = -1e300;
    for (Side s : {Side::left, Side::right}) {
        std::uniform_real_distribution<double> X(s == Side::left ? 0.0 : p.c(), s == Side::left ? p.c() : 1.0);
        for (int i = 0; i < 10000; ++i) {
            double x = X(gen);
            if (x == p.c())
                continue;
            const double S = schwarzian(p, x);
            double d1, d2, d3;
            p.derivatives(x, d1, d2, d3);
            const double closed = d3 / d1 - 1.5 * (d2 / d1) * (d2 / d1);
            if (!(S < 0.0))
                ++positive;
            if (std::abs(S - closed) > 1e-9 * std::abs(closed))
                ++mismatch;
            max_s = std::max(max_s, S);
        }
    }
    return {positive == 0 && mismatch == 0,
            "Sf >= 0 at " + std::to_string(positive) + " of 20000 points, closed-form mismatches " +
                std::to_string(mismatch) + ", max Sf " + fmt(max_s)};
}

Outcome ulam_stationarity(const ExperimentConfig& cfg)
{
    const PerturbedFamily fam = cfg.family();
    const Partition part(cfg.partition_bins, fam.base());
    const UlamOptions uo{cfg.quadrature_nodes};
    const auto det = stationary_density(build_ulam(fam, nullptr, part, uo));
    const NoiseModel nm = cfg.noise_model(cfg.noise.eps > 0.0 ? cfg.noise.eps : cfg.noise.ladder.back());
    const auto rnd = stationary_density(build_ulam(fam, &nm, part, uo));
    return {det.residual <= 1e-10 && rnd.residual <= 1e-10,
            "residual deterministic " + fmt(det.residual) + ", randomized (eps " + fmt(nm.eps) + ") " +
                fmt(rnd.residual) + " (tol 1e-10, " + std::to_string(part.size()) + " bins)"};
}

Outcome birkhoff_cross(const ExperimentConfig& cfg)
{
    const PerturbedFamily fam = cfg.family();
    const Partition part(cfg.partition_bins, fam.base());
    const auto zeta = stationary_density(build_ulam(fam, nullptr, part, {cfg.quadrature_nodes}));
    NoiseModel none = cfg.noise_model(0.0);
    const auto b = birkhoff_density(fam, none, 0.1234567, cfg.ensembles.birkhoff_steps, cfg.ensembles.birkhoff_burn_in,
                                    part);
    const double l1 = l1_distance(zeta.density, b.density);
    return {l1 <= 0.1, "L1(Birkhoff, Ulam) = " + fmt(l1) + " (tol 0.1), " +
                           std::to_string(cfg.ensembles.birkhoff_steps) + " steps, restarts " +
                           std::to_string(b.restarts)};
}

Outcome uniqueness(const ExperimentConfig& cfg)
{
    const PerturbedFamily fam = cfg.family();
    const Partition part(cfg.partition_bins, fam.base());
    const NoiseModel nm = cfg.noise_model(cfg.noise.eps > 0.0 ? cfg.noise.eps : cfg.noise.ladder.back());
    const auto m = build_ulam(fam, &nm, part, {cfg.quadrature_nodes});
    const auto a = stationary_density(m);
    std::vector<double> skew(part.size());
    for (std::size_t i = 0; i < skew.size(); ++i)
        skew[i] = 1.0 + std::sin(3.0 * static_cast<double>(i)) + (i < part.size() / 5 ? 1.0 : 0.0);
    StationaryOptions o;
    o.initial = Density::from_masses(part, skew);
    const auto b = stationary_density(m, o);
    const double l1 = l1_distance(a.density, b.density);
    return {l1 <= 1e-6, "L1 between stationary densities from two initial densities = " + fmt(l1) + " (tol 1e-6)"};
}

Outcome stability_trend(const ExperimentConfig& cfg)
{
    const PerturbedFamily fam = cfg.family();
    const Partition part(cfg.partition_bins, fam.base());
    SweepOptions so;
    so.kind = noise_kind_from_string(cfg.noise.kind);
    so.ulam.nodes = cfg.quadrature_nodes;
    const auto res = stability_sweep(fam, cfg.noise.ladder, part, so);
    bool ok = true;
    std::string d = "||zeta_eps - zeta_0||_1:";
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        const auto& r = res.rows[i];
        d += " " + fmt(r.eps) + "->" + (r.converged ? fmt(r.l1) : "failed");
        ok = ok && r.converged;
        if (i > 0 && r.converged && res.rows[i - 1].converged)
            ok = ok && r.l1 <= 1.1 * res.rows[i - 1].l1;
    }
    return {ok, d + " (nonincreasing within 10%)"};
}

Outcome kernel_regularity(const ExperimentConfig& cfg)
{
    const PerturbedFamily fam = cfg.family();
    NoiseModel nm = cfg.noise_model(cfg.noise.eps > 0.0 ? cfg.noise.eps : cfg.noise.ladder.back());
    const auto rep = kernel_regularity_check(fam, nm, 1000, 4000);
    std::size_t outside = 0;
    for (const auto& s : rep.samples)
        outside += !s.in_core;
    return {rep.confirmed_violations == 0 && outside == 0,
            "confirmed violations " + std::to_string(rep.confirmed_violations) + " of " +
                std::to_string(rep.samples.size()) + " pairs, max p_hat/bound " + fmt(rep.max_ratio) +
                ", samples outside the core " + std::to_string(outside)};
}

Outcome return_oracles(const ExperimentConfig& cfg)
{
    const PerturbedFamily fam = cfg.family();
    const MapParams& p = fam.base();
    const NoiseModel nm = cfg.noise_model();
    const std::size_t horizon = cfg.horizons.returns;
    const double delta = cfg.scales.delta;
    const std::array<double, 3> thetas{cfg.scales.theta, 0.1, 1.0};
    std::mt19937_64 gen(cfg.noise.seed + 9);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    std::map<double, double> sizes;
    auto size_of = [&](double d) {
        auto it = sizes.find(d);
        if (it == sizes.end())
            it = sizes.emplace(d, nbhd_size(p, d)).first;
        return it->second;
    };
    std::size_t agree = 0, defined_h = 0, defined_hat = 0, compared = 0, skipped = 0;
    for (std::uint64_t k = 0; compared < 100; ++k) {
        const double x = ux(gen);
        const double theta = thetas[k % thetas.size()];
        OmegaStream om(nm, 0x7000000 + k);
        const auto prefix = om.prefix(horizon);
        Scan sc;
        std::optional<ReturnEvent> h, hh;
        HatHParams hp{.delta = delta, .theta = theta, .theta0 = cfg.scales.theta0, .tau = cfg.scales.tau,
                      .delta_star = cfg.scales.delta_star, .horizon = horizon};
        try {
            sc = scan(fam, prefix, x, horizon);
            h = good_return_time(fam, om, x, delta, theta, horizon);
            hh = hat_h(fam, om, x, hp);
        } catch (const CriticalHit&) {
            ++skipped;
            continue;
        }
        ++compared;
        const auto want_h = scan_h(p, sc, delta, size_of(delta), theta);
        std::optional<std::size_t> best;
        for (double d = delta; d <= hp.delta_star; d *= std::numbers::e) {
            const auto s = scan_h(p, sc, d, size_of(d), theta);
            if (s && (!best || *s < *best))
                best = s;
        }
        std::optional<std::size_t> tau_s;
        for (std::size_t s = 1; s <= horizon && !tau_s; ++s)
            if (hp.theta0 * sc.df[s] >= std::numbers::e * hp.tau * sc.asum[s])
                tau_s = s;
        std::optional<std::size_t> want_hat;
        if (best || tau_s)
            want_hat = std::min(best.value_or(SIZE_MAX), tau_s.value_or(SIZE_MAX));

        bool ok = h.has_value() == want_h.has_value() && (!h || h->s == *want_h);
        ok = ok && hh.has_value() == want_hat.has_value();
        if (ok && hh) {
            const bool theta_kind = best && *best == *want_hat;
            ok = hh->s == *want_hat && (hh->kind == ReturnKind::theta_good) == theta_kind && hh->satisfied();
        }
        agree += ok;
        defined_h += want_h.has_value();
        defined_hat += want_hat.has_value();
    }
    return {agree == compared, std::to_string(agree) + " of " + std::to_string(compared) +
                                   " samples agree with the scan (h defined " + std::to_string(defined_h) +
                                   ", hat h defined " + std::to_string(defined_hat) + ", skipped " +
                                   std::to_string(skipped) + ")"};
}

Outcome window_property(const ExperimentConfig& cfg)
{
    const PerturbedFamily fam = cfg.family();
    const NoiseModel nm = cfg.noise_model();
    std::mt19937_64 gen(cfg.noise.seed + 10);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> un(1, 30);
    double worst = 0.0;
    std::size_t failures = 0;
    int done = 0;
    for (std::uint64_t k = 0; done < 100; ++k) {
        const double x = ux(gen);
        const std::size_t n = un(gen);
        const auto om = sample_omega(nm, 0x7100000 + k, n);
        WindowSample w;
        try {
            w = window_check(fam, om, x, n, cfg.scales.theta0);
        } catch (const CriticalHit&) {
            continue;
        }
        ++done;
        worst = std::max(worst, w.nonlinearity);
        failures += !w.diffeomorphic || !(w.nonlinearity <= 0.6);
    }
    return {failures == 0, "max nonlinearity " + fmt(worst) + " over 100 windows (tol 0.6), failures " +
                               std::to_string(failures)};
}

Outcome koebe(const ExperimentConfig& cfg)
{
    const auto sum = koebe_random_branches(cfg.params(), cfg.ensembles.koebe, cfg.horizons.koebe_s,
                                           cfg.scales.koebe_tau, cfg.noise.seed);
    std::size_t other = 0;
    for (const auto& r : sum.results)
        other += !r.macro_pass || !r.one_sided_pass;
    return {sum.checked == cfg.ensembles.koebe && sum.violations == 0 && other == 0,
            std::to_string(sum.checked) + " branches checked (" + std::to_string(sum.attempts) +
                " attempts), ratio violations " + std::to_string(sum.violations) + ", macro/one-sided violations " +
                std::to_string(other) + ", worst ratio/bound " + fmt(sum.worst_ratio_over_bound)};
}

Outcome binding(const ExperimentConfig& cfg)
{
    const MapParams p = cfg.params();
    BindingConstants k = cfg.scales.binding;
    k.delta_star = cfg.scales.delta_star;
    bool ok = true;
    std::string d;
    for (Side side : {Side::left, Side::right}) {
        std::size_t prev = 0;
        d += std::string(side == Side::left ? "c1-" : "c1+") + " M:";
        for (double delta : cfg.scales.binding_ladder) {
            const auto res = binding_period(p, side, delta, k, cfg.horizons.binding);
            if (!res.record) {
                ok = false;
                d += " none";
                continue;
            }
            const auto& r = *res.record;
            // re-evaluation along a fresh critical orbit
            const double v = side == Side::left ? p.c1_minus() : p.c1_plus();
            double x = v, df = 1.0, a = 0.0;
            bool avoid = true, witness = r.verify(p);
            for (std::size_t j = 0; j <= r.M; ++j) {
                if (j == r.M) {
                    const double dx = delta_of(p, x);
                    const double dp = std::max(dx < k.delta_star ? dx : k.delta_star, delta);
                    df *= derivative(p, x).d1;
                    witness = witness && a <= k.theta / delta && df >= std::pow(dp / delta, 1.0 - k.zeta);
                    break;
                }
                if (in_nbhd(p, x, k.L * delta))
                    avoid = false;
                a += df / std::abs(x - p.c());
                df *= derivative(p, x).d1;
                x = eval(p, x);
            }
            ok = ok && avoid && witness && r.M >= prev;
            prev = r.M;
            d += " " + std::to_string(r.M);
        }
        d += "; ";
    }
    return {ok, d + "witnesses re-verified, nondecreasing along the ladder"};
}

Outcome backward_contraction(const ExperimentConfig& cfg)
{
    const MapParams p = cfg.params();
    const BCOptions bo{.samples = cfg.ensembles.bc_samples, .seed = cfg.noise.seed};
    const auto rep = backward_contraction_check(p, cfg.scales.bc_r, cfg.scales.bc_ladder, cfg.horizons.bc, bo);
    MapParams sink(0.5, 2.0, 0.51, 0.51);
    const std::vector<double> ds{0.005};
    const auto fire = backward_contraction_check(sink, 2.0, ds, cfg.horizons.bc, {.samples = 1000});
    std::string d = "components " + std::to_string(rep.components) + ", near CV " + std::to_string(rep.near_cv) +
                    ", violations " + std::to_string(rep.violations.size()) + ", max |W|/delta " +
                    fmt(rep.max_ratio);
    std::map<double, std::size_t> by_delta;
    for (const auto& v : rep.violations)
        ++by_delta[v.delta];
    for (const auto& [delta, n] : by_delta)
        d += " [delta " + fmt(delta) + ": " + std::to_string(n) + "]";
    d += "; detector on a non-LD map fired " + std::to_string(fire.violations.size()) + " times";
    // finer rungs, for information only
    std::vector<double> fine;
    for (double x = cfg.scales.bc_ladder.back() / 2; x >= cfg.scales.bc_ladder.back() / 8.01; x /= 2)
        fine.push_back(x);
    const auto ext =
        backward_contraction_check(p, cfg.scales.bc_r, fine, cfg.horizons.bc, {.samples = 1000, .seed = bo.seed});
    d += "; finer rungs (info): violations " + std::to_string(ext.violations.size()) + " of " +
         std::to_string(ext.near_cv) + " near-CV components";
    return {rep.components >= 1000 && rep.violations.empty() && !rep.vacuous && !fire.violations.empty(), d};
}

Outcome nice_sets(const ExperimentConfig& cfg)
{
    const PerturbedFamily fam = cfg.family();
    const NoiseModel nm = cfg.noise_model(cfg.scales.nice_eps);
    const double delta = cfg.scales.nice_delta;
    const std::size_t count = cfg.ensembles.nice_sets;
    std::vector<std::string> fail(count);
    std::vector<std::size_t> touches(count, 0);
    parallel_for(count, [&](std::size_t i) {
        OmegaStream om(nm, 0x7200000 + i);
        Interval prev{fam.base().c(), fam.base().c()};
        for (std::size_t n = 0; n <= cfg.horizons.nice_depth; ++n) {
            const auto a = nice_set_at(fam, om, delta, n);
            if (!a.contained() || a.V.lo > prev.lo || a.V.hi < prev.hi) {
                fail[i] = "containment at depth " + std::to_string(n);
                return;
            }
            prev = a.V;
        }
        try {
            const auto b = nice_set_build(fam, om, delta,
                                          {.depth = cfg.horizons.nice_depth, .verify_horizon = cfg.horizons.nice_verify});
            if (!b.contained())
                fail[i] = "high-precision set not contained";
            touches[i] = b.boundary_touches;
        } catch (const NicenessViolated& e) {
            fail[i] = e.what();
        }
    });
    std::size_t bad = 0, touch = 0;
    std::string first;
    for (std::size_t i = 0; i < count; ++i) {
        touch += touches[i];
        if (!fail[i].empty() && bad++ == 0)
            first = "; first failure (omega " + std::to_string(i) + "): " + fail[i];
    }
    return {bad == 0, std::to_string(count - bad) + " of " + std::to_string(count) +
                          " omega pass containment at every depth <= " + std::to_string(cfg.horizons.nice_depth) +
                          " and niceness to " + std::to_string(cfg.horizons.nice_verify) + " (boundary touches " +
                          std::to_string(touch) + ")" + first};
}

Outcome inducing_tail(const ExperimentConfig& cfg)
{
    const PerturbedFamily fam = cfg.family();
    const NoiseModel nm = cfg.noise_model(cfg.scales.nice_eps);
    TailOptions to;
    to.ensemble = cfg.ensembles.tail;
    to.members_per_omega = cfg.ensembles.tail_per_omega;
    to.nice_depth = cfg.horizons.tail_nice_depth;
    to.delta0 = cfg.scales.delta0;
    to.theta = cfg.scales.theta;
    to.markov.horizon = cfg.horizons.markov;
    const auto ts = inducing_tail_stats(fam, nm, to);
    bool monotone = true;
    for (std::size_t i = 1; i < ts.survival.size(); ++i)
        monotone = monotone && ts.survival[i] <= ts.survival[i - 1];
    return {monotone && ts.fit_points >= 2 && ts.fit_slope <= -1.0,
            "survival nonincreasing: " + std::string(monotone ? "yes" : "no") + ", log-log slope " +
                fmt(ts.fit_slope) + " on m in [" + std::to_string(ts.fit_lo) + ", " + std::to_string(ts.fit_hi) +
                "] (tol <= -1), censored fraction " + fmt(ts.censored_fraction()) + " of " +
                std::to_string(ts.ensemble)};
}

bool same_bytes(const std::filesystem::path& a, const std::filesystem::path& b)
{
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    return std::equal(std::istreambuf_iterator<char>(fa), std::istreambuf_iterator<char>(),
                      std::istreambuf_iterator<char>(fb), std::istreambuf_iterator<char>());
}

Outcome determinism(const ExperimentConfig& cfg, const std::filesystem::path& scratch)
{
    const ExperimentConfig small = replay_config(cfg);
    const std::size_t saved = thread_count();
    std::filesystem::remove_all(scratch);
    std::size_t files = 0, differ = 0, runs = 0;
    std::string first;
    std::ostringstream sink;
    for (const auto& name : subcommand_names()) {
        if (name == "selftest")
            continue;
        const auto a = scratch / "a" / name;
        const auto b = scratch / "b" / name;
        // the second run is single-threaded
        set_thread_count(3);
        run_subcommand(name, small, a, sink);
        set_thread_count(1);
        run_subcommand(name, small, b, sink);
        ++runs;
        for (const auto& e : std::filesystem::directory_iterator(a)) {
            if (e.path().filename() == "run_info.json")
                continue;
            ++files;
            const auto other = b / e.path().filename();
            if (!std::filesystem::exists(other) || !same_bytes(e.path(), other)) {
                if (differ++ == 0)
                    first = "; first difference: " + name + "/" + e.path().filename().string();
            }
        }
    }
    set_thread_count(saved);
    return {differ == 0 && files > 0, std::to_string(runs) + " subcommands replayed (3 threads vs 1), " +
                                          std::to_string(files) + " artifacts compared, " + std::to_string(differ) +
                                          " differ" + first};
}

struct CriterionDef {
    int id;
    const char* name;
    double budget;
};

constexpr CriterionDef kCriteria[kCriteriaCount] = {
    {1, "exactness and monotone branches", 1.0},
    {2, "chain rule vs finite differences", 10.0},
    {3, "negative Schwarzian", 1.0},
    {4, "Ulam stationarity", 60.0},
    {5, "Birkhoff/Ulam cross-validation", 120.0},
    {6, "stationary uniqueness", 0.0},
    {7, "stochastic stability trend", 600.0},
    {8, "kernel regularity", 0.0},
    {9, "return-time oracle equivalence", 0.0},
    {10, "distortion window", 0.0},
    {11, "Koebe soundness", 0.0},
    {12, "binding-period witnesses", 0.0},
    {13, "backward contraction", 0.0},
    {14, "nice-set invariant", 0.0},
    {15, "inducing tail", 0.0},
    {16, "determinism", 0.0},
};

} // namespace

ExperimentConfig replay_config(const ExperimentConfig& cfg)
{
    ExperimentConfig s = cfg;
    s.partition_bins = 128;
    s.quadrature_nodes = 8;
    auto& e = s.ensembles;
    e.simulate = 2;
    e.birkhoff_steps = 20000;
    e.birkhoff_burn_in = 100;
    e.returns = 50;
    e.depth = 20;
    e.bc_samples = 200;
    e.nice_sets = 2;
    e.tail = 200;
    e.tail_per_omega = 50;
    e.mane = 100;
    e.growth = 100;
    e.koebe = 5;
    e.distortion = 100;
    auto& h = s.horizons;
    h.simulate = 100;
    h.returns = 300;
    h.depth = 200;
    h.binding = 2000;
    h.bc = 10;
    h.nice_depth = 200;
    h.nice_verify = 150;
    h.markov = 200;
    h.mane = 50;
    h.growth = 100;
    h.distortion = 300;
    h.koebe_s = 8;
    s.scales.binding_ladder.resize(std::min<std::size_t>(3, s.scales.binding_ladder.size()));
    s.scales.bc_ladder.resize(1);
    return s;
}

std::vector<CriterionResult> run_acceptance(const ExperimentConfig& cfg, const AcceptanceOptions& opts)
{
    cfg.validate();
    std::vector<CriterionResult> out;
    for (const CriterionDef& spec : kCriteria) {
        if (!opts.only.empty() && std::find(opts.only.begin(), opts.only.end(), spec.id) == opts.only.end())
            continue;
        CriterionResult r;
        r.id = spec.id;
        r.name = spec.name;
        r.budget = spec.budget;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            switch (spec.id) {
            case 1: o = exactness(cfg); break;
            case 2: o = chain_rule(cfg); break;
            case 3: o = negative_schwarzian(cfg); break;
            case 4: o = ulam_stationarity(cfg); break;
            case 5: o = birkhoff_cross(cfg); break;
            case 6: o = uniqueness(cfg); break;
            case 7: o = stability_trend(cfg); break;
            case 8: o = kernel_regularity(cfg); break;
            case 9: o = return_oracles(cfg); break;
            case 10: o = window_property(cfg); break;
            case 11: o = koebe(cfg); break;
            case 12: o = binding(cfg); break;
            case 13: o = backward_contraction(cfg); break;
            case 14: o = nice_sets(cfg); break;
            case 15: o = inducing_tail(cfg); break;
            case 16: o = determinism(cfg, opts.scratch); break;
            }
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        r.pass = o.pass;
        r.detail = o.detail;
        if (r.budget > 0.0 && r.seconds > r.budget) {
            r.pass = false;
            r.detail += "; over the " + fmt(r.budget) + " s budget";
        }
        if (opts.on_result)
            opts.on_result(r);
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_result(const CriterionResult& r)
{
    char head[128];
    std::snprintf(head, sizeof head, "[%s] %2d %s (%.2f s): ", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                  r.seconds);
    return head + r.detail;
}

} // namespace lorenz
