#include "lorenz/lab.hpp"

#include "lorenz/acceptance.hpp"
#include "lorenz/expansion.hpp"
#include "lorenz/inducing.hpp"
#include "lorenz/orbit.hpp"
#include "lorenz/parallel.hpp"
#include "lorenz/recurrence.hpp"
#include "lorenz/report.hpp"
#include "lorenz/transfer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace lorenz {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Partition partition_of(const ExperimentConfig& cfg) { return Partition(cfg.partition_bins, cfg.params()); }

ordered_json cmd_simulate(const ExperimentConfig& cfg, const fs::path& dir)
{
    const PerturbedFamily fam = cfg.family();
    const NoiseModel nm = cfg.noise_model();
    const std::size_t count = cfg.ensembles.simulate;
    const std::size_t n = cfg.horizons.simulate;
    std::vector<OrbitRecord> orbits(count);
    parallel_for(count, [&](std::size_t i) {
        AuxRng rng(nm.seed, i);
        const auto omega = sample_omega(nm, i, n);
        orbits[i] = random_orbit(fam, rng.uniform(), omega, n);
    });
    CsvWriter csv(dir / "orbits.csv", cfg, {"orbit", "step", "omega", "x", "df", "d2f", "asum"});
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < count; ++i) {
        const auto& o = orbits[i];
        for (std::size_t k = 0; k <= o.length(); ++k) {
            csv << i << k << (k < o.length() ? o.omega[k] : kNaN) << o.points[k] << o.d1[k] << o.d2[k] << o.asum[k];
            csv.end_row();
        }
        const double len = static_cast<double>(o.length());
        rows.push_back({{"orbit", i},
                        {"x0", o.x0},
                        {"steps", o.length()},
                        {"hit_critical", o.hit_critical},
                        {"lyapunov", number_or_null(o.length() ? std::log(o.d1.back()) / len : kNaN)}});
    }
    return {{"eps", nm.eps}, {"orbits", rows}};
}

ordered_json cmd_density(const ExperimentConfig& cfg, const fs::path& dir)
{
    const PerturbedFamily fam = cfg.family();
    const Partition part = partition_of(cfg);
    const NoiseModel nm = cfg.noise_model();
    const auto m = build_ulam(fam, nm.eps > 0.0 ? &nm : nullptr, part, {cfg.quadrature_nodes});
    ordered_json res{{"mode", m.mode}, {"eps", nm.eps}, {"bins", part.size()}};
    std::optional<StationaryResult> st;
    try {
        st = stationary_density(m);
        res["ulam"] = {{"residual", st->residual}, {"iterations", st->iterations}};
    } catch (const Error& e) {
        res["ulam"] = {{"error", e.what()}};
    }
    const auto b = birkhoff_density(fam, nm, 0.1234567, cfg.ensembles.birkhoff_steps, cfg.ensembles.birkhoff_burn_in,
                                    part);
    res["birkhoff"] = {{"steps", cfg.ensembles.birkhoff_steps},
                       {"burn_in", cfg.ensembles.birkhoff_burn_in},
                       {"restarts", b.restarts}};
    if (st)
        res["l1_ulam_birkhoff"] = l1_distance(st->density, b.density);
    CsvWriter csv(dir / "density.csv", cfg, {"bin_left", "bin_right", "ulam", "birkhoff"});
    for (std::size_t i = 0; i < part.size(); ++i) {
        csv << part.left(i) << part.right(i) << (st ? st->density.weights[i] : kNaN) << b.density.weights[i];
        csv.end_row();
    }
    return res;
}

ordered_json cmd_sweep(const ExperimentConfig& cfg, const fs::path& dir)
{
    const PerturbedFamily fam = cfg.family();
    const Partition part = partition_of(cfg);
    SweepOptions so;
    so.kind = noise_kind_from_string(cfg.noise.kind);
    so.ulam.nodes = cfg.quadrature_nodes;
    const auto sw = stability_sweep(fam, cfg.noise.ladder, part, so);
    CsvWriter rows(dir / "sweep.csv", cfg, {"eps", "l1", "residual", "iterations", "converged", "error"});
    ordered_json out = ordered_json::array();
    bool trend = true;
    for (std::size_t i = 0; i < sw.rows.size(); ++i) {
        const auto& r = sw.rows[i];
        rows << r.eps << r.l1 << r.residual << r.iterations << r.converged << r.error;
        rows.end_row();
        out.push_back({{"eps", r.eps},
                       {"l1", r.l1},
                       {"converged", r.converged},
                       {"error", r.error}});
        if (i > 0 && r.converged && sw.rows[i - 1].converged && r.l1 > 1.1 * sw.rows[i - 1].l1)
            trend = false;
    }
    // stationary densities per rung, recomputed so the table is self-contained
    std::vector<std::string> cols{"bin_left", "bin_right", "zeta0"};
    std::vector<std::vector<double>> dens;
    for (double eps : cfg.noise.ladder) {
        cols.push_back("eps=" + std::to_string(eps));
        const NoiseModel nm = cfg.noise_model(eps);
        try {
            dens.push_back(stationary_density(build_ulam(fam, &nm, part, so.ulam), so.stationary).density.weights);
        } catch (const Error&) {
            dens.push_back(std::vector<double>(part.size(), kNaN));
        }
    }
    CsvWriter d(dir / "densities.csv", cfg, cols);
    for (std::size_t i = 0; i < part.size(); ++i) {
        d << part.left(i) << part.right(i) << sw.zeta0.weights[i];
        for (const auto& w : dens)
            d << w[i];
        d.end_row();
    }
    return {{"zeta0_residual", sw.zeta0_residual}, {"rows", out}, {"nonincreasing_within_10pct", trend}};
}

ordered_json cmd_returns(const ExperimentConfig& cfg, const fs::path& dir)
{
    const PerturbedFamily fam = cfg.family();
    const NoiseModel nm = cfg.noise_model();
    const auto& sc = cfg.scales;
    const std::size_t count = cfg.ensembles.returns;
    const std::size_t horizon = cfg.horizons.returns;
    const HatHParams hp{.delta = sc.delta, .theta = sc.theta, .theta0 = sc.theta0, .tau = sc.tau,
                        .delta_star = sc.delta_star, .horizon = horizon};
    struct Row {
        double x = 0.0;
        std::optional<std::size_t> landing;
        std::optional<ReturnEvent> h, hh;
        std::string error;
    };
    std::vector<Row> rows(count);
    parallel_for(count, [&](std::size_t i) {
        AuxRng rng(nm.seed, i);
        OmegaStream om(nm, i);
        Row& r = rows[i];
        r.x = rng.uniform();
        try {
            r.landing = landing_time(fam, om, r.x, sc.delta, horizon);
            r.h = good_return_time(fam, om, r.x, sc.delta, sc.theta, horizon);
            r.hh = hat_h(fam, om, r.x, hp);
        } catch (const CriticalHit& e) {
            r.error = e.what();
        }
    });
    CsvWriter csv(dir / "returns.csv", cfg,
                  {"sample", "x", "landing", "h", "hhat", "hhat_kind", "hhat_delta", "error"});
    std::size_t nl = 0, nh = 0, nhh = 0, ntau = 0;
    double sl = 0.0, sh = 0.0, shh = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const Row& r = rows[i];
        std::optional<std::size_t> h, hh;
        if (r.h)
            h = r.h->s;
        if (r.hh)
            hh = r.hh->s;
        csv << i << r.x << r.landing << h << hh << (r.hh ? to_string(r.hh->kind) : "")
            << (r.hh ? r.hh->delta : kNaN) << r.error;
        csv.end_row();
        if (r.landing) {
            ++nl;
            sl += static_cast<double>(*r.landing);
        }
        if (h) {
            ++nh;
            sh += static_cast<double>(*h);
        }
        if (hh) {
            ++nhh;
            shh += static_cast<double>(*hh);
            ntau += r.hh->kind == ReturnKind::tau_scale;
        }
    }
    auto mean = [](double s, std::size_t n) { return number_or_null(n ? s / static_cast<double>(n) : kNaN); };
    return {{"samples", count},
            {"horizon", horizon},
            {"landing", {{"defined", nl}, {"mean", mean(sl, nl)}}},
            {"h", {{"defined", nh}, {"mean", mean(sh, nh)}}},
            {"hat_h", {{"defined", nhh}, {"mean", mean(shh, nhh)}, {"tau_scale", ntau}}}};
}

ordered_json cmd_depth(const ExperimentConfig& cfg, const fs::path& dir)
{
    const PerturbedFamily fam = cfg.family();
    const NoiseModel nm = cfg.noise_model();
    const auto& sc = cfg.scales;
    const std::size_t count = cfg.ensembles.depth;
    const std::size_t n = cfg.horizons.depth;
    std::vector<DepthTrace> traces(count);
    std::vector<std::string> errors(count);
    parallel_for(count, [&](std::size_t i) {
        AuxRng rng(nm.seed, i);
        OmegaStream om(nm, i);
        const double x = rng.uniform();
        try {
            traces[i] = depth_trace(fam, om, x, sc.depth_eps, n);
        } catch (const CriticalHit& e) {
            traces[i].x0 = x;
            errors[i] = e.what();
        }
    });
    CsvWriter csv(dir / "depth.csv", cfg,
                  {"sample", "x", "steps", "Q", "Gamma", "max_q", "bad_clause1", "bad_clause2", "bad", "bad_c",
                   "error"});
    std::size_t nbad = 0, nbadc = 0, deep = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const auto& t = traces[i];
        if (t.size() == 0) {
            csv << i << t.x0 << std::size_t{0} << kNaN << kNaN << kNaN << false << false << false << false
                << errors[i];
            csv.end_row();
            continue;
        }
        const auto flags = t.bad(sc.bad_m, sc.kappa);
        const bool bc = t.bad_c(sc.bad_m, sc.kappa);
        const int mq = *std::max_element(t.q.begin(), t.q.end());
        csv << i << t.x0 << t.size() << static_cast<double>(t.Q(0, t.size() - 1))
            << static_cast<double>(t.Gamma(0, t.size() - 1)) << mq << flags.clause1 << flags.clause2 << flags.bad()
            << bc << errors[i];
        csv.end_row();
        nbad += flags.bad();
        nbadc += bc;
        deep += mq > 0;
    }
    return {{"samples", count},
            {"eps", sc.depth_eps},
            {"m", sc.bad_m},
            {"kappa", sc.kappa},
            {"bad", nbad},
            {"bad_c", nbadc},
            {"positive_depth", deep},
            {"approximate", true}};
}

ordered_json cmd_binding(const ExperimentConfig& cfg, const fs::path& dir)
{
    const MapParams p = cfg.params();
    BindingConstants k = cfg.scales.binding;
    k.delta_star = cfg.scales.delta_star;
    CsvWriter csv(dir / "binding.csv", cfg,
                  {"side", "delta", "M", "N", "M2", "A_M", "df_M1", "delta_prime", "verified", "error"});
    ordered_json sides = ordered_json::object();
    double W0 = kNaN;
    for (Side side : {Side::left, Side::right}) {
        bool monotone = true;
        std::size_t prev = 0;
        for (double delta : cfg.scales.binding_ladder) {
            try {
                const auto res = binding_period(p, side, delta, k, cfg.horizons.binding);
                W0 = res.W0;
                std::optional<std::size_t> M;
                const auto& r = res.record;
                if (r) {
                    M = r->M;
                    monotone = monotone && r->M >= prev;
                    prev = r->M;
                }
                csv << to_string(side) << delta << M << res.N << res.M2 << (r ? r->A_M : kNaN)
                    << (r ? r->df_M1 : kNaN) << (r ? r->delta_prime : kNaN) << (r && r->verify(p))
                    << (r ? "" : "no admissible M");
            } catch (const Error& e) {
                csv << to_string(side) << delta << std::optional<std::size_t>{} << std::size_t{0} << std::size_t{0}
                    << kNaN << kNaN << kNaN << false << e.what();
            }
            csv.end_row();
        }
        sides[to_string(side)] = {{"nondecreasing", monotone}};
    }
    return {{"W0", number_or_null(W0)},
            {"constants", {{"theta", k.theta}, {"L", k.L}, {"zeta", k.zeta}, {"theta1", k.theta1}}},
            {"sides", sides}};
}

ordered_json cmd_bc(const ExperimentConfig& cfg, const fs::path& dir)
{
    const MapParams p = cfg.params();
    const auto& sc = cfg.scales;
    CsvWriter rungs(dir / "bc.csv", cfg,
                    {"delta", "r", "s_max", "components", "near_cv", "max_ratio", "violations", "vacuous", "error"});
    CsvWriter viol(dir / "bc_violations.csv", cfg, {"delta", "s", "W_lo", "W_hi", "dist_cv"});
    std::size_t total = 0, comps = 0;
    for (double delta : sc.bc_ladder) {
        const std::vector<double> one{delta};
        try {
            const auto rep = backward_contraction_check(
                p, sc.bc_r, one, cfg.horizons.bc, {.samples = cfg.ensembles.bc_samples, .seed = cfg.noise.seed});
            rungs << delta << sc.bc_r << cfg.horizons.bc << rep.components << rep.near_cv << rep.max_ratio
                  << rep.violations.size() << rep.vacuous << "";
            for (const auto& v : rep.violations) {
                viol << v.delta << v.s << v.W.lo << v.W.hi << v.dist_cv;
                viol.end_row();
            }
            total += rep.violations.size();
            comps += rep.components;
        } catch (const Error& e) {
            rungs << delta << sc.bc_r << cfg.horizons.bc << std::size_t{0} << std::size_t{0} << kNaN
                  << std::size_t{0} << false << e.what();
        }
        rungs.end_row();
    }
    return {{"r", sc.bc_r}, {"components", comps}, {"violations", total}};
}

ordered_json cmd_nice(const ExperimentConfig& cfg, const fs::path& dir)
{
    const PerturbedFamily fam = cfg.family();
    const NoiseModel nm = cfg.noise_model(cfg.scales.nice_eps);
    const std::size_t count = cfg.ensembles.nice_sets;
    std::vector<NiceSetApprox> sets(count);
    std::vector<std::string> errors(count);
    parallel_for(count, [&](std::size_t i) {
        OmegaStream om(nm, i);
        try {
            sets[i] = nice_set_build(fam, om, cfg.scales.nice_delta,
                                     {.depth = cfg.horizons.nice_depth, .verify_horizon = cfg.horizons.nice_verify});
        } catch (const Error& e) {
            sets[i] = nice_set_at(fam, om, cfg.scales.nice_delta, cfg.horizons.nice_depth);
            errors[i] = e.what();
        }
    });
    CsvWriter csv(dir / "nice_sets.csv", cfg,
                  {"omega", "V_lo", "V_hi", "inner_lo", "inner_hi", "outer_lo", "outer_hi", "contained", "extensions",
                   "boundary_touches", "nice", "error"});
    std::size_t nice = 0, contained = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const auto& s = sets[i];
        csv << i << s.V.lo << s.V.hi << s.inner.lo << s.inner.hi << s.outer.lo << s.outer.hi << s.contained()
            << s.extensions << s.boundary_touches << errors[i].empty() << errors[i];
        csv.end_row();
        nice += errors[i].empty();
        contained += s.contained();
    }
    return {{"delta", cfg.scales.nice_delta},
            {"eps", nm.eps},
            {"depth", cfg.horizons.nice_depth},
            {"verify_horizon", cfg.horizons.nice_verify},
            {"omegas", count},
            {"nice", nice},
            {"contained", contained}};
}

ordered_json cmd_tail(const ExperimentConfig& cfg, const fs::path& dir)
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
    CsvWriter csv(dir / "survival.csv", cfg, {"m", "survival"});
    for (std::size_t i = 0; i < ts.m_values.size(); ++i) {
        csv << ts.m_values[i] << ts.survival[i];
        csv.end_row();
    }
    return {{"ensemble", ts.ensemble},
            {"eps", nm.eps},
            {"delta0", to.delta0},
            {"theta", to.theta},
            {"horizon", ts.horizon},
            {"censored", ts.censored},
            {"censored_fraction", ts.censored_fraction()},
            {"fit", {{"slope", number_or_null(ts.fit_slope)},
                     {"intercept", number_or_null(ts.fit_intercept)},
                     {"m_lo", ts.fit_lo},
                     {"m_hi", ts.fit_hi},
                     {"points", ts.fit_points}}},
            {"h_moment", {{"p", ts.moment_p}, {"value", number_or_null(ts.h_moment)}, {"missing", ts.h_missing}}},
            {"m_exceeds_h", ts.h_violations}};
}

ordered_json cmd_expansion(const ExperimentConfig& cfg, const fs::path& dir)
{
    const PerturbedFamily fam = cfg.family();
    const MapParams& p = fam.base();
    const NoiseModel nm = cfg.noise_model();
    const auto& sc = cfg.scales;
    ordered_json res;

    {
        const Interval U = tilde_B(p, sc.mane_delta, sc.delta_star).interval();
        const ManeOptions mo{.ensemble = cfg.ensembles.mane, .horizon = cfg.horizons.mane, .C_ref = sc.mane_C_ref,
                             .seed = nm.seed};
        CsvWriter csv(dir / "mane.csv", cfg,
                      {"U_lo", "U_hi", "random", "eps", "C_ref", "lambda", "eta", "orbits", "samples", "worst_n"});
        ordered_json rows = ordered_json::array();
        for (bool random : {false, true}) {
            const auto r = mane_estimate(fam, random ? &nm : nullptr, U, mo);
            csv << U.lo << U.hi << r.random << (random ? nm.eps : 0.0) << r.C_ref << r.lambda << r.eta << r.orbits
                << r.samples << r.worst_n;
            csv.end_row();
            rows.push_back({{"random", r.random}, {"lambda", r.lambda}, {"eta", r.eta}});
        }
        res["mane"] = {{"U", {U.lo, U.hi}}, {"C_ref", sc.mane_C_ref}, {"fits", rows}};
    }

    {
        const GrowthOptions go{.ensemble = cfg.ensembles.growth, .horizon = cfg.horizons.growth};
        std::vector<std::optional<GrowthRung>> rungs(cfg.noise.ladder.size());
        std::vector<std::string> errors(rungs.size());
        try {
            const auto rep = growth_envelopes(fam, nm, cfg.noise.ladder, go);
            for (std::size_t i = 0; i < rungs.size(); ++i)
                rungs[i] = rep.rungs[i];
        } catch (const Error&) {
            // retry rung by rung so one failure does not take the sweep down
            for (std::size_t i = 0; i < rungs.size(); ++i) {
                try {
                    const std::vector<double> one{cfg.noise.ladder[i]};
                    rungs[i] = growth_envelopes(fam, nm, one, go).rungs.at(0);
                } catch (const Error& e) {
                    errors[i] = e.what();
                }
            }
        }
        CsvWriter csv(dir / "growth.csv", cfg,
                      {"eps", "D", "Lambda_hat", "alpha_hat", "alpha_lo", "alpha_hi", "A_hat", "near_cv_samples",
                       "avoiding_samples", "violations", "error"});
        double amin = kNaN, amax = kNaN;
        bool increasing = true;
        std::optional<double> prev;
        for (std::size_t i = 0; i < rungs.size(); ++i) {
            const auto& r = rungs[i];
            if (!r) {
                csv << cfg.noise.ladder[i] << kNaN << kNaN << kNaN << kNaN << kNaN << kNaN << std::size_t{0}
                    << std::size_t{0} << std::size_t{0} << errors[i];
                csv.end_row();
                continue;
            }
            csv << r->eps << r->D << r->Lambda_hat << r->alpha_hat << r->alpha_lo << r->alpha_hi << r->A_hat
                << r->near_cv.s.size() << r->avoiding.s.size() << (r->near_cv.violations + r->avoiding.violations)
                << "";
            csv.end_row();
            amin = std::isnan(amin) ? r->A_hat : std::min(amin, r->A_hat);
            amax = std::isnan(amax) ? r->A_hat : std::max(amax, r->A_hat);
            if (prev && !(r->Lambda_hat > *prev))
                increasing = false;
            prev = r->Lambda_hat;
        }
        res["growth"] = {{"Lambda_increasing", increasing}, {"A_spread", number_or_null(amax / amin)}};
    }

    {
        const auto ks = koebe_random_branches(p, cfg.ensembles.koebe, cfg.horizons.koebe_s, sc.koebe_tau, nm.seed);
        CsvWriter csv(dir / "koebe.csv", cfg,
                      {"branch", "s", "T_lo", "T_hi", "J_lo", "J_hi", "ratio", "ratio_fine", "bound", "pass",
                       "macro_margin", "tau_prime", "macro_pass", "one_sided_points", "one_sided_worst",
                       "one_sided_pass"});
        for (std::size_t i = 0; i < ks.results.size(); ++i) {
            const auto& r = ks.results[i];
            csv << i << r.s << r.T.lo << r.T.hi << r.J.lo << r.J.hi << r.ratio << r.ratio_fine << r.bound << r.pass
                << r.macro_margin << r.tau_prime << r.macro_pass << r.one_sided_points << r.one_sided_worst
                << r.one_sided_pass;
            csv.end_row();
        }
        res["koebe"] = {{"tau", sc.koebe_tau},
                        {"checked", ks.checked},
                        {"attempts", ks.attempts},
                        {"violations", ks.violations},
                        {"worst_ratio_over_bound", ks.worst_ratio_over_bound}};
    }

    {
        const DistortionOptions dopt{.ensemble = cfg.ensembles.distortion, .horizon = cfg.horizons.distortion};
        const auto tr = total_distortion_trend(fam, nm, cfg.noise.ladder, dopt);
        CsvWriter csv(dir / "distortion.csv", cfg, {"eps", "samples", "theta_hat", "n_at_max", "mean_ratio"});
        for (const auto& r : tr.rungs) {
            csv << r.eps << r.samples << r.theta_hat << r.n_at_max << r.mean_ratio;
            csv.end_row();
        }
        res["distortion"] = {{"nonincreasing_within_20pct", tr.nonincreasing}};
    }
    return res;
}

} // namespace

const std::vector<std::string>& subcommand_names()
{
    static const std::vector<std::string> names{"simulate", "density",   "stability-sweep", "returns",
                                                "depth",    "binding",   "bc-check",        "nice-set",
                                                "inducing-tail", "expansion", "selftest"};
    return names;
}

int run_subcommand(const std::string& name, const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log)
{
    cfg.validate();
    fs::create_directories(out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    ordered_json res;
    int status = 0;
    if (name == "simulate")
        res = cmd_simulate(cfg, out_dir);
    else if (name == "density")
        res = cmd_density(cfg, out_dir);
    else if (name == "stability-sweep")
        res = cmd_sweep(cfg, out_dir);
    else if (name == "returns")
        res = cmd_returns(cfg, out_dir);
    else if (name == "depth")
        res = cmd_depth(cfg, out_dir);
    else if (name == "binding")
        res = cmd_binding(cfg, out_dir);
    else if (name == "bc-check")
        res = cmd_bc(cfg, out_dir);
    else if (name == "nice-set")
        res = cmd_nice(cfg, out_dir);
    else if (name == "inducing-tail")
        res = cmd_tail(cfg, out_dir);
    else if (name == "expansion")
        res = cmd_expansion(cfg, out_dir);
    else if (name == "selftest") {
        AcceptanceOptions ao;
        ao.scratch = out_dir / "replay";
        ao.on_result = [&](const CriterionResult& r) { log << format_result(r) << std::endl; };
        const auto results = run_acceptance(cfg, ao);
        CsvWriter csv(out_dir / "acceptance.csv", cfg, {"id", "name", "pass", "seconds", "budget", "detail"});
        ordered_json arr = ordered_json::array();
        std::size_t failed = 0;
        for (const auto& r : results) {
            csv << r.id << r.name << r.pass << r.seconds << r.budget << r.detail;
            csv.end_row();
            arr.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
            failed += !r.pass;
        }
        res = {{"criteria", arr}, {"failed", failed}};
        status = failed == 0 ? 0 : 1;
    } else
        throw ConfigInvalid("unknown subcommand '" + name + "'");

    write_summary(out_dir / "summary.json", name, cfg, res);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_run_info(out_dir / "run_info.json", name, secs, thread_count());
    return status;
}

} // namespace lorenz
