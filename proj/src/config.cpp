#include "lorenz/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace lorenz {

using nlohmann::json;
using nlohmann::ordered_json;

MapParams ExperimentConfig::params() const { return MapParams(map.c, map.ell, map.u, map.v); }

PerturbedFamily ExperimentConfig::family() const { return PerturbedFamily(params(), map.taper_margin); }

NoiseModel ExperimentConfig::noise_model() const { return noise_model(noise.eps); }

NoiseModel ExperimentConfig::noise_model(double eps) const
{
    NoiseModel m;
    m.eps = eps;
    m.kind = noise_kind_from_string(noise.kind);
    m.L = noise.L;
    m.seed = noise.seed;
    return m;
}

double theta_cap(double ell, double theta0)
{
    const double k = std::pow(2.0, 1.0 / ell);
    return std::min(theta0 / (4.0 * k), 1.0 / (k * k * std::exp(3.0)));
}

namespace {

class Problems {
public:
    void add(const std::string& field, const std::string& what) { list_.push_back(field + ": " + what); }
    void positive(const std::string& field, double x)
    {
        if (!(x > 0.0))
            add(field, "must be positive");
    }
    void at_least(const std::string& field, std::size_t x, std::size_t lo)
    {
        if (x < lo)
            add(field, "must be at least " + std::to_string(lo));
    }
    void decreasing(const std::string& field, const std::vector<double>& v)
    {
        if (v.empty()) {
            add(field, "must not be empty");
            return;
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!(v[i] > 0.0))
                add(field, "entries must be positive");
            if (i > 0 && !(v[i] < v[i - 1]))
                add(field, "must be sorted in strictly decreasing order");
        }
    }
    bool empty() const { return list_.empty(); }
    std::string message() const
    {
        std::string s = "invalid configuration";
        for (const auto& p : list_)
            s += "\n  " + p;
        return s;
    }

private:
    std::vector<std::string> list_;
};

} // namespace

void ExperimentConfig::validate() const
{
    Problems pr;
    bool map_ok = true;
    try {
        params();
    } catch (const Error& e) {
        pr.add("map", e.what());
        map_ok = false;
    }
    try {
        noise_kind_from_string(noise.kind);
    } catch (const Error& e) {
        pr.add("noise.kind", e.what());
    }
    if (!(noise.L > 1.0))
        pr.add("noise.L", "must exceed 1");
    if (noise.eps < 0.0)
        pr.add("noise.eps", "must be nonnegative");
    pr.decreasing("noise.ladder", noise.ladder);
    pr.at_least("partition_bins", partition_bins, 2);
    pr.at_least("quadrature_nodes", quadrature_nodes, 1);

    if (map_ok) {
        const MapParams p = params();
        try {
            const PerturbedFamily f = family();
            const double em = f.eps_max();
            if (noise.eps > em)
                pr.add("noise.eps", "exceeds eps_max " + std::to_string(em));
            for (double e : noise.ladder)
                if (e > em)
                    pr.add("noise.ladder", "entry " + std::to_string(e) + " exceeds eps_max " + std::to_string(em));
            if (scales.nice_eps > em)
                pr.add("scales.nice_eps", "exceeds eps_max " + std::to_string(em));
        } catch (const Error& e) {
            pr.add("map.taper_margin", e.what());
        }
        const double limit = std::min({p.u() - (1.0 - p.v()), p.u(), p.v()});
        auto in_range = [&](const std::string& field, double d) {
            if (!(d > 0.0 && d < limit))
                pr.add(field, "must lie in (0, " + std::to_string(limit) + ")");
        };
        in_range("scales.delta", scales.delta);
        in_range("scales.delta0", scales.delta0);
        in_range("scales.depth_eps", scales.depth_eps);
        in_range("scales.nice_delta", scales.nice_delta);
        in_range("scales.mane_delta", scales.mane_delta);
        in_range("scales.delta_star", scales.delta_star);
        if (2.0 * scales.nice_delta >= limit)
            pr.add("scales.nice_delta", "B~(2 delta) must exist");

        const double cap = theta_cap(p.ell(), scales.theta0);
        if (!(scales.theta > 0.0 && scales.theta <= cap))
            pr.add("scales.theta", "must lie in (0, " + std::to_string(cap) + "], the inducing-time cap");
        try {
            scales.binding.validate(p, critical_sum_W0(p));
        } catch (const Error& e) {
            pr.add("scales.binding", e.what());
        }
    }
    pr.positive("scales.theta0", scales.theta0);
    pr.positive("scales.tau", scales.tau);
    pr.positive("scales.kappa", scales.kappa);
    pr.positive("scales.bad_m", scales.bad_m);
    pr.positive("scales.koebe_tau", scales.koebe_tau);
    pr.positive("scales.mane_C_ref", scales.mane_C_ref);
    if (!(scales.bc_r > 1.0))
        pr.add("scales.bc_r", "must exceed 1");
    pr.decreasing("scales.binding_ladder", scales.binding_ladder);
    pr.decreasing("scales.bc_ladder", scales.bc_ladder);
    if (scales.nice_eps > scales.nice_delta)
        pr.add("scales.nice_eps", "must not exceed scales.nice_delta");
    if (ensembles.birkhoff_steps <= ensembles.birkhoff_burn_in)
        pr.add("ensembles.birkhoff_steps", "must exceed ensembles.birkhoff_burn_in");
    if (horizons.nice_verify > horizons.nice_depth)
        pr.add("horizons.nice_verify", "must not exceed horizons.nice_depth");
    pr.at_least("horizons.returns", horizons.returns, 1);
    pr.at_least("horizons.depth", horizons.depth, 1);
    pr.at_least("horizons.binding", horizons.binding, 1);
    pr.at_least("horizons.koebe_s", horizons.koebe_s, 1);
    pr.at_least("ensembles.tail_per_omega", ensembles.tail_per_omega, 1);
    if (!pr.empty())
        throw ConfigInvalid(pr.message());
}

ordered_json to_json(const ExperimentConfig& c)
{
    ordered_json j;
    j["map"] = {{"c", c.map.c}, {"ell", c.map.ell}, {"u", c.map.u}, {"v", c.map.v}, {"taper_margin", c.map.taper_margin}};
    j["noise"] = {{"kind", c.noise.kind},
                  {"eps", c.noise.eps},
                  {"ladder", c.noise.ladder},
                  {"L", c.noise.L},
                  {"seed", c.noise.seed}};
    j["partition_bins"] = c.partition_bins;
    j["quadrature_nodes"] = c.quadrature_nodes;
    const auto& e = c.ensembles;
    j["ensembles"] = {{"simulate", e.simulate},
                      {"birkhoff_steps", e.birkhoff_steps},
                      {"birkhoff_burn_in", e.birkhoff_burn_in},
                      {"returns", e.returns},
                      {"depth", e.depth},
                      {"bc_samples", e.bc_samples},
                      {"nice_sets", e.nice_sets},
                      {"tail", e.tail},
                      {"tail_per_omega", e.tail_per_omega},
                      {"mane", e.mane},
                      {"growth", e.growth},
                      {"koebe", e.koebe},
                      {"distortion", e.distortion}};
    const auto& h = c.horizons;
    j["horizons"] = {{"simulate", h.simulate},
                     {"returns", h.returns},
                     {"depth", h.depth},
                     {"binding", h.binding},
                     {"bc", h.bc},
                     {"nice_depth", h.nice_depth},
                     {"nice_verify", h.nice_verify},
                     {"tail_nice_depth", h.tail_nice_depth},
                     {"markov", h.markov},
                     {"mane", h.mane},
                     {"growth", h.growth},
                     {"distortion", h.distortion},
                     {"koebe_s", h.koebe_s}};
    const auto& s = c.scales;
    j["scales"] = {{"theta", s.theta},
                   {"theta0", s.theta0},
                   {"tau", s.tau},
                   {"delta", s.delta},
                   {"delta0", s.delta0},
                   {"delta_star", s.delta_star},
                   {"kappa", s.kappa},
                   {"bad_m", s.bad_m},
                   {"depth_eps", s.depth_eps},
                   {"binding",
                    {{"theta", s.binding.theta},
                     {"L", s.binding.L},
                     {"zeta", s.binding.zeta},
                     {"theta1", s.binding.theta1}}},
                   {"binding_ladder", s.binding_ladder},
                   {"bc_r", s.bc_r},
                   {"bc_ladder", s.bc_ladder},
                   {"nice_delta", s.nice_delta},
                   {"nice_eps", s.nice_eps},
                   {"koebe_tau", s.koebe_tau},
                   {"mane_delta", s.mane_delta},
                   {"mane_C_ref", s.mane_C_ref}};
    j["threads"] = c.threads;
    j["out"] = c.out;
    return j;
}

namespace {

// Overlays `user` onto `base`, rejecting keys that base does not have.
void merge(ordered_json& base, const json& user, const std::string& where)
{
    if (!user.is_object())
        throw ConfigInvalid(where.empty() ? "configuration must be a JSON object" : where + ": expected an object");
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string field = where.empty() ? it.key() : where + "." + it.key();
        if (!base.contains(it.key()))
            throw ConfigInvalid(field + ": unknown field");
        ordered_json& slot = base[it.key()];
        if (slot.is_object())
            merge(slot, it.value(), field);
        else
            slot = it.value();
    }
}

template <class T>
void read(const ordered_json& j, const std::string& dotted, T& out)
{
    const ordered_json* node = &j;
    std::stringstream ss(dotted);
    std::string part;
    while (std::getline(ss, part, '.'))
        node = &node->at(part);
    try {
        if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
            if (node->is_number_float()) {
                const double d = node->get<double>();
                if (!(d >= 0.0 && d == std::floor(d)))
                    throw ConfigInvalid(dotted + ": expected a nonnegative integer");
                out = static_cast<T>(d);
                return;
            }
            if (node->is_number_integer() && node->get<long long>() < 0)
                throw ConfigInvalid(dotted + ": expected a nonnegative integer");
        }
        out = node->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigInvalid(dotted + ": wrong type (" + std::string(node->type_name()) + ")");
    }
}

ExperimentConfig parse(const ordered_json& j)
{
    ExperimentConfig c;
    read(j, "map.c", c.map.c);
    read(j, "map.ell", c.map.ell);
    read(j, "map.u", c.map.u);
    read(j, "map.v", c.map.v);
    read(j, "map.taper_margin", c.map.taper_margin);
    read(j, "noise.kind", c.noise.kind);
    read(j, "noise.eps", c.noise.eps);
    read(j, "noise.ladder", c.noise.ladder);
    read(j, "noise.L", c.noise.L);
    read(j, "noise.seed", c.noise.seed);
    read(j, "partition_bins", c.partition_bins);
    read(j, "quadrature_nodes", c.quadrature_nodes);
    auto& e = c.ensembles;
    read(j, "ensembles.simulate", e.simulate);
    read(j, "ensembles.birkhoff_steps", e.birkhoff_steps);
    read(j, "ensembles.birkhoff_burn_in", e.birkhoff_burn_in);
    read(j, "ensembles.returns", e.returns);
    read(j, "ensembles.depth", e.depth);
    read(j, "ensembles.bc_samples", e.bc_samples);
    read(j, "ensembles.nice_sets", e.nice_sets);
    read(j, "ensembles.tail", e.tail);
    read(j, "ensembles.tail_per_omega", e.tail_per_omega);
    read(j, "ensembles.mane", e.mane);
    read(j, "ensembles.growth", e.growth);
    read(j, "ensembles.koebe", e.koebe);
    read(j, "ensembles.distortion", e.distortion);
    auto& h = c.horizons;
    read(j, "horizons.simulate", h.simulate);
    read(j, "horizons.returns", h.returns);
    read(j, "horizons.depth", h.depth);
    read(j, "horizons.binding", h.binding);
    read(j, "horizons.bc", h.bc);
    read(j, "horizons.nice_depth", h.nice_depth);
    read(j, "horizons.nice_verify", h.nice_verify);
    read(j, "horizons.tail_nice_depth", h.tail_nice_depth);
    read(j, "horizons.markov", h.markov);
    read(j, "horizons.mane", h.mane);
    read(j, "horizons.growth", h.growth);
    read(j, "horizons.distortion", h.distortion);
    read(j, "horizons.koebe_s", h.koebe_s);
    auto& s = c.scales;
    read(j, "scales.theta", s.theta);
    read(j, "scales.theta0", s.theta0);
    read(j, "scales.tau", s.tau);
    read(j, "scales.delta", s.delta);
    read(j, "scales.delta0", s.delta0);
    read(j, "scales.delta_star", s.delta_star);
    read(j, "scales.kappa", s.kappa);
    read(j, "scales.bad_m", s.bad_m);
    read(j, "scales.depth_eps", s.depth_eps);
    read(j, "scales.binding.theta", s.binding.theta);
    read(j, "scales.binding.L", s.binding.L);
    read(j, "scales.binding.zeta", s.binding.zeta);
    read(j, "scales.binding.theta1", s.binding.theta1);
    s.binding.delta_star = s.delta_star;
    read(j, "scales.binding_ladder", s.binding_ladder);
    read(j, "scales.bc_r", s.bc_r);
    read(j, "scales.bc_ladder", s.bc_ladder);
    read(j, "scales.nice_delta", s.nice_delta);
    read(j, "scales.nice_eps", s.nice_eps);
    read(j, "scales.koebe_tau", s.koebe_tau);
    read(j, "scales.mane_delta", s.mane_delta);
    read(j, "scales.mane_C_ref", s.mane_C_ref);
    read(j, "threads", c.threads);
    read(j, "out", c.out);
    return c;
}

} // namespace

ExperimentConfig config_from_json(const json& j)
{
    ordered_json base = to_json(ExperimentConfig{});
    merge(base, j, "");
    return parse(base);
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigInvalid(path + ": cannot open configuration file");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigInvalid(path + ": " + e.what());
    }
    return config_from_json(j);
}

void apply_override(ExperimentConfig& cfg, const std::string& dotted, const std::string& value)
{
    ordered_json j = to_json(cfg);
    ordered_json* node = &j;
    std::stringstream ss(dotted);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (!node->is_object() || !node->contains(part))
            throw ConfigInvalid(dotted + ": unknown field");
        node = &(*node)[part];
    }
    if (node->is_object())
        throw ConfigInvalid(dotted + ": cannot override a whole section");
    ordered_json v;
    try {
        v = ordered_json::parse(value);
    } catch (const json::parse_error&) {
        v = value;  // bare strings
    }
    *node = v;
    cfg = parse(j);
}

} // namespace lorenz
