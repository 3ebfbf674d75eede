#include "lorenz/config.hpp"
#include "lorenz/lab.hpp"
#include "lorenz/parallel.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <map>

using namespace lorenz;

namespace {

// Dotted paths of every scalar or array field ("noise.eps", "scales.binding.zeta", ...).
void leaf_paths(const nlohmann::ordered_json& j, const std::string& prefix, std::vector<std::string>& out)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it.value().is_object())
            leaf_paths(it.value(), path, out);
        else
            out.push_back(path);
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Random orbits, transfer operators and recurrence diagnostics for contracting Lorenz maps"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> threads;
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "master seed (noise.seed)");
    app.add_option("--out", out, "output directory; artifacts go to <out>/<subcommand>");
    app.add_option("--threads", threads, "worker threads, 0 = all cores");
    app.add_option("--set", sets, "override any field: --set noise.eps=0.005")->take_all();

    // every config field as --<dotted.path>, plus a few short aliases
    std::vector<std::string> paths;
    leaf_paths(to_json(ExperimentConfig{}), "", paths);
    std::vector<std::pair<std::string, std::string>> overrides;
    auto add_field = [&](const std::string& flag, const std::string& path) {
        app.add_option_function<std::string>(
               "--" + flag, [&, path](const std::string& v) { overrides.emplace_back(path, v); },
               "config field " + path)
            ->group("Config fields");
    };
    for (const auto& p : paths)
        if (p != "out" && p != "threads")
            add_field(p, p);
    add_field("eps", "noise.eps");
    add_field("ladder", "noise.ladder");
    add_field("kind", "noise.kind");
    add_field("bins", "partition_bins");

    for (const auto& name : subcommand_names())
        app.add_subcommand(name)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigInvalid("--set expects key=value, got '" + s + "'");
            apply_override(cfg, s.substr(0, eq), s.substr(eq + 1));
        }
        for (const auto& [path, v] : overrides)
            apply_override(cfg, path, v);
        if (seed)
            cfg.noise.seed = *seed;
        if (out)
            cfg.out = *out;
        if (threads)
            cfg.threads = *threads;
        cfg.validate();
        set_thread_count(cfg.threads);

        const std::string name = app.get_subcommands().front()->get_name();
        const int status = run_subcommand(name, cfg, std::filesystem::path(cfg.out) / name, std::cout);
        std::cout << "wrote " << (std::filesystem::path(cfg.out) / name).string() << "\n";
        return status;
    } catch (const ConfigInvalid& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
