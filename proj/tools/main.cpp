#include "commands.hpp"

#include "bessel/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace bessel::cli;

int main(int argc, char** argv) {
    CLI::App app{"Bessel-process semigroup checks, semilinear solver and Monte Carlo validation"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    bool print_config = false;

    app.add_option("-c,--config", config_path, "key=value config file");
    app.add_option("--set", overrides, "override one key, e.g. --set delta=0.25");
    app.add_option("-o,--out", out_dir, "output directory (overrides outputs=)");
    app.add_option("--seed", seed, "Monte Carlo seed (overrides mc.seed=)");
    app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 256u));
    app.add_flag("--print-config", print_config, "print the resolved config and exit");

    using Command = int (*)(const RunConfig&, std::ostream&);
    std::vector<std::pair<CLI::App*, Command>> commands{
        {app.add_subcommand("kernel-check", "normalization, symmetry, invariance, Chapman-Kolmogorov, Schauder"),
         cmd_kernel_check},
        {app.add_subcommand("solve", "solve the semilinear problem by Picard iteration"), cmd_solve},
        {app.add_subcommand("mc-validate", "Monte Carlo law, Feynman-Kac and martingale checks"), cmd_mc_validate},
        {app.add_subcommand("properties", "run all of the above"), cmd_properties},
    };
    for (auto& [sub, fn] : commands) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        RunConfig config = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("--set expects key=value, got '" + kv + "'");
            }
            config.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (!out_dir.empty()) {
            config.outputs = out_dir;
        }
        if (seed) {
            config.mc_seed = *seed;
        }
        config.validate();
        if (print_config) {
            std::cout << config.serialize();
            return kExitPass;
        }
        bessel::set_thread_count(threads);
        for (auto& [sub, fn] : commands) {
            if (sub->parsed()) {
                return fn(config, std::cout);
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
