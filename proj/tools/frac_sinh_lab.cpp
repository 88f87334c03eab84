#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fsl/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Fractional sinh-Gordon numerics: kernel checks, noise statistics, chaos moments, Besov and Schauder probes, solver runs"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    for (const auto& name : fsl::subcommands()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "TOML experiment config")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override master_seed");
        sub->add_option("--out", out_dir, "output directory (default: out_dir from the config)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    fsl::ExperimentConfig cfg;
    try {
        cfg = fsl::load_config(config_path);
    } catch (const fsl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    if (seed) cfg.master_seed = *seed;
    if (out_dir.empty()) out_dir = cfg.out_dir;
    auto rep = fsl::run_subcommand(name, cfg, out_dir);
    if (rep.exit_code == 2) {
        std::cerr << "config error: " << rep.message << '\n';
        return 2;
    }
    for (const auto& f : rep.files) std::cout << out_dir << '/' << f << '\n';
    std::cout << name << ": " << (rep.check_passed ? "check passed" : "check FAILED: " + rep.message) << '\n';
    return rep.exit_code;
}
