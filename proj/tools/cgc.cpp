#include <CLI11.hpp>

#include <iostream>

#include "cgc/cli.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"cgc: convex hypersurfaces of constant Gauss curvature with prescribed boundary"};
    app.footer(cgc::config_help());
    app.require_subcommand(1, 1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool parallel = false;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"solve2d", "planar body K_t by the disk-family intersection, with closed-form overlay"},
        {"solve3d", "graph solver for the cap scenario, with mesh and residual history"},
        {"verify", "viscosity probe tests on a computed, closed-form or stored body"},
        {"selftest", "Dirichlet and invariance checks of the cone family"},
        {"convergence", "refinement study against the closed form"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "run directory")->required();
        sub->add_option("--seed", seed, "seed for randomized checks (overrides the config)");
        sub->add_flag("--parallel", parallel, "colored multi-threaded sweeps");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cgc::kExitOk : cgc::kExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    const CLI::App* sub = app.get_subcommands().front();
    const auto dir = cgc::resolve_out_dir(out_dir);

    cgc::RunConfig cfg;
    try {
        cfg = cgc::parse_config_text(cgc::detail::read_file(config_path), false);
        cfg.command = command;
        if (sub->count("--seed")) cfg.seed = seed;
        if (parallel) cfg.parallel = true;
        cfg = cgc::resolve(cfg);
    } catch (const cgc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        cgc::RunOutcome out;
        out.exit_code = cgc::kExitConfig;
        out.errors.push_back(e.what());
        std::ofstream(dir / "manifest.txt") << cgc::manifest_text(nullptr, out, 0.0);
        return cgc::kExitConfig;
    }

    const cgc::RunOutcome out = cgc::run_scenario(cfg, dir);
    for (const auto& s : out.summary) std::cout << s << '\n';
    for (const auto& e : out.errors) std::cerr << "error: " << e << '\n';
    std::cout << "artifacts in " << dir.string() << '\n';
    return out.exit_code;
}
