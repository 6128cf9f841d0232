// spinbath: ensemble simulation, single trajectories and invariant checks.
//
//   spinbath simulate   [flags]   CSV of <sigma_z>, <sigma_x> and phase averages
//   spinbath trajectory [flags]   CSV of one classical trajectory
//   spinbath check      [flags]   invariant suite, exit 1 on failure
//
// Settings come from --config, then SPINBATH_<KEY> environment variables,
// then flags.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "spinbath/commands.hpp"

namespace {

struct FlagValue {
    const char* key;
    const char* flag;
    const char* help;
    std::optional<std::string> value;
};

int run(const std::string& command, const spinbath::RunConfig& cfg) {
    using namespace spinbath;
    if (command == "check")
        return cmd_check(cfg, std::cout);
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!cfg.output_path.empty()) {
        file.open(cfg.output_path, std::ios::binary);
        if (!file)
            throw ConfigError("output", 0, "cannot open '" + cfg.output_path + "' for writing");
        out = &file;
    }
    const int code = command == "simulate" ? cmd_simulate(cfg, *out, std::cerr)
                                           : cmd_trajectory(cfg, *out, std::cerr);
    out->flush();
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixed quantum-classical spin-bath dynamics"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "key = value settings file");
    std::vector<FlagValue> flags{
        {"mu", "--mu", "coupling strength", {}},
        {"dt", "--dt", "time step", {}},
        {"t_end", "--t-end", "final time", {}},
        {"samples", "--samples", "Monte Carlo samples", {}},
        {"seed", "--seed", "random seed", {}},
        {"scheme", "--scheme", "trotter, yoshida4 or yoshida6", {}},
        {"surface", "--surface", "s11, s22 or s12 (trajectory)", {}},
        {"output", "--output", "output file (default stdout)", {}},
        {"workers", "--workers", "worker threads", {}},
        {"variant", "--variant", "cycle, u1, u2 or u3", {}},
        {"stride", "--stride", "output every N steps (0: about 500 rows)", {}},
        {"spin", "--spin", "initial spin 'sx,sy,sz' (trajectory, check)", {}},
    };
    for (auto& f : flags)
        app.add_option(f.flag, f.value, f.help);

    app.add_subcommand("simulate", "ensemble averages as CSV");
    app.add_subcommand("trajectory", "single trajectory as CSV");
    app.add_subcommand("check", "reversibility, order, drift and oracle checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : spinbath::kExitConfig;
    }

    try {
        spinbath::Overrides overrides = spinbath::environment_overrides();
        for (const auto& f : flags)
            if (f.value)
                overrides.emplace_back(f.key, *f.value);
        spinbath::RunConfig cfg;
        if (config_path.empty()) {
            cfg = spinbath::parse_config(std::string_view{}, overrides);
        } else {
            std::ifstream in(config_path);
            if (!in)
                throw spinbath::ConfigError("config", 0, "cannot read '" + config_path + "'");
            cfg = spinbath::parse_config(in, overrides);
        }
        return run(app.get_subcommands().front()->get_name(), cfg);
    } catch (const spinbath::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return spinbath::kExitConfig;
    } catch (const spinbath::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return spinbath::kExitAborted;
    }
}
