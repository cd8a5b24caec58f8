// qtraj: double-slit trajectory ensembles under the de Broglie-Bohm and the
// revised guidance laws.
//
//   qtraj run|compare|verify [--config FILE] [--theory dbb|revised] [--seed N]
//                            [--n N] [--out DIR] [--threads N] [--set key=value]...

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qtraj/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Quantum trajectory ensembles for the double slit"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> theory;
    std::optional<std::string> seed;
    std::optional<std::string> n_traj;
    std::optional<std::string> out_dir;
    std::optional<std::string> threads;
    std::vector<std::string> sets;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value configuration file");
        sub->add_option("--theory", theory, "dbb or revised")->check(CLI::IsMember({"dbb", "revised"}));
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--n", n_traj, "number of trajectories");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--threads", threads, "worker threads (0 = all cores)");
        sub->add_option("--set", sets, "override any config key, e.g. --set dt_ps=0.0025");
    };
    auto* run = app.add_subcommand("run", "integrate one ensemble and write trajectories, histograms, manifest");
    auto* compare = app.add_subcommand("compare", "run both theories on the same seed and tabulate statistics");
    auto* verify = app.add_subcommand("verify", "analytic self-checks of the wave function and guidance fields");
    for (auto* sub : {run, compare, verify}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        qtraj::ConfigEntries file;
        if (!config_path.empty()) file = qtraj::read_config_file(config_path);
        qtraj::ConfigEntries overrides;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw qtraj::ConfigError(s, "--set expects key=value");
            overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        if (theory) overrides.emplace_back("theory", *theory);
        if (seed) overrides.emplace_back("seed", *seed);
        if (n_traj) overrides.emplace_back("n_traj", *n_traj);
        if (out_dir) overrides.emplace_back("out_dir", *out_dir);
        if (threads) overrides.emplace_back("threads", *threads);
        const auto cfg = qtraj::parse_config(file, overrides);

        if (run->parsed()) return qtraj::cmd_run(cfg, std::cout);
        if (compare->parsed()) return qtraj::cmd_compare(cfg, std::cout);
        qtraj::VerifyOptions opt;
        opt.t_max = cfg.ensemble.schedule.t_final;
        return qtraj::cmd_verify(cfg.params, opt, std::cout);
    } catch (const qtraj::ConfigError& e) {
        std::cerr << "qtraj: configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "qtraj: " << e.what() << "\n";
        return 1;
    }
}
