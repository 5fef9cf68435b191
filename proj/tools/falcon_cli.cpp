// SPDX-License-Identifier: Apache-2.0
// Command-line front end for the experiment harness.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "falcon/channel.hpp"
#include "falcon/harness.hpp"
#include "falcon/serialize.hpp"

using namespace falcon;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<int> threads;
    std::string out = "results";
    std::string format = "csv";
    bool quiet = false;
};

ExperimentConfig resolve(ExperimentKind kind, const Flags& f) {
    ExperimentConfig cfg = f.config.empty() ? default_config(kind) : load_config(f.config);
    if (!f.config.empty() && cfg.experiment != kind)
        throw ConfigError("config file is for experiment '" + to_string(cfg.experiment) + "'");
    if (f.seed) cfg.seed_base = *f.seed;
    if (f.trials) cfg.trials = *f.trials;
    if (f.threads) cfg.threads = *f.threads;
    cfg.validate();
    return cfg;
}

int run_study(ExperimentKind kind, const Flags& f) {
    const ExperimentConfig cfg = resolve(kind, f);
    const RunRecord record = run_experiment(cfg, f.quiet ? nullptr : &std::cerr);
    for (const auto& path : write_outputs(record, f.out, f.format)) std::cout << path.string() << '\n';
    return kExitOk;
}

// First variant and mode of the config on the channel drawn from --seed (or seed_base).
int solve_one(const Flags& f, const std::string& experiment) {
    const ExperimentConfig cfg = resolve(parse_experiment(experiment), f);
    const Variant variant = cfg.expanded_variants().front();
    const int k = cfg.k_values().front();
    const ChannelSet channels = cfg.experiment == ExperimentKind::RateRegion
                                    ? gen_two_user_phase_ramp(cfg.thetas.front())
                                    : gen_saleh_valenzuela(cfg.seed_base, cfg.n_tx, k, cfg.n_paths);
    std::vector<double> weights = cfg.weights;
    if (weights.empty()) weights.assign(k, 1.0);

    FalconConfig solver;
    solver.max_iters = cfg.max_iters;
    solver.eps = cfg.eps;
    solver.mode = cfg.modes.front();
    const AnalogPrecoder analog = make_analog(variant.precoder, channels, cfg.codebook_seed);

    Json out;
    out["variant"] = variant.label();
    out["seed"] = cfg.seed_base;
    out["channels"] = to_json(channels);
    RunStatus status = RunStatus::Infeasible;
    try {
        const RsSolution sol = run_method(variant.method, channels, analog, weights, cfg.c0_min,
                                          cfg.p_tx(), cfg.sigma2(), solver);
        status = sol.status;
        out["solution"] = to_json(sol);
        out["feasible"] = counts_feasible(sol);
    } catch (const InitializationError& e) {
        out["solution"] = nullptr;
        out["feasible"] = false;
        out["error"] = e.what();
    }

    const std::string text = f.format == "json" ? out.dump(2) : out.dump();
    std::cout << text << '\n';
    if (!f.out.empty() && f.out != "-") {
        std::filesystem::create_directories(f.out);
        std::ofstream(std::filesystem::path(f.out) / "solve_one.json") << out.dump(2) << '\n';
    }
    return status == RunStatus::NumericalFailure ? kExitNumerical : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FALCON / WMMSE rate-splitting precoder experiments"};
    app.require_subcommand(1);
    Flags flags;
    std::string solve_experiment = "feasibility";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config, "INI experiment config")->check(CLI::ExistingFile);
        sub->add_option("--seed", flags.seed, "seed_base override");
        sub->add_option("--trials", flags.trials, "trial count override")->check(CLI::PositiveNumber);
        sub->add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", flags.out, "output directory")->capture_default_str();
        sub->add_option("--format", flags.format, "csv or json")
            ->check(CLI::IsMember({"csv", "json"}))
            ->capture_default_str();
        sub->add_flag("--quiet", flags.quiet, "no per-task progress on stderr");
    };

    const std::pair<const char*, ExperimentKind> studies[] = {
        {"feasibility", ExperimentKind::Feasibility},
        {"converge", ExperimentKind::Convergence},
        {"rate-region", ExperimentKind::RateRegion},
        {"hybrid-compare", ExperimentKind::HybridCompare},
        {"timing", ExperimentKind::Timing},
    };
    std::optional<ExperimentKind> chosen;
    for (const auto& [name, kind] : studies) {
        auto* sub = app.add_subcommand(name, "run the " + to_string(kind) + " study");
        add_common(sub);
        sub->callback([&chosen, kind = kind] { chosen = kind; });
    }
    auto* one = app.add_subcommand("solve-one", "solve a single instance and print the solution as JSON");
    add_common(one);
    one->add_option("--experiment", solve_experiment, "scenario defaults to start from")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (chosen) return run_study(*chosen, flags);
        return solve_one(flags, solve_experiment);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ParameterError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}
