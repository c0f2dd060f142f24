#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sidebandit/experiment.hpp"

using namespace sidebandit;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Overrides {
    std::string config;
    std::string preset;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

ExperimentConfig resolve(const Overrides& o) {
    std::optional<std::string> preset;
    if (!o.preset.empty()) preset = o.preset;
    ExperimentConfig cfg = o.config.empty() ? preset_config(preset.value_or("custom")) : load_config(o.config, preset);
    if (o.seed) cfg.seeds = {*o.seed};
    if (o.threads) cfg.threads = *o.threads;
    if (!o.out.empty()) cfg.output_path = o.out;
    return cfg;
}

bool report(const ExperimentConfig& cfg) {
    const auto diag = validate(cfg);
    for (const auto& d : diag) {
        std::cerr << "config error: " << d << '\n';
    }
    return diag.empty();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contextual bandits with partially observable offline data"};
    app.require_subcommand(1);

    Overrides run_opts;
    auto* run = app.add_subcommand("run", "Run an experiment and write regret traces as CSV");
    run->add_option("--config", run_opts.config, "JSON config file (omit to use the preset alone)");
    run->add_option("--preset", run_opts.preset, "fig2a, fig2b, fig2c or custom")
        ->check(CLI::IsMember({"fig2a", "fig2b", "fig2c", "custom"}));
    run->add_option("--out", run_opts.out, "Output CSV path");
    run->add_option("--threads", run_opts.threads, "Worker threads (0: all cores)");
    run->add_option("--seed", run_opts.seed, "Run a single repetition seed");

    Overrides val_opts;
    auto* val = app.add_subcommand("validate", "Check a config and print diagnostics");
    val->add_option("--config", val_opts.config, "JSON config file")->required();
    val->add_option("--preset", val_opts.preset, "Preset override")
        ->check(CLI::IsMember({"fig2a", "fig2b", "fig2c", "custom"}));

    Overrides gen_opts;
    auto* gen = app.add_subcommand("gen-data", "Write the experiment's offline dataset as CSV");
    gen->add_option("--config", gen_opts.config, "JSON config file")->required();
    gen->add_option("--out", gen_opts.out, "Dataset CSV path")->required();
    gen->add_option("--preset", gen_opts.preset, "Preset override")
        ->check(CLI::IsMember({"fig2a", "fig2b", "fig2c", "custom"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) {
            const auto cfg = resolve(run_opts);
            if (!report(cfg)) return kConfigError;
            const auto rows = run_experiment_to_file(cfg);
            std::cerr << "wrote " << rows << " rows to " << cfg.output_path << '\n';
        } else if (*val) {
            const auto cfg = resolve(val_opts);
            if (!report(cfg)) return kConfigError;
            std::cout << "config ok: " << enumerate_cells(cfg).size() << " cells, " << cfg.T << " rounds each\n";
        } else if (*gen) {
            auto cfg = resolve(Overrides{gen_opts.config, gen_opts.preset, "", std::nullopt, std::nullopt});
            if (!report(cfg)) return kConfigError;
            const auto data = generate_config_dataset(cfg);
            std::ofstream out(gen_opts.out, std::ios::binary | std::ios::trunc);
            if (!out) {
                std::cerr << "error: cannot open '" << gen_opts.out << "' for writing\n";
                return kRuntimeError;
            }
            write_offline_dataset(out, data);
            std::cerr << "wrote " << data.size() << " rows (L=" << data.L << ") to " << gen_opts.out << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}
