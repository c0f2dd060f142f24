#pragma once

// Experiment driver: configuration, presets, cell enumeration, seeded
// parallel execution and CSV output.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sidebandit/bandit.hpp"
#include "sidebandit/confidence.hpp"
#include "sidebandit/env.hpp"
#include "sidebandit/estimation.hpp"

namespace sidebandit {

/// Invalid or unreadable configuration. The CLI maps it to exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

enum class ModeSelection { KnownR12, EstimatedR12, Both };

/// Where C_B1 and C_B2 come from: the confidence block as written, or the
/// finite-sample constants computed from the offline logs and oracle tr R22.
enum class BoundSource { Configured, FiniteSample };

struct ExperimentConfig {
    std::string preset = "custom";
    std::size_t d = 30;
    std::size_t K = 30;
    std::uint64_t T = 20000;
    std::vector<std::size_t> N_offline{1'000'000};
    std::vector<std::size_t> L_values{0};
    std::vector<double> alpha_values{1.0};
    double sigma = 0.1;
    std::vector<std::uint64_t> seeds{1};
    std::uint64_t master_seed = 20230601;
    ModeSelection mode = ModeSelection::Both;
    DoublingMode doubling_mode = DoublingMode::Continuous;
    std::string output_path = "traces.csv";
    ConfidenceParams confidence;  // alpha, sigma and horizon_T are filled per cell
    BoundSource bound_source = BoundSource::Configured;
    std::size_t oracle_samples = 1'000'000;
    std::size_t threads = 0;      // 0: hardware concurrency
    std::size_t phi_attempts = 8;  // behavior-policy redraws when an arm has too few logs
    std::size_t dataset_L = 0;     // gen-data only; 0 picks the largest positive L
};

/// fig2a, fig2b, fig2c or custom. Throws ConfigError for other names.
ExperimentConfig preset_config(std::string_view name);

std::vector<std::string> preset_names();

/// JSON text -> config. Keys override the preset named by `preset_override`
/// or, failing that, by the "preset" key (default custom). Unknown keys and
/// type mismatches raise ConfigError naming the key.
ExperimentConfig parse_config(std::string_view json_text, const std::optional<std::string>& preset_override = {});

ExperimentConfig load_config(const std::string& path, const std::optional<std::string>& preset_override = {});

/// Serializes every field, so parse_config(config_to_json(c)) == c.
std::string config_to_json(const ExperimentConfig& cfg);

/// One diagnostic per violated invariant; empty when the config is valid.
std::vector<std::string> validate(const ExperimentConfig& cfg);

std::string mode_label(ModeSelection mode);

struct Cell {
    ModeSelection mode = ModeSelection::KnownR12;  // never Both
    std::size_t L = 0;
    std::size_t n_offline = 0;
    double alpha = 1.0;
    std::uint64_t seed = 0;
};

/// Cells in output order: mode, L, N_offline, alpha, seed.
std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg);

/// Everything shared by the cells of one experiment: the environment (w*
/// and phi from the master seed), the offline side information per (L, N)
/// and the oracle conditional moments.
struct ExperimentFixture {
    BanditEnvironment env;
    std::uint64_t phi_attempt = 0;
    std::map<std::pair<std::size_t, std::size_t>, OfflineSideInfo> side;  // keyed by (L, N)
    ConditionalMoments moments;
};

/// Builds the fixture, redrawing phi while some arm lacks enough offline rows
/// or oracle samples. Datasets for different N are prefixes of one log stream.
ExperimentFixture build_fixture(const ExperimentConfig& cfg);

/// Confidence parameters a cell runs with.
ConfidenceParams cell_params(const ExperimentConfig& cfg, const ExperimentFixture& fx, const Cell& cell);

RegretTrace run_cell(const ExperimentConfig& cfg, const ExperimentFixture& fx, const Cell& cell);

struct ExperimentResult {
    std::vector<Cell> cells;
    std::vector<RegretTrace> traces;  // aligned with cells
    std::uint64_t phi_attempt = 0;
};

/// Runs every cell on `threads` workers (cfg.threads when 0 is passed through
/// the config, hardware concurrency when both are 0). Output order is the cell
/// order regardless of scheduling.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

inline constexpr std::string_view kCsvHeader = "preset,mode,L,alpha,seed,t,inst_regret,cum_regret,n_offline";

void write_csv(std::ostream& out, const ExperimentConfig& cfg, const ExperimentResult& result);

/// Validates, opens cfg.output_path (failing early if unwritable), runs and
/// writes the CSV. Returns the number of data rows.
std::size_t run_experiment_to_file(const ExperimentConfig& cfg);

/// Offline dataset for gen-data: max(N_offline) rows at dataset_L visible
/// coordinates from the experiment's environment.
OfflineDataset generate_config_dataset(const ExperimentConfig& cfg);

}  // namespace sidebandit
