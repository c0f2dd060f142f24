#include "sidebandit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace sidebandit {

using nlohmann::json;

namespace {

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::uint64_t last) {
    std::vector<std::uint64_t> out;
    for (auto s = first; s <= last; ++s) {
        out.push_back(s);
    }
    return out;
}

std::string doubling_label(DoublingMode m) {
    return m == DoublingMode::Faithful ? "faithful" : "continuous";
}

std::string bound_label(BoundSource b) {
    return b == BoundSource::Configured ? "configured" : "finite_sample";
}

[[noreturn]] void bad_key(const std::string& key, const std::string& what) {
    throw ConfigError("config key '" + key + "': " + what);
}

std::uint64_t as_unsigned(const json& v, const std::string& key) {
    if (!v.is_number_unsigned()) {
        bad_key(key, "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
}

double as_real(const json& v, const std::string& key) {
    if (!v.is_number()) {
        bad_key(key, "expected a number");
    }
    return v.get<double>();
}

std::string as_string(const json& v, const std::string& key) {
    if (!v.is_string()) {
        bad_key(key, "expected a string");
    }
    return v.get<std::string>();
}

template <class T, class F>
std::vector<T> as_list(const json& v, const std::string& key, F&& item) {
    std::vector<T> out;
    if (v.is_array()) {
        for (const auto& e : v) {
            out.push_back(static_cast<T>(item(e, key)));
        }
    } else {
        out.push_back(static_cast<T>(item(v, key)));
    }
    return out;
}

ModeSelection parse_mode(const std::string& s) {
    if (s == "known_R12") return ModeSelection::KnownR12;
    if (s == "estimated_R12") return ModeSelection::EstimatedR12;
    if (s == "both") return ModeSelection::Both;
    bad_key("mode", "expected known_R12, estimated_R12 or both, got '" + s + "'");
}

DoublingMode parse_doubling(const std::string& s) {
    if (s == "faithful") return DoublingMode::Faithful;
    if (s == "continuous") return DoublingMode::Continuous;
    bad_key("doubling_mode", "expected faithful or continuous, got '" + s + "'");
}

BoundSource parse_bound(const std::string& s) {
    if (s == "configured") return BoundSource::Configured;
    if (s == "finite_sample") return BoundSource::FiniteSample;
    bad_key("bound_source", "expected configured or finite_sample, got '" + s + "'");
}

void apply_confidence(ConfidenceParams& p, const json& block) {
    if (!block.is_object()) {
        bad_key("confidence", "expected an object");
    }
    for (const auto& [key, v] : block.items()) {
        const std::string name = "confidence." + key;
        if (key == "lambda") p.lambda = as_real(v, name);
        else if (key == "delta") p.delta = as_real(v, name);
        else if (key == "S_x") p.S_x = as_real(v, name);
        else if (key == "S_w") p.S_w = as_real(v, name);
        else if (key == "S_xo") p.S_xo = as_real(v, name);
        else if (key == "S_wo") p.S_wo = as_real(v, name);
        else if (key == "C_B1") p.C_B1 = as_real(v, name);
        else if (key == "C_B2") p.C_B2 = as_real(v, name);
        else bad_key(name, "unknown key");
    }
}

std::string fmt_real(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::vector<std::size_t> positive_L(const ExperimentConfig& cfg) {
    std::vector<std::size_t> out;
    for (auto L : sorted_unique(cfg.L_values)) {
        if (L > 0) out.push_back(L);
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

std::vector<std::string> preset_names() { return {"fig2a", "fig2b", "fig2c", "custom"}; }

ExperimentConfig preset_config(std::string_view name) {
    ExperimentConfig cfg;
    cfg.preset = std::string(name);
    if (name == "custom") {
        return cfg;
    }
    cfg.seeds = seed_range(1, 10);
    if (name == "fig2a") {
        cfg.L_values = {0, 10, 20, 25};
        cfg.mode = ModeSelection::Both;
        cfg.output_path = "fig2a.csv";
    } else if (name == "fig2b") {
        cfg.L_values = {25};
        cfg.alpha_values = {0.01, 0.1, 0.5, 1.0, 2.0};
        cfg.mode = ModeSelection::EstimatedR12;
        cfg.output_path = "fig2b.csv";
    } else if (name == "fig2c") {
        cfg.L_values = {25};
        cfg.N_offline = {3'000, 10'000, 100'000, 1'000'000};
        cfg.mode = ModeSelection::EstimatedR12;
        cfg.output_path = "fig2c.csv";
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "' (expected fig2a, fig2b, fig2c or custom)");
    }
    return cfg;
}

ExperimentConfig parse_config(std::string_view json_text, const std::optional<std::string>& preset_override) {
    json j;
    try {
        j = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    std::string preset = "custom";
    if (j.contains("preset")) {
        preset = as_string(j["preset"], "preset");
    }
    if (preset_override) {
        preset = *preset_override;
    }
    ExperimentConfig cfg = preset_config(preset);

    for (const auto& [key, v] : j.items()) {
        if (key == "preset") continue;
        else if (key == "d") cfg.d = as_unsigned(v, key);
        else if (key == "K") cfg.K = as_unsigned(v, key);
        else if (key == "T") cfg.T = as_unsigned(v, key);
        else if (key == "N_offline") cfg.N_offline = as_list<std::size_t>(v, key, as_unsigned);
        else if (key == "L_values") cfg.L_values = as_list<std::size_t>(v, key, as_unsigned);
        else if (key == "alpha_values") cfg.alpha_values = as_list<double>(v, key, as_real);
        else if (key == "sigma") cfg.sigma = as_real(v, key);
        else if (key == "seeds") cfg.seeds = as_list<std::uint64_t>(v, key, as_unsigned);
        else if (key == "master_seed") cfg.master_seed = as_unsigned(v, key);
        else if (key == "mode") cfg.mode = parse_mode(as_string(v, key));
        else if (key == "doubling_mode") cfg.doubling_mode = parse_doubling(as_string(v, key));
        else if (key == "output_path") cfg.output_path = as_string(v, key);
        else if (key == "confidence") apply_confidence(cfg.confidence, v);
        else if (key == "bound_source") cfg.bound_source = parse_bound(as_string(v, key));
        else if (key == "oracle_samples") cfg.oracle_samples = as_unsigned(v, key);
        else if (key == "threads") cfg.threads = as_unsigned(v, key);
        else if (key == "phi_attempts") cfg.phi_attempts = as_unsigned(v, key);
        else if (key == "dataset_L") cfg.dataset_L = as_unsigned(v, key);
        else bad_key(key, "unknown key");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::optional<std::string>& preset_override) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), preset_override);
}

std::string config_to_json(const ExperimentConfig& cfg) {
    const auto& c = cfg.confidence;
    json j = {
        {"preset", cfg.preset},
        {"d", cfg.d},
        {"K", cfg.K},
        {"T", cfg.T},
        {"N_offline", cfg.N_offline},
        {"L_values", cfg.L_values},
        {"alpha_values", cfg.alpha_values},
        {"sigma", cfg.sigma},
        {"seeds", cfg.seeds},
        {"master_seed", cfg.master_seed},
        {"mode", mode_label(cfg.mode)},
        {"doubling_mode", doubling_label(cfg.doubling_mode)},
        {"output_path", cfg.output_path},
        {"confidence",
         {{"lambda", c.lambda},
          {"delta", c.delta},
          {"S_x", c.S_x},
          {"S_w", c.S_w},
          {"S_xo", c.S_xo},
          {"S_wo", c.S_wo},
          {"C_B1", c.C_B1},
          {"C_B2", c.C_B2}}},
        {"bound_source", bound_label(cfg.bound_source)},
        {"oracle_samples", cfg.oracle_samples},
        {"threads", cfg.threads},
        {"phi_attempts", cfg.phi_attempts},
        {"dataset_L", cfg.dataset_L},
    };
    return j.dump(2);
}

std::vector<std::string> validate(const ExperimentConfig& cfg) {
    std::vector<std::string> diag;
    if (cfg.d < 2) diag.push_back("d must be >= 2");
    if (cfg.K < 1) diag.push_back("K must be >= 1");
    if (cfg.T < 1) diag.push_back("T must be >= 1");
    if (cfg.L_values.empty()) diag.push_back("L_values must be nonempty");
    for (auto L : cfg.L_values) {
        if (L >= cfg.d) {
            diag.push_back("L must be < d (got L=" + std::to_string(L) + ", d=" + std::to_string(cfg.d) + ")");
        }
    }
    if (cfg.N_offline.empty()) diag.push_back("N_offline must be nonempty");
    for (auto n : cfg.N_offline) {
        if (n < 1) diag.push_back("N_offline entries must be >= 1");
    }
    if (cfg.alpha_values.empty()) diag.push_back("alpha_values must be nonempty");
    for (double a : cfg.alpha_values) {
        if (!(a >= 0.0) || !std::isfinite(a)) {
            diag.push_back("alpha_values entries must be finite and >= 0 (got " + fmt_real(a) + ")");
        }
    }
    if (!(cfg.sigma >= 0.0) || !std::isfinite(cfg.sigma)) diag.push_back("sigma must be finite and >= 0");
    if (cfg.seeds.empty()) diag.push_back("seeds must be nonempty");
    if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size()) {
        diag.push_back("seeds must be distinct");
    }
    if (cfg.output_path.empty()) diag.push_back("output_path must be nonempty");
    if (cfg.oracle_samples < kMinOracleSamples) {
        diag.push_back("oracle_samples must be >= " + std::to_string(kMinOracleSamples));
    }
    if (cfg.phi_attempts < 1) diag.push_back("phi_attempts must be >= 1");
    if (cfg.dataset_L > cfg.d) diag.push_back("dataset_L must be <= d");
    ConfidenceParams p = cfg.confidence;
    p.sigma = std::isfinite(cfg.sigma) && cfg.sigma >= 0.0 ? cfg.sigma : 0.0;
    p.alpha = 1.0;
    p.horizon_T = 1;
    try {
        p.validate();
    } catch (const Error& e) {
        diag.push_back(std::string("confidence: ") + e.what());
    }
    return diag;
}

std::string mode_label(ModeSelection mode) {
    switch (mode) {
        case ModeSelection::KnownR12: return "known_R12";
        case ModeSelection::EstimatedR12: return "estimated_R12";
        case ModeSelection::Both: return "both";
    }
    return "both";
}

// ---------------------------------------------------------------------------
// Cells and fixture

std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg) {
    std::vector<ModeSelection> modes;
    if (cfg.mode == ModeSelection::Both) {
        modes = {ModeSelection::KnownR12, ModeSelection::EstimatedR12};
    } else {
        modes = {cfg.mode};
    }
    std::vector<Cell> cells;
    for (auto m : modes) {
        for (auto L : cfg.L_values) {
            for (auto n : cfg.N_offline) {
                for (double alpha : cfg.alpha_values) {
                    for (auto seed : cfg.seeds) {
                        cells.push_back(Cell{m, L, n, alpha, seed});
                    }
                }
            }
        }
    }
    return cells;
}

ExperimentFixture build_fixture(const ExperimentConfig& cfg) {
    const auto Ls = positive_L(cfg);
    const auto Ns = sorted_unique(cfg.N_offline);
    std::string last_error;
    for (std::uint64_t attempt = 0; attempt < cfg.phi_attempts; ++attempt) {
        ExperimentFixture fx;
        fx.env = make_environment(cfg.d, cfg.K, cfg.sigma, cfg.master_seed, attempt);
        fx.phi_attempt = attempt;
        if (Ls.empty()) {
            return fx;
        }
        try {
            std::vector<OfflineAccumulator> acc;
            for (auto L : Ls) {
                acc.emplace_back(cfg.d, L, cfg.K);
            }
            auto rng = RandomStream::derive(cfg.master_seed,
                                            {static_cast<std::uint64_t>(StreamPurpose::OfflineData), attempt});
            std::size_t rows = 0;
            std::size_t next = 0;
            for_each_offline_row(fx.env, Ns.back(), rng, [&](const Vector& x, Arm a, double r) {
                for (auto& ac : acc) {
                    ac.add(x, a, r);
                }
                ++rows;
                if (rows == Ns[next]) {
                    for (std::size_t i = 0; i < Ls.size(); ++i) {
                        fx.side.emplace(std::make_pair(Ls[i], rows), acc[i].finish());
                    }
                    ++next;
                }
            });
            auto mrng = RandomStream::derive(cfg.master_seed,
                                             {static_cast<std::uint64_t>(StreamPurpose::OracleMoments), attempt});
            fx.moments = oracle_moments(fx.env, cfg.oracle_samples, mrng);
            return fx;
        } catch (const ArmError& e) {
            last_error = e.what();
        }
    }
    throw Error("no behavior policy gave every arm enough data after " + std::to_string(cfg.phi_attempts) +
                " attempts; last failure: " + last_error);
}

ConfidenceParams cell_params(const ExperimentConfig& cfg, const ExperimentFixture& fx, const Cell& cell) {
    ConfidenceParams p = cfg.confidence;
    p.sigma = cfg.sigma;
    p.alpha = cell.alpha;
    p.horizon_T = cfg.T;
    if (cfg.bound_source == BoundSource::FiniteSample && cell.mode == ModeSelection::EstimatedR12 && cell.L > 0) {
        const auto& side = fx.side.at({cell.L, cell.n_offline});
        std::vector<double> tr22(cfg.K);
        for (Arm a = 0; a < cfg.K; ++a) {
            tr22[a] = fx.moments.r22(a, cell.L).trace();
        }
        const auto c = finite_sample_constants(p, side, tr22);
        p.C_B1 = c.C_B1;
        p.C_B2 = c.C_B2;
    }
    return p;
}

RegretTrace run_cell(const ExperimentConfig& cfg, const ExperimentFixture& fx, const Cell& cell) {
    const auto p = cell_params(cfg, fx, cell);
    const std::uint64_t seed = derive_seed(cfg.master_seed, {cell.seed});
    RegretTrace trace;
    if (cell.L == 0) {
        trace = run_projected_oful(fx.env, std::vector<ArmSideInfo>(cfg.K), p, cfg.T, seed);
    } else {
        const auto& side = fx.side.at({cell.L, cell.n_offline});
        if (cell.mode == ModeSelection::KnownR12) {
            std::vector<Matrix> r12(cfg.K);
            for (Arm a = 0; a < cfg.K; ++a) {
                r12[a] = fx.moments.r12(a, cell.L);
            }
            trace = run_projected_oful(fx.env, known_side_info(side, r12), p, cfg.T, seed);
        } else {
            trace = run_doubling_oful(fx.env, side, p, cfg.T, seed, cfg.doubling_mode);
        }
    }
    trace.seed = cell.seed;
    return trace;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const auto diag = validate(cfg);
    if (!diag.empty()) {
        throw ConfigError("invalid config: " + diag.front());
    }
    const auto fx = build_fixture(cfg);
    ExperimentResult result;
    result.cells = enumerate_cells(cfg);
    result.phi_attempt = fx.phi_attempt;
    const std::size_t n = result.cells.size();
    result.traces.resize(n);
    std::vector<std::exception_ptr> errors(n);

    std::size_t workers = cfg.threads;
    if (workers == 0) {
        workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }
    workers = std::min(workers, n);

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                result.traces[i] = run_cell(cfg, fx, result.cells[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Output

void write_csv(std::ostream& out, const ExperimentConfig& cfg, const ExperimentResult& result) {
    out << kCsvHeader << '\n';
    std::string line;
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        const auto& c = result.cells[i];
        const auto& tr = result.traces[i];
        const std::string prefix = cfg.preset + ',' + mode_label(c.mode) + ',' + std::to_string(c.L) + ',' +
                                   fmt_real(c.alpha) + ',' + std::to_string(c.seed) + ',';
        const std::string suffix = ',' + std::to_string(c.n_offline) + '\n';
        for (std::size_t t = 0; t < tr.rounds(); ++t) {
            line = prefix;
            line += std::to_string(t + 1);
            line += ',';
            line += fmt_real(tr.inst_regret[t]);
            line += ',';
            line += fmt_real(tr.cum_regret[t]);
            line += suffix;
            out << line;
        }
    }
}

std::size_t run_experiment_to_file(const ExperimentConfig& cfg) {
    const auto diag = validate(cfg);
    if (!diag.empty()) {
        throw ConfigError("invalid config: " + diag.front());
    }
    std::ofstream out(cfg.output_path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open output path '" + cfg.output_path + "' for writing");
    }
    const auto result = run_experiment(cfg);
    write_csv(out, cfg, result);
    out.flush();
    if (!out) {
        throw Error("failed writing '" + cfg.output_path + "'");
    }
    std::size_t rows = 0;
    for (const auto& tr : result.traces) {
        rows += tr.rounds();
    }
    return rows;
}

OfflineDataset generate_config_dataset(const ExperimentConfig& cfg) {
    if (cfg.N_offline.empty()) {
        throw ConfigError("N_offline must be nonempty");
    }
    std::size_t L = cfg.dataset_L;
    if (L == 0) {
        const auto Ls = positive_L(cfg);
        L = Ls.empty() ? cfg.d - 1 : Ls.back();
    }
    const auto env = make_environment(cfg.d, cfg.K, cfg.sigma, cfg.master_seed, 0);
    auto rng = RandomStream::derive(cfg.master_seed, {static_cast<std::uint64_t>(StreamPurpose::OfflineData), 0});
    return generate_offline_dataset(env, L, *std::max_element(cfg.N_offline.begin(), cfg.N_offline.end()), rng);
}

}  // namespace sidebandit
