#include "sidebandit/env.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace sidebandit {

BanditEnvironment make_environment(std::size_t d, std::size_t K, double sigma, std::uint64_t seed,
                                   std::uint64_t phi_attempt) {
    if (d == 0 || K == 0) {
        throw InvalidArgument("environment needs d >= 1 and K >= 1");
    }
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw InvalidArgument("noise scale must be finite and nonnegative");
    }
    BanditEnvironment env;
    env.d = d;
    env.K = K;
    env.sigma = sigma;
    env.rng_seed = seed;

    const auto dd = static_cast<Eigen::Index>(d);
    const auto kk = static_cast<Eigen::Index>(K);
    env.W.resize(kk, dd);
    auto wrng = RandomStream::derive(seed, {static_cast<std::uint64_t>(StreamPurpose::Weights)});
    const double hi = 1.0 / static_cast<double>(d);
    for (Eigen::Index a = 0; a < kk; ++a) {
        for (Eigen::Index j = 0; j < dd; ++j) {
            env.W(a, j) = wrng.uniform(0.0, hi);
        }
    }
    env.phi.resize(kk, dd);
    auto prng = RandomStream::derive(seed, {static_cast<std::uint64_t>(StreamPurpose::BehaviorLogits), phi_attempt});
    for (Eigen::Index a = 0; a < kk; ++a) {
        for (Eigen::Index j = 0; j < dd; ++j) {
            env.phi(a, j) = prng.uniform(-1.0, 1.0);
        }
    }
    return env;
}

Vector sample_context(const BanditEnvironment& env, RandomStream& rng) {
    Vector x(static_cast<Eigen::Index>(env.d));
    double norm = 0.0;
    while (norm == 0.0) {
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            x(j) = rng.uniform();
        }
        norm = x.norm();
    }
    x /= norm;
    return x;
}

double mean_reward(const BanditEnvironment& env, const Vector& x, Arm a) {
    return env.W.row(static_cast<Eigen::Index>(a)).dot(x);
}

double reward(const BanditEnvironment& env, const Vector& x, Arm a, RandomStream& rng) {
    if (a >= env.K) {
        throw InvalidArgument("arm index out of range");
    }
    return mean_reward(env, x, a) + env.sigma * rng.normal();
}

Vector behavior_probabilities(const BanditEnvironment& env, const Vector& x) {
    Vector logits = env.phi * x;
    logits.array() -= logits.maxCoeff();
    Vector p = logits.array().exp().matrix();
    p /= p.sum();
    return p;
}

Arm behavior_action(const BanditEnvironment& env, const Vector& x, RandomStream& rng) {
    const Vector p = behavior_probabilities(env, x);
    return rng.categorical(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

BestAction best_action_value(const BanditEnvironment& env, const Vector& x) {
    BestAction best{0, mean_reward(env, x, 0)};
    for (Arm a = 1; a < env.K; ++a) {
        const double v = mean_reward(env, x, a);
        if (v > best.value) {
            best = {a, v};
        }
    }
    return best;
}

std::vector<std::size_t> OfflineDataset::arm_counts() const {
    std::vector<std::size_t> counts(K, 0);
    for (const auto a : actions) {
        ++counts[a];
    }
    return counts;
}

void for_each_offline_row(const BanditEnvironment& env, std::size_t N, RandomStream& rng,
                          const std::function<void(const Vector& x, Arm a, double r)>& visit) {
    for (std::size_t i = 0; i < N; ++i) {
        const Vector x = sample_context(env, rng);
        const Arm a = behavior_action(env, x, rng);
        const double r = reward(env, x, a, rng);
        visit(x, a, r);
    }
}

OfflineDataset generate_offline_dataset(const BanditEnvironment& env, std::size_t L, std::size_t N,
                                        RandomStream& rng) {
    if (L < 1 || L > env.d) {
        throw InvalidArgument("offline dataset needs 1 <= L <= d");
    }
    if (N == 0) {
        throw InvalidArgument("offline dataset needs N >= 1");
    }
    OfflineDataset data;
    data.d = env.d;
    data.L = L;
    data.K = env.K;
    const auto l = static_cast<Eigen::Index>(L);
    data.x_obs.resize(static_cast<Eigen::Index>(N), l);
    data.actions.reserve(N);
    data.rewards.resize(static_cast<Eigen::Index>(N));

    Eigen::Index i = 0;
    for_each_offline_row(env, N, rng, [&](const Vector& x, Arm a, double r) {
        data.x_obs.row(i) = x.head(l).transpose();
        data.actions.push_back(a);
        data.rewards(i) = r;
        ++i;
    });

    data.arm_freq = Vector::Zero(static_cast<Eigen::Index>(env.K));
    const auto counts = data.arm_counts();
    for (Arm a = 0; a < env.K; ++a) {
        data.arm_freq(static_cast<Eigen::Index>(a)) = static_cast<double>(counts[a]) / static_cast<double>(N);
    }
    return data;
}

namespace {

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

[[noreturn]] void bad_format(const std::string& what) {
    throw InvalidArgument("malformed offline dataset: " + what);
}

double parse_real(const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        bad_format("bad number '" + s + "'");
    }
    if (pos != s.size()) {
        bad_format("bad number '" + s + "'");
    }
    return v;
}

std::size_t parse_count(const std::string& s) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &pos);
    } catch (const std::exception&) {
        bad_format("bad integer '" + s + "'");
    }
    if (pos != s.size()) {
        bad_format("bad integer '" + s + "'");
    }
    return static_cast<std::size_t>(v);
}

}  // namespace

void write_offline_dataset(std::ostream& out, const OfflineDataset& data) {
    out << "sidebandit-offline-dataset,1\n";
    out << "d,L,K,N\n";
    out << data.d << ',' << data.L << ',' << data.K << ',' << data.size() << '\n';
    out << "arm_freq";
    for (Eigen::Index a = 0; a < data.arm_freq.size(); ++a) {
        out << ',' << fmt_real(data.arm_freq(a));
    }
    out << '\n';
    for (std::size_t j = 0; j < data.L; ++j) {
        out << 'x' << j << ',';
    }
    out << "action,reward\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = 0; j < data.x_obs.cols(); ++j) {
            out << fmt_real(data.x_obs(row, j)) << ',';
        }
        out << data.actions[i] << ',' << fmt_real(data.rewards(row)) << '\n';
    }
}

OfflineDataset read_offline_dataset(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "sidebandit-offline-dataset,1") {
        bad_format("missing magic line");
    }
    if (!std::getline(in, line) || line != "d,L,K,N") {
        bad_format("missing dimension header");
    }
    if (!std::getline(in, line)) {
        bad_format("missing dimensions");
    }
    const auto dims = split_csv(line);
    if (dims.size() != 4) {
        bad_format("dimension line needs 4 fields");
    }
    OfflineDataset data;
    data.d = parse_count(dims[0]);
    data.L = parse_count(dims[1]);
    data.K = parse_count(dims[2]);
    const std::size_t N = parse_count(dims[3]);
    if (data.L < 1 || data.L > data.d || data.K < 1) {
        bad_format("inconsistent dimensions");
    }

    if (!std::getline(in, line)) {
        bad_format("missing arm_freq");
    }
    const auto freq = split_csv(line);
    if (freq.size() != data.K + 1 || freq[0] != "arm_freq") {
        bad_format("arm_freq line needs K values");
    }
    data.arm_freq.resize(static_cast<Eigen::Index>(data.K));
    for (std::size_t a = 0; a < data.K; ++a) {
        data.arm_freq(static_cast<Eigen::Index>(a)) = parse_real(freq[a + 1]);
    }
    if (!std::getline(in, line)) {
        bad_format("missing column header");
    }

    const auto l = static_cast<Eigen::Index>(data.L);
    data.x_obs.resize(static_cast<Eigen::Index>(N), l);
    data.rewards.resize(static_cast<Eigen::Index>(N));
    data.actions.reserve(N);
    for (std::size_t i = 0; i < N; ++i) {
        if (!std::getline(in, line)) {
            bad_format("expected " + std::to_string(N) + " rows, found " + std::to_string(i));
        }
        const auto f = split_csv(line);
        if (f.size() != data.L + 2) {
            bad_format("row " + std::to_string(i) + " has wrong field count");
        }
        const auto row = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = 0; j < l; ++j) {
            data.x_obs(row, j) = parse_real(f[static_cast<std::size_t>(j)]);
        }
        const auto a = parse_count(f[data.L]);
        if (a >= data.K) {
            bad_format("row " + std::to_string(i) + " has arm out of range");
        }
        data.actions.push_back(a);
        data.rewards(row) = parse_real(f[data.L + 1]);
    }
    return data;
}

Matrix ConditionalMoments::r11(Arm a, std::size_t L) const {
    const auto l = static_cast<Eigen::Index>(L);
    return second_moment.at(a).topLeftCorner(l, l);
}

Matrix ConditionalMoments::r12(Arm a, std::size_t L) const {
    const auto& m = second_moment.at(a);
    const auto l = static_cast<Eigen::Index>(L);
    return m.topRightCorner(l, m.cols() - l);
}

Matrix ConditionalMoments::r22(Arm a, std::size_t L) const {
    const auto& m = second_moment.at(a);
    const auto h = m.cols() - static_cast<Eigen::Index>(L);
    return m.bottomRightCorner(h, h);
}

ConditionalMoments oracle_moments(const BanditEnvironment& env, std::size_t n_mc, RandomStream& rng) {
    if (n_mc < kMinOracleSamples) {
        throw InvalidArgument("oracle moments need at least " + std::to_string(kMinOracleSamples) + " samples");
    }
    const auto d = static_cast<Eigen::Index>(env.d);
    ConditionalMoments out;
    out.second_moment.assign(env.K, Matrix::Zero(d, d));
    out.counts.assign(env.K, 0);
    out.samples = n_mc;
    for (std::size_t i = 0; i < n_mc; ++i) {
        const Vector x = sample_context(env, rng);
        const Arm a = behavior_action(env, x, rng);
        out.second_moment[a].selfadjointView<Eigen::Lower>().rankUpdate(x);
        ++out.counts[a];
    }
    for (Arm a = 0; a < env.K; ++a) {
        if (out.counts[a] < kMinArmSamples) {
            throw ArmError(a, "only " + std::to_string(out.counts[a]) +
                                  " oracle samples; conditional moments are unreliable");
        }
        Matrix full = out.second_moment[a].selfadjointView<Eigen::Lower>();
        full /= static_cast<double>(out.counts[a]);
        out.second_moment[a] = std::move(full);
    }
    return out;
}

std::vector<ArmMoments> oracle_moments(const BanditEnvironment& env, std::size_t L, std::size_t n_mc,
                                       RandomStream& rng) {
    if (L < 1 || L >= env.d) {
        throw InvalidArgument("oracle moments need 1 <= L < d");
    }
    const auto full = oracle_moments(env, n_mc, rng);
    std::vector<ArmMoments> out;
    out.reserve(env.K);
    for (Arm a = 0; a < env.K; ++a) {
        out.push_back({full.r11(a, L), full.r12(a, L)});
    }
    return out;
}

}  // namespace sidebandit
