#include "sidebandit/bandit.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace sidebandit {

// ---------------------------------------------------------------------------
// Confidence radii

double confidence_radius_sq(double noise, double s_x, double s_w, double lambda, double delta, double t,
                            std::size_t kernel_dim, std::size_t K) {
    const double m = static_cast<double>(kernel_dim);
    const double log_term = std::log(static_cast<double>(K) * (1.0 + t * s_x * s_x / lambda) / delta);
    const double root = std::sqrt(lambda) * s_w + noise * std::sqrt(m * log_term);
    return root * root;
}

double beta_known(const ConfidenceParams& params, std::size_t t, std::size_t d, std::size_t L, std::size_t K) {
    return confidence_radius_sq(params.sigma, params.S_xo, params.S_wo, params.lambda, params.delta,
                                static_cast<double>(t), d - L, K);
}

std::size_t doubling_epochs(std::uint64_t T) {
    if (T == 0) {
        throw InvalidArgument("horizon must be >= 1");
    }
    return static_cast<std::size_t>(std::bit_width(T));
}

double doubling_delta(const ConfidenceParams& params) {
    return params.delta / (2.0 * static_cast<double>(doubling_epochs(params.horizon_T)));
}

double beta_doubling(const ConfidenceParams& params, std::size_t n, std::size_t t, std::size_t d, std::size_t L,
                     std::size_t K) {
    const double c_n = params.C_B1 + params.C_B2 * std::exp2(-0.5 * static_cast<double>(n));
    const double noise = params.sigma + params.S_x * params.S_w * c_n;
    return confidence_radius_sq(noise, params.S_x, params.S_w, params.lambda, doubling_delta(params),
                                static_cast<double>(t), d - L, K);
}

double theorem1_bound(const ConfidenceParams& params, std::uint64_t T, std::size_t d, std::size_t L, std::size_t K) {
    if (T == 0) {
        return 0.0;
    }
    if (L >= d) {
        throw InvalidArgument("theorem1_bound needs L < d");
    }
    const double mk = static_cast<double>(d - L) * static_cast<double>(K);
    const double inner = params.lambda + params.S_xo * params.S_xo / mk;
    if (!(inner > 1.0)) {
        throw InvalidArgument("theorem1_bound needs lambda + S_xo^2 / ((d - L) K) > 1");
    }
    const double tt = static_cast<double>(T);
    const double m = static_cast<double>(d - L);
    const double radius =
        std::sqrt(params.lambda) * params.S_wo +
        params.sigma * std::sqrt(m * std::log((1.0 + tt * params.S_xo * params.S_xo / params.lambda) /
                                              (params.delta / static_cast<double>(K))));
    return 2.0 * std::sqrt(tt) * std::sqrt(mk * std::log(inner)) * radius;
}

// ---------------------------------------------------------------------------
// Learners

Arm argmax_lowest(const Vector& score) {
    Arm best = 0;
    for (Eigen::Index a = 1; a < score.size(); ++a) {
        if (score(a) > score(static_cast<Eigen::Index>(best))) {
            best = static_cast<Arm>(a);
        }
    }
    return best;
}

ProjectedOfulLearner::ProjectedOfulLearner(std::size_t d, std::size_t K, double lambda) : d_(d), lambda_(lambda) {
    if (d == 0 || K == 0) {
        throw InvalidArgument("learner needs d >= 1 and K >= 1");
    }
    const auto n = static_cast<Eigen::Index>(d);
    arms_.resize(K);
    for (auto& s : arms_) {
        s.stats = PRRState::empty(d, lambda);
        s.U = Matrix::Identity(n, n);
        s.pinv_b = Vector::Zero(n);
    }
}

void ProjectedOfulLearner::set_side(Arm a, const DeconfounderMatrix& M, const Vector& b) {
    auto& s = arms_.at(a);
    if (M.dim() != d_) {
        throw DimensionError("side information dimension does not match learner");
    }
    if (b.size() != static_cast<Eigen::Index>(M.visible_dim())) {
        throw DimensionError("side-information vector must have length L");
    }
    s.U = M.kernel_basis();
    s.pinv_b = M.pinv() * b;
    s.dirty = true;
}

void ProjectedOfulLearner::clear_side(Arm a) {
    auto& s = arms_.at(a);
    const auto n = static_cast<Eigen::Index>(d_);
    s.U = Matrix::Identity(n, n);
    s.pinv_b = Vector::Zero(n);
    s.dirty = true;
}

void ProjectedOfulLearner::reset_statistics() {
    for (auto& s : arms_) {
        s.stats = PRRState::empty(d_, lambda_);
        s.dirty = true;
    }
}

void ProjectedOfulLearner::refresh(ArmState& s) const {
    if (!s.dirty) {
        return;
    }
    s.solution = solve_prr(s.stats.V, s.stats.Y, s.stats.lambda, s.U, s.pinv_b);
    s.dirty = false;
}

StepResult ProjectedOfulLearner::step(const Vector& x, double beta, double alpha) {
    if (x.size() != static_cast<Eigen::Index>(d_)) {
        throw DimensionError("context length does not match d");
    }
    const auto K = static_cast<Eigen::Index>(arms_.size());
    const double root_beta = std::sqrt(beta);
    StepResult out;
    out.y_hat.resize(K);
    out.ucb.resize(K);
    out.score.resize(K);
    for (Eigen::Index a = 0; a < K; ++a) {
        auto& s = arms_[static_cast<std::size_t>(a)];
        refresh(s);
        const Vector w = s.pinv_b + s.solution.w;
        out.y_hat(a) = x.dot(w);
        const Vector rotated = s.U.transpose() * x;
        out.ucb(a) = root_beta * s.solution.chol.matrixL().solve(rotated).norm();
        out.score(a) = out.y_hat(a) + alpha * out.ucb(a);
    }
    out.arm = argmax_lowest(out.score);
    return out;
}

void ProjectedOfulLearner::observe(Arm a, const Vector& x, double r) {
    auto& s = arms_.at(a);
    s.stats.observe(x, r);
    s.dirty = true;
}

const Vector& ProjectedOfulLearner::kernel_estimate(Arm a) {
    auto& s = arms_.at(a);
    refresh(s);
    return s.solution.w;
}

Vector ProjectedOfulLearner::estimate(Arm a) {
    auto& s = arms_.at(a);
    refresh(s);
    return s.pinv_b + s.solution.w;
}

OfulLearner::OfulLearner(std::size_t d, std::size_t K, double lambda) : d_(d) {
    if (d == 0 || K == 0) {
        throw InvalidArgument("learner needs d >= 1 and K >= 1");
    }
    if (!(lambda > 0.0)) {
        throw InvalidArgument("lambda must be positive");
    }
    const auto n = static_cast<Eigen::Index>(d);
    arms_.resize(K);
    for (auto& s : arms_) {
        s.V = lambda * Matrix::Identity(n, n);
        s.Y = Vector::Zero(n);
    }
}

StepResult OfulLearner::step(const Vector& x, double beta, double alpha) {
    if (x.size() != static_cast<Eigen::Index>(d_)) {
        throw DimensionError("context length does not match d");
    }
    const auto K = static_cast<Eigen::Index>(arms_.size());
    const double root_beta = std::sqrt(beta);
    StepResult out;
    out.y_hat.resize(K);
    out.ucb.resize(K);
    out.score.resize(K);
    for (Eigen::Index a = 0; a < K; ++a) {
        auto& s = arms_[static_cast<std::size_t>(a)];
        if (s.dirty) {
            s.chol.compute(s.V);
            s.w = s.chol.solve(s.Y);
            s.dirty = false;
        }
        out.y_hat(a) = x.dot(s.w);
        out.ucb(a) = root_beta * s.chol.matrixL().solve(x).norm();
        out.score(a) = out.y_hat(a) + alpha * out.ucb(a);
    }
    out.arm = argmax_lowest(out.score);
    return out;
}

void OfulLearner::observe(Arm a, const Vector& x, double r) {
    auto& s = arms_.at(a);
    s.V.noalias() += x * x.transpose();
    s.Y.noalias() += r * x;
    s.dirty = true;
}

// ---------------------------------------------------------------------------
// Simulation

RunStreams RunStreams::from_seed(std::uint64_t seed) {
    return RunStreams{
        RandomStream::derive(seed, {static_cast<std::uint64_t>(StreamPurpose::Contexts)}),
        RandomStream::derive(seed, {static_cast<std::uint64_t>(StreamPurpose::Noise)}),
        RandomStream::derive(seed, {static_cast<std::uint64_t>(StreamPurpose::BehaviorQueries)}),
    };
}

std::vector<ArmSideInfo> known_side_info(const OfflineSideInfo& side, const std::vector<Matrix>& r12) {
    if (r12.size() != side.arms()) {
        throw DimensionError("need one R12 block per arm");
    }
    std::vector<ArmSideInfo> out(side.arms());
    for (Arm a = 0; a < side.arms(); ++a) {
        out[a].M = build_mhat_from_r12(side, r12[a], a);
        out[a].b = side.b_row(a);
    }
    return out;
}

namespace {

struct TraceBuilder {
    RegretTrace trace;
    double total = 0.0;

    TraceBuilder(std::string algo, std::uint64_t seed, std::size_t L, std::uint64_t T) {
        trace.algo_id = std::move(algo);
        trace.seed = seed;
        trace.L = L;
        trace.actions.reserve(T);
        trace.inst_regret.reserve(T);
        trace.cum_regret.reserve(T);
    }

    void record(const BanditEnvironment& env, const Vector& x, Arm a) {
        const double gap = best_action_value(env, x).value - mean_reward(env, x, a);
        total += gap;
        trace.actions.push_back(a);
        trace.inst_regret.push_back(gap);
        trace.cum_regret.push_back(total);
    }
};

std::size_t side_rank(const std::vector<ArmSideInfo>& side) {
    std::size_t L = 0;
    for (std::size_t a = 0; a < side.size(); ++a) {
        const std::size_t l = side[a].M ? side[a].M->visible_dim() : 0;
        if (a == 0) {
            L = l;
        } else if (l != L) {
            throw InvalidArgument("all arms must share the side-information rank");
        }
    }
    return L;
}

}  // namespace

RegretTrace run_projected_oful(const BanditEnvironment& env, const std::vector<ArmSideInfo>& side,
                               const ConfidenceParams& params, std::uint64_t T, std::uint64_t seed) {
    params.validate();
    if (side.size() != env.K) {
        throw DimensionError("need side information for every arm");
    }
    const std::size_t L = side_rank(side);
    ProjectedOfulLearner learner(env.d, env.K, params.lambda);
    for (Arm a = 0; a < env.K; ++a) {
        if (side[a].M) {
            learner.set_side(a, *side[a].M, side[a].b);
        }
    }
    auto streams = RunStreams::from_seed(seed);
    TraceBuilder out(L == 0 ? "oful" : "projected_oful", seed, L, T);
    for (std::uint64_t t = 1; t <= T; ++t) {
        const Vector x = sample_context(env, streams.contexts);
        const double beta = beta_known(params, static_cast<std::size_t>(t - 1), env.d, L, env.K);
        const Arm a = learner.step(x, beta, params.alpha).arm;
        const double r = reward(env, x, a, streams.noise);
        out.record(env, x, a);
        learner.observe(a, x, r);
    }
    return std::move(out.trace);
}

RegretTrace run_plain_oful(const BanditEnvironment& env, const ConfidenceParams& params, std::uint64_t T,
                           std::uint64_t seed) {
    params.validate();
    OfulLearner learner(env.d, env.K, params.lambda);
    auto streams = RunStreams::from_seed(seed);
    TraceBuilder out("textbook_oful", seed, 0, T);
    for (std::uint64_t t = 1; t <= T; ++t) {
        const Vector x = sample_context(env, streams.contexts);
        const double beta = beta_known(params, static_cast<std::size_t>(t - 1), env.d, 0, env.K);
        const Arm a = learner.step(x, beta, params.alpha).arm;
        const double r = reward(env, x, a, streams.noise);
        out.record(env, x, a);
        learner.observe(a, x, r);
    }
    return std::move(out.trace);
}

RegretTrace run_doubling_oful(const BanditEnvironment& env, const OfflineSideInfo& side,
                              const ConfidenceParams& params, std::uint64_t T, std::uint64_t seed,
                              DoublingMode mode, const std::optional<std::vector<Matrix>>& fixed_r12) {
    if (T == 0) {
        throw InvalidArgument("doubling run needs T >= 1");
    }
    ConfidenceParams p = params;
    p.horizon_T = T;
    p.validate();
    if (side.arms() != env.K || side.d != env.d) {
        throw DimensionError("offline side information does not match environment");
    }
    for (Arm a = 0; a < env.K; ++a) {
        if (!(side.arm_freq(static_cast<Eigen::Index>(a)) > 0.0)) {
            throw ArmError(a, "behavior frequency is zero");
        }
    }
    if (fixed_r12 && fixed_r12->size() != env.K) {
        throw DimensionError("need one R12 block per arm");
    }

    const std::size_t L = side.L;
    OnlineCrossCorr cc(env.d, L, side.arm_freq);
    ProjectedOfulLearner learner(env.d, env.K, p.lambda);
    auto streams = RunStreams::from_seed(seed);
    TraceBuilder out(mode == DoublingMode::Faithful ? "doubling_faithful" : "doubling_continuous", seed, L, T);

    auto rebuild = [&] {
        for (Arm a = 0; a < env.K; ++a) {
            const auto mhat = fixed_r12 ? build_mhat_from_r12(side, (*fixed_r12)[a], a) : build_mhat(side, cc, a);
            learner.set_side(a, mhat, side.b_row(a));
        }
    };

    std::uint64_t epoch_start = 1;
    for (std::uint64_t t = 1; t <= T; ++t) {
        const Vector x = sample_context(env, streams.contexts);
        cc.update(x, behavior_action(env, x, streams.behavior));

        const auto n = static_cast<std::size_t>(std::bit_width(t) - 1);
        std::uint64_t t_beta = t - 1;
        if (mode == DoublingMode::Continuous) {
            rebuild();
        } else {
            if (t == (std::uint64_t{1} << n)) {
                epoch_start = t;
                rebuild();
                learner.reset_statistics();
            }
            t_beta = t - epoch_start;
        }
        const double beta = beta_doubling(p, n, static_cast<std::size_t>(t_beta), env.d, L, env.K);
        const Arm a = learner.step(x, beta, p.alpha).arm;
        const double r = reward(env, x, a, streams.noise);
        out.record(env, x, a);
        learner.observe(a, x, r);
    }
    return std::move(out.trace);
}

}  // namespace sidebandit
