#include "sidebandit/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace sidebandit {

void ConfidenceParams::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!positive(lambda)) throw InvalidArgument("lambda must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
    if (!nonneg(sigma)) throw InvalidArgument("sigma must be nonnegative");
    if (!positive(S_x)) throw InvalidArgument("S_x must be positive");
    if (!positive(S_w)) throw InvalidArgument("S_w must be positive");
    if (!positive(S_xo)) throw InvalidArgument("S_xo must be positive");
    if (!positive(S_wo)) throw InvalidArgument("S_wo must be positive");
    if (!nonneg(alpha)) throw InvalidArgument("alpha must be nonnegative");
    if (!nonneg(C_B1)) throw InvalidArgument("C_B1 must be nonnegative");
    if (!nonneg(C_B2)) throw InvalidArgument("C_B2 must be nonnegative");
    if (horizon_T < 1) throw InvalidArgument("horizon_T must be >= 1");
}

// ---------------------------------------------------------------------------
// Offline least squares

OfflineAccumulator::OfflineAccumulator(std::size_t d, std::size_t L, std::size_t K) : d_(d), L_(L) {
    if (L < 1 || L > d) {
        throw InvalidArgument("offline least squares needs 1 <= L <= d");
    }
    const auto l = static_cast<Eigen::Index>(L);
    xtx_.assign(K, Matrix::Zero(l, l));
    xty_.assign(K, Vector::Zero(l));
    counts_.assign(K, 0);
}

void OfflineAccumulator::add(const Eigen::Ref<const Vector>& x_obs, Arm a, double r) {
    if (a >= counts_.size()) {
        throw InvalidArgument("arm index out of range");
    }
    const auto l = static_cast<Eigen::Index>(L_);
    if (x_obs.size() < l) {
        throw DimensionError("observed context shorter than L");
    }
    const auto xo = x_obs.head(l);
    xtx_[a].selfadjointView<Eigen::Lower>().rankUpdate(xo);
    xty_[a].noalias() += r * xo;
    ++counts_[a];
    ++rows_;
}

OfflineSideInfo OfflineAccumulator::finish() const {
    const std::size_t K = counts_.size();
    const auto l = static_cast<Eigen::Index>(L_);
    OfflineSideInfo side;
    side.d = d_;
    side.L = L_;
    side.b.resize(static_cast<Eigen::Index>(K), l);
    side.arm_freq.resize(static_cast<Eigen::Index>(K));
    side.counts = counts_;
    side.R11.reserve(K);
    side.R11_chol.reserve(K);
    for (Arm a = 0; a < K; ++a) {
        if (counts_[a] < L_ + 1) {
            throw ArmError(a, "needs at least L + 1 = " + std::to_string(L_ + 1) + " offline rows, has " +
                                  std::to_string(counts_[a]));
        }
        const double n = static_cast<double>(counts_[a]);
        Matrix r11 = xtx_[a].selfadjointView<Eigen::Lower>();
        r11 /= n;
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(r11, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues()(0);
        const double hi = eig.eigenvalues()(l - 1);
        if (!(lo > 0.0) || hi / lo > kMaxR11Condition) {
            throw ArmError(a, "visible second-moment matrix R11 is singular; choose different covariates");
        }
        Eigen::LLT<Matrix> chol(r11);
        side.b.row(static_cast<Eigen::Index>(a)) = chol.solve(xty_[a] / n).transpose();
        side.arm_freq(static_cast<Eigen::Index>(a)) = n / static_cast<double>(rows_);
        side.R11.push_back(std::move(r11));
        side.R11_chol.push_back(std::move(chol));
    }
    return side;
}

OfflineSideInfo offline_least_squares(const OfflineDataset& data) {
    OfflineAccumulator acc(data.d, data.L, data.K);
    for (std::size_t i = 0; i < data.size(); ++i) {
        acc.add(data.x_obs.row(static_cast<Eigen::Index>(i)).transpose(), data.actions[i],
                data.rewards(static_cast<Eigen::Index>(i)));
    }
    auto side = acc.finish();
    if (data.arm_freq.size() == side.arm_freq.size()) {
        side.arm_freq = data.arm_freq;
    }
    return side;
}

OfflineSideInfo offline_least_squares_streaming(const BanditEnvironment& env, std::size_t L, std::size_t N,
                                                RandomStream& rng) {
    if (N == 0) {
        throw InvalidArgument("offline dataset needs N >= 1");
    }
    OfflineAccumulator acc(env.d, L, env.K);
    for_each_offline_row(env, N, rng, [&](const Vector& x, Arm a, double r) { acc.add(x, a, r); });
    return acc.finish();
}

// ---------------------------------------------------------------------------
// Online cross-correlation

OnlineCrossCorr::OnlineCrossCorr(std::size_t d, std::size_t L, Vector arm_freq)
    : d_(d), L_(L), arm_freq_(std::move(arm_freq)) {
    if (L < 1 || L >= d) {
        throw InvalidArgument("cross-correlation estimate needs 1 <= L < d");
    }
    const auto K = static_cast<std::size_t>(arm_freq_.size());
    sums_.assign(K, Matrix::Zero(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(d - L)));
    counts_.assign(K, 0);
}

void OnlineCrossCorr::update(const Vector& x, Arm behavior_arm) {
    if (behavior_arm >= sums_.size()) {
        throw InvalidArgument("arm index out of range");
    }
    if (x.size() != static_cast<Eigen::Index>(d_)) {
        throw DimensionError("context length does not match d");
    }
    const auto l = static_cast<Eigen::Index>(L_);
    const auto h = static_cast<Eigen::Index>(d_ - L_);
    sums_[behavior_arm].noalias() += x.head(l) * x.tail(h).transpose();
    ++counts_[behavior_arm];
    ++t_;
}

Matrix OnlineCrossCorr::estimate(Arm a, CrossCorrNormalization norm) const {
    if (a >= sums_.size()) {
        throw InvalidArgument("arm index out of range");
    }
    const double p = arm_freq_(static_cast<Eigen::Index>(a));
    if (!(p > 0.0)) {
        throw ArmError(a, "behavior frequency is zero");
    }
    if (norm == CrossCorrNormalization::PerRound) {
        if (t_ == 0) {
            throw InvalidArgument("no behavior-policy samples yet");
        }
        return sums_[a] / (static_cast<double>(t_) * p);
    }
    if (t_ < 2) {
        throw InvalidArgument("unbiased estimate needs at least two samples");
    }
    return sums_[a] / (static_cast<double>(t_ - 1) * p);
}

DeconfounderMatrix build_mhat_from_r12(const OfflineSideInfo& side, const Matrix& r12, Arm a) {
    if (a >= side.arms()) {
        throw InvalidArgument("arm index out of range");
    }
    return build_deconfounder(side.L, side.d, side.R11_chol[a].solve(r12));
}

DeconfounderMatrix build_mhat(const OfflineSideInfo& side, const OnlineCrossCorr& cc, Arm a) {
    return build_mhat_from_r12(side, cc.estimate(a), a);
}

FiniteSampleConstants finite_sample_constants(const ConfidenceParams& params, const OfflineSideInfo& side,
                                       const std::vector<double>& trace_r22) {
    if (trace_r22.size() != side.arms()) {
        throw DimensionError("need tr R22 for every arm");
    }
    double kappa = 0.0;
    double tau = 0.0;
    for (Arm a = 0; a < side.arms(); ++a) {
        const double p = side.arm_freq(static_cast<Eigen::Index>(a));
        if (!(p > 0.0)) {
            throw ArmError(a, "behavior frequency is zero");
        }
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(side.R11[a], Eigen::EigenvaluesOnly);
        kappa = std::max(kappa, 1.0 / (eig.eigenvalues()(0) * p));
        tau = std::max(tau, std::sqrt(side.R11[a].trace() * trace_r22[a]));
    }
    constexpr double S1 = 1.0;
    constexpr double S2 = 1.0;
    const double log_term = std::log(static_cast<double>(side.d) / params.delta);
    return FiniteSampleConstants{
        kappa * std::sqrt(2.0 * S1 * S2 * tau * log_term),
        0.75 * kappa * S1 * S2 * log_term,
    };
}

double mhat_error_budget(const ConfidenceParams& params, const OfflineSideInfo& side,
                         const std::vector<double>& trace_r22, std::size_t t) {
    if (t == 0) {
        throw InvalidArgument("error budget needs t >= 1");
    }
    const auto c = finite_sample_constants(params, side, trace_r22);
    const double tt = static_cast<double>(t);
    return c.C_B1 / std::sqrt(tt) + c.C_B2 / tt;
}

// ---------------------------------------------------------------------------
// Projected ridge regression

PRRState PRRState::empty(std::size_t d, double lambda) {
    if (!(lambda > 0.0)) {
        throw InvalidArgument("lambda must be positive");
    }
    const auto n = static_cast<Eigen::Index>(d);
    return PRRState{lambda * Matrix::Identity(n, n), Vector::Zero(n), lambda};
}

void PRRState::observe(const Vector& x, double r) {
    V.noalias() += x * x.transpose();
    Y.noalias() += r * x;
}

PrrSolution solve_prr(const Matrix& V, const Vector& Y, double lambda, const Matrix& U, const Vector& pinv_b) {
    const Matrix VU = V * U;
    const Matrix V_tilde = U.transpose() * VU;
    Vector target = Y;
    target.noalias() -= V * pinv_b;
    target += lambda * pinv_b;
    PrrSolution out;
    out.chol.compute(V_tilde);
    if (out.chol.info() != Eigen::Success) {
        throw InvalidArgument("rotated Gram matrix is not positive definite");
    }
    const Vector rotated = U.transpose() * target;
    out.w = U * out.chol.solve(rotated);
    return out;
}

Vector prr_estimate(const PRRState& state, const DeconfounderMatrix& mhat, const Vector& b) {
    const auto d = static_cast<Eigen::Index>(mhat.dim());
    if (state.V.rows() != d || state.V.cols() != d || state.Y.size() != d) {
        throw DimensionError("ridge statistics do not match deconfounder dimension");
    }
    if (b.size() != static_cast<Eigen::Index>(mhat.visible_dim())) {
        throw DimensionError("side-information vector must have length L");
    }
    const Vector pinv_b = mhat.pinv() * b;
    return solve_prr(state.V, state.Y, state.lambda, mhat.kernel_basis(), pinv_b).w;
}

}  // namespace sidebandit
