#pragma once

// Estimators: low-order least squares on the partially observed logs, the
// online cross-correlation estimate of R12, the deconfounder estimate built
// from both, and projected ridge regression (P-RR).

#include <vector>

#include <Eigen/Cholesky>

#include "sidebandit/common.hpp"
#include "sidebandit/confidence.hpp"
#include "sidebandit/env.hpp"
#include "sidebandit/linalg.hpp"

namespace sidebandit {

/// What the offline logs tell the online learner: per-arm b_a^LS, the
/// empirical visible second moment R11(a) and the behavior frequencies.
struct OfflineSideInfo {
    std::size_t d = 0;
    std::size_t L = 0;
    Matrix b;                             // K x L
    std::vector<Matrix> R11;              // K matrices, L x L
    std::vector<Eigen::LLT<Matrix>> R11_chol;
    Vector arm_freq;                      // K
    std::vector<std::size_t> counts;      // rows per arm

    std::size_t arms() const noexcept { return R11.size(); }
    Vector b_row(Arm a) const { return b.row(static_cast<Eigen::Index>(a)).transpose(); }
};

/// Above this condition number R11(a) is treated as singular.
inline constexpr double kMaxR11Condition = 1e12;

/// Streaming accumulator behind offline_least_squares.
class OfflineAccumulator {
public:
    OfflineAccumulator(std::size_t d, std::size_t L, std::size_t K);

    /// `x_obs` holds at least the first L coordinates of the context.
    void add(const Eigen::Ref<const Vector>& x_obs, Arm a, double r);

    /// Throws ArmError for an arm with fewer than L + 1 rows or a singular R11.
    OfflineSideInfo finish() const;

    const std::vector<std::size_t>& counts() const noexcept { return counts_; }
    std::size_t rows() const noexcept { return rows_; }

private:
    std::size_t d_;
    std::size_t L_;
    std::vector<Matrix> xtx_;
    std::vector<Vector> xty_;
    std::vector<std::size_t> counts_;
    std::size_t rows_ = 0;
};

/// b_a = (sum x^o x^o^T / N_a)^{-1} (sum x^o r / N_a) for every arm.
OfflineSideInfo offline_least_squares(const OfflineDataset& data);

/// Same estimate, generated and accumulated row by row (no N x L storage).
/// Equals offline_least_squares(generate_offline_dataset(env, L, N, rng)).
OfflineSideInfo offline_least_squares_streaming(const BanditEnvironment& env, std::size_t L, std::size_t N,
                                                RandomStream& rng);

enum class CrossCorrNormalization {
    PerRound,      // divide by t
    Unbiased,      // divide by t - 1
};

/// Running sums of 1{a_i = a} x^o_i (x^h_i)^T over behavior-policy queries.
class OnlineCrossCorr {
public:
    OnlineCrossCorr(std::size_t d, std::size_t L, Vector arm_freq);

    void update(const Vector& x, Arm behavior_arm);

    /// sums[a] / (t * P(a)). Throws InvalidArgument when t = 0 (or t < 2 for
    /// the unbiased form).
    Matrix estimate(Arm a, CrossCorrNormalization norm = CrossCorrNormalization::PerRound) const;

    std::size_t rounds() const noexcept { return t_; }
    std::size_t count(Arm a) const { return counts_.at(a); }
    const Matrix& sum(Arm a) const { return sums_.at(a); }
    const Vector& arm_freq() const noexcept { return arm_freq_; }

private:
    std::size_t d_;
    std::size_t L_;
    std::size_t t_ = 0;
    std::vector<Matrix> sums_;
    std::vector<std::size_t> counts_;
    Vector arm_freq_;
};

/// [I_L | R11(a)^{-1} R12] for a given cross-correlation block.
DeconfounderMatrix build_mhat_from_r12(const OfflineSideInfo& side, const Matrix& r12, Arm a);

/// [I_L | R11(a)^{-1} R12_hat(a, t)]. Requires cc.rounds() >= 1; an arm the
/// behavior policy has not yet chosen contributes a zero block.
DeconfounderMatrix build_mhat(const OfflineSideInfo& side, const OnlineCrossCorr& cc, Arm a);

struct FiniteSampleConstants {
    double C_B1 = 0.0;
    double C_B2 = 0.0;
};

/// Finite-sample constants of the deconfounder estimation error with
/// S1 = S2 = 1 (unit contexts):
///   kappa = max_a lambda_min(R11(a))^{-1} / P(a)
///   C_B1  = kappa * sqrt(2 * tau * log(d / delta)),  tau = max_a sqrt(tr R11(a) tr R22(a))
///   C_B2  = 3/4 * kappa * log(d / delta)
/// `trace_r22[a]` is tr R22(a), which the logs cannot provide.
FiniteSampleConstants finite_sample_constants(const ConfidenceParams& params, const OfflineSideInfo& side,
                                       const std::vector<double>& trace_r22);

/// C_B1 / sqrt(t) + C_B2 / t.
double mhat_error_budget(const ConfidenceParams& params, const OfflineSideInfo& side,
                         const std::vector<double>& trace_r22, std::size_t t);

/// Per-arm ridge statistics: V = lambda I + sum x x^T, Y = sum r x.
struct PRRState {
    Matrix V;
    Vector Y;
    double lambda = 1.0;

    static PRRState empty(std::size_t d, double lambda);
    void observe(const Vector& x, double r);
};

/// Factorized P-RR solution in the rotated coordinates.
struct PrrSolution {
    Eigen::LLT<Matrix> chol;  // of U^T V U
    Vector w;                 // U (U^T V U)^{-1} U^T (Y - (V - lambda I) pinv_b)
};

/// Kernel-restricted ridge solve for basis U (d x m) and offset pinv_b = M^+ b.
PrrSolution solve_prr(const Matrix& V, const Vector& Y, double lambda, const Matrix& U, const Vector& pinv_b);

/// Minimum-norm P-RR estimate of the kernel component of w*, computed in the
/// (d-L)-dimensional rotated coordinates. The result lies in range(P).
Vector prr_estimate(const PRRState& state, const DeconfounderMatrix& mhat, const Vector& b);

}  // namespace sidebandit
