#pragma once

// Online learners: textbook per-arm OFUL, OFUL with known linear side
// information (projected OFUL), and the epoch-based variant that estimates the
// deconfounder matrices online from behavior-policy queries.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sidebandit/common.hpp"
#include "sidebandit/confidence.hpp"
#include "sidebandit/env.hpp"
#include "sidebandit/estimation.hpp"
#include "sidebandit/linalg.hpp"

namespace sidebandit {

// ---------------------------------------------------------------------------
// Confidence radii and bounds

/// (lambda^{1/2} s_w + noise * sqrt(m log(K (1 + t s_x^2 / lambda) / delta)))^2,
/// the squared radius shared by every learner here; m is the kernel dimension.
double confidence_radius_sq(double noise, double s_x, double s_w, double lambda, double delta, double t,
                            std::size_t kernel_dim, std::size_t K);

/// beta_t(delta) with known side information of rank L.
double beta_known(const ConfidenceParams& params, std::size_t t, std::size_t d, std::size_t L, std::size_t K);

/// Number of doubling epochs covering T rounds: epoch n holds rounds
/// [2^n, 2^{n+1}) (1-based), so this is floor(log2 T) + 1.
std::size_t doubling_epochs(std::uint64_t T);

/// delta / (2 log T) with log T read as the epoch count.
double doubling_delta(const ConfidenceParams& params);

/// beta_{n,t}(delta): noise inflated by S_x S_w C_n, C_n = C_B1 + C_B2 2^{-n/2},
/// confidence split over epochs via doubling_delta. Uses params.horizon_T.
double beta_doubling(const ConfidenceParams& params, std::size_t n, std::size_t t, std::size_t d, std::size_t L,
                     std::size_t K);

/// High-probability regret bound for projected OFUL with known side
/// information, transcribed as stated (its first logarithm has no T inside).
/// Requires lambda + S_xo^2 / ((d-L) K) > 1.
double theorem1_bound(const ConfidenceParams& params, std::uint64_t T, std::size_t d, std::size_t L, std::size_t K);

// ---------------------------------------------------------------------------
// Learners

/// Linear side information M_a w*_a = b_a for one arm. Without M the learner
/// estimates w*_a in the full space (P = I, M^+ b = 0).
struct ArmSideInfo {
    std::optional<DeconfounderMatrix> M;
    Vector b;
};

struct StepResult {
    Arm arm = 0;
    Vector y_hat;  // <x, M^+ b> + <x, w^P>
    Vector ucb;    // sqrt(beta) ||x||_{(P V P)^+}
    Vector score;  // y_hat + alpha * ucb
};

/// Index of the largest score, lowest index on ties.
Arm argmax_lowest(const Vector& score);

class ProjectedOfulLearner {
public:
    ProjectedOfulLearner(std::size_t d, std::size_t K, double lambda);

    void set_side(Arm a, const DeconfounderMatrix& M, const Vector& b);
    void clear_side(Arm a);
    /// V_a = lambda I, Y_a = 0 for every arm; side information is kept.
    void reset_statistics();

    StepResult step(const Vector& x, double beta, double alpha);
    void observe(Arm a, const Vector& x, double r);

    const PRRState& state(Arm a) const { return arms_.at(a).stats; }
    /// Kernel component estimate w^P_a.
    const Vector& kernel_estimate(Arm a);
    /// Full estimate M^+ b + w^P.
    Vector estimate(Arm a);
    std::size_t dim() const noexcept { return d_; }
    std::size_t arms() const noexcept { return arms_.size(); }

private:
    struct ArmState {
        PRRState stats;
        Matrix U;       // kernel basis, identity without side information
        Vector pinv_b;  // M^+ b, zero without side information
        PrrSolution solution;
        bool dirty = true;
    };
    void refresh(ArmState& s) const;

    std::size_t d_;
    double lambda_;
    std::vector<ArmState> arms_;
};

/// Textbook per-arm OFUL: ridge estimate V^{-1} Y and bonus sqrt(beta) ||x||_{V^{-1}}.
class OfulLearner {
public:
    OfulLearner(std::size_t d, std::size_t K, double lambda);

    StepResult step(const Vector& x, double beta, double alpha);
    void observe(Arm a, const Vector& x, double r);

private:
    struct ArmState {
        Matrix V;
        Vector Y;
        Eigen::LLT<Matrix> chol;
        Vector w;
        bool dirty = true;
    };
    std::size_t d_;
    std::vector<ArmState> arms_;
};

// ---------------------------------------------------------------------------
// Simulation

struct RegretTrace {
    std::string algo_id;
    std::uint64_t seed = 0;
    std::size_t L = 0;
    std::vector<Arm> actions;
    std::vector<double> inst_regret;
    std::vector<double> cum_regret;

    std::size_t rounds() const noexcept { return inst_regret.size(); }
    double final_regret() const noexcept { return cum_regret.empty() ? 0.0 : cum_regret.back(); }
};

/// Streams of one repetition: contexts, reward noise and behavior queries are
/// drawn from independent streams derived from `seed`, so learners run with the
/// same seed see the same contexts and noise.
struct RunStreams {
    RandomStream contexts;
    RandomStream noise;
    RandomStream behavior;

    static RunStreams from_seed(std::uint64_t seed);
};

/// Per-arm side information from the offline logs and per-arm R12 matrices
/// (known-R12 mode). L = 0 yields no side information.
std::vector<ArmSideInfo> known_side_info(const OfflineSideInfo& side, const std::vector<Matrix>& r12);

/// Projected OFUL with fixed side information; `side` may be empty (K entries
/// without M) for the plain baseline. Uses beta_known with L = side rank.
RegretTrace run_projected_oful(const BanditEnvironment& env, const std::vector<ArmSideInfo>& side,
                               const ConfidenceParams& params, std::uint64_t T, std::uint64_t seed);

/// Textbook OFUL reference run with beta_known at L = 0.
RegretTrace run_plain_oful(const BanditEnvironment& env, const ConfidenceParams& params, std::uint64_t T,
                           std::uint64_t seed);

enum class DoublingMode {
    Faithful,    // refresh M_hat at epoch starts and discard V, Y
    Continuous,  // refresh M_hat every round, never discard
};

/// OFUL with side information estimated online: every round queries the
/// behavior policy once and feeds the cross-correlation estimate. When
/// `fixed_r12` is given those matrices replace the online estimate.
RegretTrace run_doubling_oful(const BanditEnvironment& env, const OfflineSideInfo& side,
                              const ConfidenceParams& params, std::uint64_t T, std::uint64_t seed,
                              DoublingMode mode, const std::optional<std::vector<Matrix>>& fixed_r12 = std::nullopt);

}  // namespace sidebandit
