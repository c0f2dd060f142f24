#pragma once

// Synthetic contextual-bandit environment: unit-norm contexts, linear rewards
// with Gaussian noise, a softmax behavior policy, partially observed offline
// logs and Monte Carlo ground truth for the per-arm conditional moments.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "sidebandit/common.hpp"
#include "sidebandit/rng.hpp"

namespace sidebandit {

struct BanditEnvironment {
    std::size_t d = 0;
    std::size_t K = 0;
    Matrix W;            // K x d, row a is w*_a
    double sigma = 0.1;  // reward noise standard deviation
    Matrix phi;          // K x d behavior-policy logit vectors
    std::uint64_t rng_seed = 0;
};

/// Default generator: W uniform on [0, 1/d]^d, phi uniform on [-1, 1]^d.
/// `phi_attempt` selects an alternative logit draw while keeping W fixed.
BanditEnvironment make_environment(std::size_t d, std::size_t K, double sigma, std::uint64_t seed,
                                   std::uint64_t phi_attempt = 0);

/// u / ||u|| with u uniform on [0, 1]^d.
Vector sample_context(const BanditEnvironment& env, RandomStream& rng);

double mean_reward(const BanditEnvironment& env, const Vector& x, Arm a);

/// <x, w*_a> + sigma * N(0, 1). Always consumes exactly one normal draw.
double reward(const BanditEnvironment& env, const Vector& x, Arm a, RandomStream& rng);

/// pi_b(. | x), softmax of phi_a^T x with logits shifted by their max.
Vector behavior_probabilities(const BanditEnvironment& env, const Vector& x);

Arm behavior_action(const BanditEnvironment& env, const Vector& x, RandomStream& rng);

struct BestAction {
    Arm arm = 0;
    double value = 0.0;
};

/// Argmax of <x, w*_a>, lowest index on ties.
BestAction best_action_value(const BanditEnvironment& env, const Vector& x);

struct OfflineDataset {
    std::size_t d = 0;
    std::size_t L = 0;
    std::size_t K = 0;
    Matrix x_obs;              // N x L, first L coordinates of each context
    std::vector<Arm> actions;  // length N
    Vector rewards;            // length N
    Vector arm_freq;           // length K, empirical P^{pi_b}(a)

    std::size_t size() const noexcept { return actions.size(); }
    std::vector<std::size_t> arm_counts() const;
};

/// Streams N logged rows (full context, behavior action, reward) without
/// storing them. Draw order per row: context, action, reward noise.
void for_each_offline_row(const BanditEnvironment& env, std::size_t N, RandomStream& rng,
                          const std::function<void(const Vector& x, Arm a, double r)>& visit);

/// Materializes N rows keeping only the first L context coordinates.
/// Requires 1 <= L <= d (L = d means fully observed logs).
OfflineDataset generate_offline_dataset(const BanditEnvironment& env, std::size_t L, std::size_t N,
                                        RandomStream& rng);

/// CSV layout, one record per line:
///   sidebandit-offline-dataset,1
///   d,L,K,N
///   <d>,<L>,<K>,<N>
///   arm_freq,<f_0>,...,<f_{K-1}>
///   x0,...,x{L-1},action,reward
///   N data rows
/// Reals are written with 17 significant digits so a round trip is exact.
void write_offline_dataset(std::ostream& out, const OfflineDataset& data);
OfflineDataset read_offline_dataset(std::istream& in);

/// Per-arm conditional second moments E[x x^T | a] under x ~ P_x, a ~ pi_b(x).
struct ConditionalMoments {
    std::vector<Matrix> second_moment;  // K matrices, d x d
    std::vector<std::size_t> counts;    // samples per arm
    std::size_t samples = 0;

    Matrix r11(Arm a, std::size_t L) const;  // L x L
    Matrix r12(Arm a, std::size_t L) const;  // L x (d-L)
    Matrix r22(Arm a, std::size_t L) const;  // (d-L) x (d-L)
};

inline constexpr std::size_t kMinOracleSamples = 10'000;
inline constexpr std::size_t kMinArmSamples = 30;

/// Monte Carlo estimate from n_mc fresh (x, a ~ pi_b) pairs. Throws ArmError
/// if an arm receives fewer than 30 samples.
ConditionalMoments oracle_moments(const BanditEnvironment& env, std::size_t n_mc, RandomStream& rng);

struct ArmMoments {
    Matrix R11;
    Matrix R12;
};

/// Visible/hidden split of oracle_moments for a given L.
std::vector<ArmMoments> oracle_moments(const BanditEnvironment& env, std::size_t L, std::size_t n_mc,
                                       RandomStream& rng);

}  // namespace sidebandit
