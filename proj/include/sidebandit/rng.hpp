#pragma once

// Seeded random streams.
//
// Every consumer of randomness owns a RandomStream derived from a master seed
// and a short key path (repetition seed, purpose, ...). Keys are folded with
// SplitMix64, so streams for different keys are decorrelated and a stream
// never depends on how many draws another stream made.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace sidebandit {

/// Purpose tags used as the last component of a stream key.
enum class StreamPurpose : std::uint64_t {
    Weights = 1,
    BehaviorLogits = 2,
    OfflineData = 3,
    OracleMoments = 4,
    Contexts = 5,
    Noise = 6,
    BehaviorQueries = 7,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Folds a key path into a single 64-bit seed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) noexcept;

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    static RandomStream derive(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
        return RandomStream(derive_seed(master, keys));
    }

    /// Uniform on [0, 1).
    double uniform() { return uniform_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }
    /// Standard normal.
    double normal() { return normal_(engine_); }
    /// Index drawn from a probability vector by inverse CDF (one uniform draw).
    std::size_t categorical(std::span<const double> probs);

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace sidebandit
