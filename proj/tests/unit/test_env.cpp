#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "sidebandit/env.hpp"

using namespace sidebandit;

namespace {

BanditEnvironment tiny_env(std::size_t d, std::size_t K, double sigma, std::uint64_t seed) {
    return make_environment(d, K, sigma, seed);
}

Vector softmax_oracle(const Matrix& phi, const Vector& x) {
    Vector p(phi.rows());
    double z = 0.0;
    for (Eigen::Index a = 0; a < phi.rows(); ++a) {
        double logit = 0.0;
        for (Eigen::Index j = 0; j < x.size(); ++j) logit += phi(a, j) * x(j);
        p(a) = std::exp(logit);
        z += p(a);
    }
    return p / z;
}

}  // namespace

TEST_CASE("environment generator ranges") {
    const auto env = tiny_env(30, 30, 0.1, 1);
    CHECK(env.W.rows() == 30);
    CHECK(env.W.minCoeff() >= 0.0);
    CHECK(env.W.maxCoeff() <= 1.0 / 30.0);
    CHECK(env.phi.minCoeff() >= -1.0);
    CHECK(env.phi.maxCoeff() <= 1.0);
    const auto other_phi = make_environment(30, 30, 0.1, 1, 1);
    CHECK(other_phi.W == env.W);
    CHECK(other_phi.phi != env.phi);
    CHECK_THROWS_AS(make_environment(0, 3, 0.1, 1), InvalidArgument);
    CHECK_THROWS_AS(make_environment(3, 3, -0.1, 1), InvalidArgument);
}

TEST_CASE("contexts are nonnegative unit vectors") {
    const auto env = tiny_env(12, 2, 0.1, 4);
    auto rng = RandomStream::derive(1, {5});
    for (int i = 0; i < 1000; ++i) {
        const Vector x = sample_context(env, rng);
        CHECK(std::abs(x.norm() - 1.0) < 1e-12);
        CHECK(x.minCoeff() >= 0.0);
    }
}

TEST_CASE("context sampling replays for a fixed seed") {
    const auto env = tiny_env(8, 2, 0.1, 4);
    RandomStream a(42), b(42);
    const Vector x = sample_context(env, a);
    const Vector y = sample_context(env, b);
    CHECK((x.array() == y.array()).all());
}

TEST_CASE("context mean matches a Monte Carlo pilot") {
    const auto env = tiny_env(5, 1, 0.1, 4);
    RandomStream pilot_rng(777);
    Vector pilot = Vector::Zero(5);
    const int n_pilot = 10'000'000;
    for (int i = 0; i < n_pilot; ++i) pilot += sample_context(env, pilot_rng);
    pilot /= n_pilot;

    RandomStream rng(778);
    const int n = 100'000;
    Vector sum = Vector::Zero(5), sq = Vector::Zero(5);
    for (int i = 0; i < n; ++i) {
        const Vector x = sample_context(env, rng);
        sum += x;
        sq += x.cwiseProduct(x);
    }
    const Vector mean = sum / n;
    for (Eigen::Index j = 0; j < 5; ++j) {
        const double se = std::sqrt((sq(j) / n - mean(j) * mean(j)) / n);
        CHECK(std::abs(mean(j) - pilot(j)) < 3.0 * se);
    }
}

TEST_CASE("noiseless and zero-weight rewards") {
    auto env = tiny_env(4, 2, 0.0, 2);
    RandomStream rng(1);
    const Vector x = sample_context(env, rng);
    CHECK(reward(env, x, 1, rng) == mean_reward(env, x, 1));
    env.W.row(0).setZero();
    CHECK(reward(env, x, 0, rng) == 0.0);
    CHECK_THROWS_AS(reward(env, x, 2, rng), InvalidArgument);
}

TEST_CASE("reward noise averages out at the CLT rate") {
    const auto env = tiny_env(6, 3, 0.1, 8);
    RandomStream rng(12);
    const Vector x = sample_context(env, rng);
    double sum = 0.0;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) sum += reward(env, x, 2, rng);
    CHECK(std::abs(sum / n - mean_reward(env, x, 2)) < 3.0 * 0.1 / std::sqrt(double(n)));
}

TEST_CASE("symmetric logits give a uniform behavior policy") {
    auto env = tiny_env(5, 4, 0.1, 3);
    env.phi.setZero();
    RandomStream rng(5);
    std::vector<int> counts(4, 0);
    const int n = 100'000;
    for (int i = 0; i < n; ++i) ++counts[behavior_action(env, sample_context(env, rng), rng)];
    const double se = std::sqrt(0.25 * 0.75 / n);
    for (int c : counts) CHECK(std::abs(c / double(n) - 0.25) < 3.0 * se);
}

TEST_CASE("two-arm softmax with a log 3 logit gap") {
    auto env = tiny_env(2, 2, 0.1, 3);
    Vector x(2);
    x << 1.0, 0.0;
    env.phi.setZero();
    env.phi(0, 0) = std::log(3.0);
    const Vector p = behavior_probabilities(env, x);
    CHECK(p(0) == doctest::Approx(0.75).epsilon(1e-15));
    RandomStream rng(6);
    int hits = 0;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) hits += behavior_action(env, x, rng) == 0;
    CHECK(std::abs(hits / double(n) - 0.75) < 3.0 * std::sqrt(0.75 * 0.25 / n));
}

TEST_CASE("behavior probabilities match the direct softmax") {
    const auto env = make_environment(30, 30, 0.1, 7);
    RandomStream rng(70);
    const Vector x = sample_context(env, rng);
    const Vector p = behavior_probabilities(env, x);
    CHECK((p - softmax_oracle(env.phi, x)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
}

TEST_CASE("best action scans every arm and breaks ties low") {
    auto env = tiny_env(5, 1, 0.1, 3);
    RandomStream rng(2);
    const Vector x = sample_context(env, rng);
    auto best = best_action_value(env, x);
    CHECK(best.arm == 0);
    CHECK(best.value == env.W.row(0).dot(x));

    env = tiny_env(5, 4, 0.1, 3);
    env.W.row(3) = env.W.row(1);
    env.W.row(1) = 2.0 * env.W.row(1) + Eigen::RowVectorXd::Ones(5);
    env.W.row(3) = env.W.row(1);
    best = best_action_value(env, x);
    CHECK(best.arm == 1);

    const auto env3 = make_environment(10, 12, 0.1, 3);
    for (int i = 0; i < 100; ++i) {
        const Vector y = sample_context(env3, rng);
        Arm arg = 0;
        for (Arm a = 1; a < 12; ++a)
            if (env3.W.row(static_cast<Eigen::Index>(a)).dot(y) > env3.W.row(static_cast<Eigen::Index>(arg)).dot(y))
                arg = a;
        CHECK(best_action_value(env3, y).arm == arg);
    }
}

TEST_CASE("single-row dataset") {
    const auto env = tiny_env(6, 4, 0.1, 1);
    RandomStream rng(3);
    const auto data = generate_offline_dataset(env, 2, 1, rng);
    CHECK(data.size() == 1);
    CHECK(data.x_obs.cols() == 2);
    CHECK(data.arm_freq.sum() == 1.0);
    CHECK(data.arm_freq.maxCoeff() == 1.0);
    CHECK(data.arm_freq(static_cast<Eigen::Index>(data.actions[0])) == 1.0);
    CHECK_THROWS_AS(generate_offline_dataset(env, 0, 10, rng), InvalidArgument);
    CHECK_THROWS_AS(generate_offline_dataset(env, 7, 10, rng), InvalidArgument);
    CHECK_THROWS_AS(generate_offline_dataset(env, 2, 0, rng), InvalidArgument);
}

TEST_CASE("dataset frequencies match the marginal behavior policy") {
    const auto env = make_environment(30, 30, 0.1, 11);
    RandomStream rng(1);
    const std::size_t N = 1'000'000;
    const auto data = generate_offline_dataset(env, 25, N, rng);
    CHECK(std::abs(data.arm_freq.sum() - 1.0) < 1e-12);
    CHECK(data.x_obs.rows() == static_cast<Eigen::Index>(N));

    RandomStream pilot(2);
    Vector marginal = Vector::Zero(30);
    const int n_pilot = 10'000'000;
    for (int i = 0; i < n_pilot; ++i) marginal += behavior_probabilities(env, sample_context(env, pilot));
    marginal /= n_pilot;
    for (Eigen::Index a = 0; a < 30; ++a) {
        const double se = std::sqrt(marginal(a) * (1.0 - marginal(a)) / double(N));
        CHECK(std::abs(data.arm_freq(a) - marginal(a)) < 3.0 * se);
    }
}

TEST_CASE("datasets replay bitwise and keep the visible prefix") {
    const auto env = tiny_env(6, 3, 0.1, 5);
    RandomStream a(9), b(9), c(9);
    const auto d1 = generate_offline_dataset(env, 3, 500, a);
    const auto d2 = generate_offline_dataset(env, 3, 500, b);
    CHECK((d1.x_obs.array() == d2.x_obs.array()).all());
    CHECK(d1.actions == d2.actions);
    CHECK((d1.rewards.array() == d2.rewards.array()).all());
    std::size_t i = 0;
    for_each_offline_row(env, 500, c, [&](const Vector& x, Arm act, double r) {
        CHECK((x.head(3).transpose().array() == d1.x_obs.row(static_cast<Eigen::Index>(i)).array()).all());
        CHECK(act == d1.actions[i]);
        CHECK(r == d1.rewards(static_cast<Eigen::Index>(i)));
        ++i;
    });
}

TEST_CASE("dataset CSV round trip is exact") {
    const auto env = tiny_env(5, 3, 0.1, 6);
    RandomStream rng(4);
    const auto data = generate_offline_dataset(env, 2, 200, rng);
    std::stringstream ss;
    write_offline_dataset(ss, data);
    const auto back = read_offline_dataset(ss);
    CHECK(back.d == 5);
    CHECK(back.L == 2);
    CHECK(back.K == 3);
    CHECK((back.x_obs.array() == data.x_obs.array()).all());
    CHECK(back.actions == data.actions);
    CHECK((back.rewards.array() == data.rewards.array()).all());
    CHECK((back.arm_freq.array() == data.arm_freq.array()).all());
}

TEST_CASE("malformed dataset files are rejected") {
    std::stringstream empty;
    CHECK_THROWS_AS(read_offline_dataset(empty), InvalidArgument);
    std::stringstream wrong("not-a-dataset,1\n");
    CHECK_THROWS_AS(read_offline_dataset(wrong), InvalidArgument);
    std::stringstream truncated(
        "sidebandit-offline-dataset,1\nd,L,K,N\n3,1,2,2\narm_freq,0.5,0.5\nx0,action,reward\n0.5,0,1.0\n");
    CHECK_THROWS_AS(read_offline_dataset(truncated), InvalidArgument);
    std::stringstream bad_arm(
        "sidebandit-offline-dataset,1\nd,L,K,N\n3,1,2,1\narm_freq,0,1\nx0,action,reward\n0.5,7,1.0\n");
    CHECK_THROWS_AS(read_offline_dataset(bad_arm), InvalidArgument);
}

TEST_CASE("oracle moments under a uniform policy agree across arms") {
    auto env = tiny_env(6, 3, 0.1, 2);
    env.phi.setZero();
    RandomStream rng(8);
    const std::size_t n = 300'000;
    const auto mom = oracle_moments(env, n, rng);
    CHECK(mom.samples == n);
    for (Arm a = 1; a < 3; ++a) {
        const Matrix diff = mom.r12(a, 3) - mom.r12(0, 3);
        // Entries of x^o x^h^T lie in [0, 1]; each arm sees about n/3 samples.
        const double se = 0.5 * std::sqrt(2.0 / (n / 3.0));
        CHECK(diff.cwiseAbs().maxCoeff() < 5.0 * se);
    }
    for (Arm a = 0; a < 3; ++a) {
        const Matrix& S = mom.second_moment[a];
        CHECK((S - S.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(mom.r11(a, 3).rows() == 3);
        CHECK(mom.r22(a, 3).cols() == 3);
    }
}

TEST_CASE("two-dimensional second moment matches a pilot") {
    auto env = tiny_env(2, 2, 0.1, 2);
    env.phi.setZero();
    RandomStream pilot(100);
    double m = 0.0;
    const int n_pilot = 10'000'000;
    for (int i = 0; i < n_pilot; ++i) {
        const Vector x = sample_context(env, pilot);
        m += x(0) * x(0);
    }
    m /= n_pilot;
    RandomStream rng(101);
    const std::size_t n = 200'000;
    const auto mom = oracle_moments(env, n, rng);
    for (Arm a = 0; a < 2; ++a) {
        const double r11 = mom.r11(a, 1)(0, 0);
        // Var(x1^2) <= 1/4 for x1 in [0, 1].
        const double se = 0.5 / std::sqrt(double(mom.counts[a]));
        CHECK(std::abs(r11 - m) < 3.0 * se);
    }
}

TEST_CASE("oracle moment error shrinks at the CLT rate") {
    auto env = tiny_env(3, 2, 0.1, 2);
    env.phi.setZero();
    auto spread = [&](std::size_t n, std::uint64_t base) {
        double s = 0.0, s2 = 0.0;
        const int reps = 60;
        for (int r = 0; r < reps; ++r) {
            RandomStream rng(base + static_cast<std::uint64_t>(r));
            const double v = oracle_moments(env, n, rng).second_moment[0](0, 1);
            s += v;
            s2 += v * v;
        }
        const double mean = s / reps;
        return std::sqrt(s2 / reps - mean * mean);
    };
    const double ratio = spread(10'000, 1000) / spread(40'000, 5000);
    CHECK(ratio > 1.5);
    CHECK(ratio < 2.6);
}

TEST_CASE("oracle moments need enough samples per arm") {
    auto env = tiny_env(3, 2, 0.1, 2);
    env.phi.setZero();
    env.phi(0, 0) = 40.0;  // arm 1 almost never chosen
    env.phi(0, 1) = 40.0;
    env.phi(0, 2) = 40.0;
    RandomStream rng(1);
    CHECK_THROWS_AS(oracle_moments(env, 10'000, rng), ArmError);
    CHECK_THROWS_AS(oracle_moments(env, 100, rng), InvalidArgument);
}

TEST_CASE("visible second moments from logs converge to the oracle") {
    const auto env = make_environment(6, 3, 0.1, 21);
    RandomStream orng(5);
    const auto mom = oracle_moments(env, 4'000'000, orng);
    auto r11_err = [&](std::size_t N) {
        RandomStream rng(6);
        const auto data = generate_offline_dataset(env, 3, N, rng);
        std::vector<double> err(3);
        for (Arm a = 0; a < 3; ++a) {
            Matrix S = Matrix::Zero(3, 3);
            std::size_t c = 0;
            for (std::size_t i = 0; i < data.size(); ++i) {
                if (data.actions[i] != a) continue;
                const Vector xo = data.x_obs.row(static_cast<Eigen::Index>(i)).transpose();
                S += xo * xo.transpose();
                ++c;
            }
            err[a] = oracle::svd_norm(S / double(c) - mom.r11(a, 3));
        }
        return err;
    };
    const auto small = r11_err(10'000);
    const auto large = r11_err(1'000'000);
    for (Arm a = 0; a < 3; ++a) CHECK(large[a] < small[a]);
}
