#include "peecs/rfs_core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

using namespace peecs;

namespace {

ParticleSet make_set(std::initializer_list<double> xs, std::initializer_list<double> ws) {
    ParticleSet p;
    p.states.resize(1, static_cast<Eigen::Index>(xs.size()));
    p.weights.resize(static_cast<Eigen::Index>(ws.size()));
    Eigen::Index i = 0;
    for (double x : xs) p.states(0, i++) = x;
    i = 0;
    for (double w : ws) p.weights[i++] = w;
    return p;
}

}  // namespace

TEST(NormalizeWeights, Examples) {
    EXPECT_EQ(normalize_weights(make_set({0, 1}, {2, 2})).weights, Eigen::Vector2d(0.5, 0.5));
    EXPECT_EQ(normalize_weights(make_set({0}, {1})).weights[0], 1.0);
    const auto w = normalize_weights(make_set({0, 1}, {1, 3})).weights;
    EXPECT_DOUBLE_EQ(w[0], 0.25);
    EXPECT_DOUBLE_EQ(w[1], 0.75);
}

TEST(NormalizeWeights, AllZeroThrows) {
    EXPECT_THROW((void)normalize_weights(make_set({0, 1}, {0, 0})), AllWeightsZero);
    EXPECT_THROW((void)normalize_weights(make_set({0}, {1e-310})), AllWeightsZero);
}

TEST(NormalizeWeights, Idempotent) {
    RandomSource rng(3);
    for (int t = 0; t < 100; ++t) {
        Eigen::VectorXd w(7);
        for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.uniform(0.0, 10.0);
        normalize_weights(w);
        EXPECT_NEAR(w.sum(), 1.0, 1e-9);
        Eigen::VectorXd again = w;
        normalize_weights(again);
        for (Eigen::Index i = 0; i < w.size(); ++i) EXPECT_NEAR(again[i], w[i], 1e-15);
    }
}

TEST(WeightedMean, Examples) {
    ParticleSet p;
    p.states.resize(2, 2);
    p.states << 0, 2, 0, 4;
    p.weights = Eigen::Vector2d(0.5, 0.5);
    EXPECT_EQ(weighted_mean(p), Eigen::Vector2d(1, 2));
    EXPECT_EQ(weighted_mean(make_set({7}, {1}))[0], 7.0);
    EXPECT_DOUBLE_EQ(weighted_mean(make_set({0, 4}, {0.25, 0.75}))[0], 3.0);
}

TEST(Resample, SingleSupport) {
    RandomSource rng(1);
    BernoulliComponent c{0.7, make_set({5}, {1})};
    const auto out = resample(c, 4, rng);
    ASSERT_EQ(out.particles.size(), 4);
    for (Eigen::Index j = 0; j < 4; ++j) {
        EXPECT_EQ(out.particles.states(0, j), 5.0);
        EXPECT_EQ(out.particles.weights[j], 0.25);
    }
    EXPECT_EQ(out.existence, 0.7);
}

TEST(Resample, BinomialBound) {
    const BernoulliComponent c{0.5, make_set({0, 1}, {0.5, 0.5})};
    const double bound = 3.0 * std::sqrt(1000.0 * 0.25);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        RandomSource rng(seed);
        const auto out = resample(c, 1000, rng);
        const auto ones = (out.particles.states.row(0).array() == 1.0).count();
        EXPECT_LE(std::abs(static_cast<double>(ones) - 500.0), bound);
    }
}

TEST(Resample, PreservesMeanInExpectation) {
    const BernoulliComponent c{0.9, make_set({0, 1, 5, 9}, {0.1, 0.2, 0.3, 0.4})};
    const double truth = weighted_mean(c.particles)[0];
    std::vector<double> means;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        RandomSource rng(seed);
        means.push_back(weighted_mean(resample(c, 7, rng).particles)[0]);
    }
    double m = 0.0, v = 0.0;
    for (double x : means) m += x;
    m /= static_cast<double>(means.size());
    for (double x : means) v += (x - m) * (x - m);
    const double se = std::sqrt(v / static_cast<double>(means.size() - 1) / static_cast<double>(means.size()));
    EXPECT_LT(std::abs(m - truth), 3.0 * se + 1e-12);
}

TEST(Resample, ZeroWeightParticlesNeverChosen) {
    const BernoulliComponent c{0.5, make_set({1, 2, 3}, {0.5, 0.5, 0.0})};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        RandomSource rng(seed);
        const auto out = resample(c, 101, rng);
        EXPECT_FALSE((out.particles.states.row(0).array() == 3.0).any());
    }
}

TEST(RandomSource, Reproducible) {
    RandomSource a(99), b(99);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
    RandomSource c(99);
    (void)c.uniform();
    RandomSource d(99);
    EXPECT_EQ(c.split(5).uniform(), d.split(5).uniform());
    EXPECT_NE(RandomSource(1).split(1).uniform(), RandomSource(1).split(2).uniform());
}

TEST(ParticleBudget, RoundsAndClamps) {
    EXPECT_EQ(particle_budget(0.2, 300, 100, 1000), 300u);
    EXPECT_EQ(particle_budget(2.6, 300, 100, 1000), 900u);
    EXPECT_EQ(particle_budget(5.0, 300, 100, 1000), 1000u);
    EXPECT_EQ(particle_budget(0.5, 50, 100, 1000), 100u);
}

TEST(MultiBernoulli, ExpectedCardinality) {
    MultiBernoulliDensity d;
    d.components.push_back({0.3, make_set({0}, {1})});
    d.components.push_back({0.6, make_set({0}, {1})});
    EXPECT_DOUBLE_EQ(d.expected_cardinality(), 0.9);
}
