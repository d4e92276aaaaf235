#include "peecs/models.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace peecs;

namespace {
const SensorState origin{};
constexpr double pi = std::numbers::pi;
}  // namespace

TEST(Detection, Examples) {
    const DetectionProfile p{320.0, 0.00025};
    EXPECT_EQ(detection_probability(origin, {100, 0}, p), 1.0);
    EXPECT_DOUBLE_EQ(detection_probability(origin, {1320, 0}, p), 0.75);
    EXPECT_EQ(detection_probability(origin, {4320, 0}, p), 0.0);
    EXPECT_EQ(detection_probability(origin, {320, 0}, p), 1.0);
}

TEST(Detection, ContinuousAndNonIncreasing) {
    const DetectionProfile p{320.0, 0.00025};
    double prev = 1.0;
    for (double d = 0.0; d < 6000.0; d += 0.5) {
        const double v = detection_probability(origin, {d, 0}, p);
        EXPECT_LE(v, prev);
        EXPECT_LE(prev - v, 0.00025 * 0.5 + 1e-12);
        prev = v;
    }
}

TEST(RangeModel, NoiseScale) {
    const RangeSensorModel m{1.0, 5e-5, {}};
    EXPECT_EQ(m.noise_std(0.0), 1.0);
    EXPECT_DOUBLE_EQ(m.noise_std(1000.0), 51.0);
    const double d = 250.0;
    EXPECT_DOUBLE_EQ(range_likelihood(d, origin, {0, d}, m), 1.0 / (m.noise_std(d) * std::sqrt(2.0 * pi)));
}

TEST(RangeModel, IdealMeasurement) {
    const SensorModel m = RangeSensorModel{};
    EXPECT_DOUBLE_EQ(ideal_measurement(origin, Eigen::Vector4d(300, 0, 1, 1), m)[0], 300.0);
    const SensorState moved{{100, 0}};
    EXPECT_DOUBLE_EQ(ideal_measurement(moved, Eigen::Vector4d(300, 0, 1, 1), m)[0], 200.0);
}

TEST(BearingRange, IdealAndPeak) {
    const BearingRangeSensorModel m{pi / 180.0, 5.0, {}};
    const auto z = m.ideal(origin, {0, 1000});
    EXPECT_EQ(z[0], 0.0);
    EXPECT_EQ(z[1], 1000.0);
    EXPECT_DOUBLE_EQ(bearing_range_likelihood(z, origin, {0, 1000}, m), 1.0 / (2.0 * pi * m.sigma_theta * m.sigma_r));
    EXPECT_DOUBLE_EQ(m.ideal(origin, {1000, 0})[0], pi / 2.0);
    EXPECT_DOUBLE_EQ(m.ideal(SensorState{{10, 10}}, {10, 1010})[1], 1000.0);
}

TEST(BearingRange, WrapSymmetry) {
    EXPECT_DOUBLE_EQ(wrap_angle(pi), pi);
    EXPECT_DOUBLE_EQ(wrap_angle(-pi), pi);
    EXPECT_EQ(wrap_angle(wrap_angle(pi) - wrap_angle(-pi)), 0.0);
    const BearingRangeSensorModel m{0.1, 5.0, {}};
    const Eigen::Vector2d behind(0, -500);  // true bearing pi
    Eigen::Vector2d z1(pi, 500), z2(-pi, 500);
    EXPECT_EQ(m.likelihood(z1, origin, behind), m.likelihood(z2, origin, behind));
}

TEST(BearingRange, TwoPiShiftIsExact) {
    const BearingRangeSensorModel m{0.05, 5.0, {}};
    RandomSource rng(4);
    for (int t = 0; t < 1000; ++t) {
        // Dyadic bearings keep b + 2*pi's rounding out of the picture for the comparison itself.
        const double b = std::ldexp(std::floor(rng.uniform(-3.0, 3.0) * 1024.0), -10);
        const Eigen::Vector2d obj(rng.uniform(-800, 800), rng.uniform(-800, 800));
        const Eigen::Vector2d za(b, 400.0), zb(b + 2.0 * pi, 400.0);
        EXPECT_EQ(m.likelihood(za, origin, obj), m.likelihood(zb, origin, obj)) << b;
    }
}

TEST(BearingRange, DegenerateGeometry) {
    const BearingRangeSensorModel m{};
    EXPECT_THROW((void)m.ideal(origin, {0, 0}), DegenerateGeometry);
    EXPECT_THROW((void)m.likelihood(Eigen::Vector2d(0, 0), origin, {1e-7, 0}), DegenerateGeometry);
}

TEST(Likelihood, IntegratesToOne) {
    const RangeSensorModel r{1.0, 5e-5, {}};
    const Eigen::Vector2d obj(300, 400);  // d = 500, sigma = 13.5
    double sum = 0.0;
    const double dz = 0.01;
    for (double z = 300.0; z < 700.0; z += dz) {
        const double v = range_likelihood(z, origin, obj, r);
        EXPECT_GE(v, 0.0);
        sum += v * dz;
    }
    EXPECT_NEAR(sum, 1.0, 1e-3);

    const BearingRangeSensorModel br{pi / 180.0, 5.0, {}};
    double sum2 = 0.0;
    const double db = 2.0 * pi / 4000.0, dr = 0.05;
    for (double b = -pi; b < pi; b += db)
        for (double rr = 450.0; rr < 550.0; rr += dr) sum2 += br.likelihood(Eigen::Vector2d(b, rr), origin, obj) * db * dr;
    EXPECT_NEAR(sum2, 1.0, 1e-3);
}

TEST(ConstantVelocity, Deterministic) {
    RandomSource rng(0);
    EXPECT_EQ(propagate_cv(Eigen::Vector4d(0, 0, 1, 2), 1.0, 0.0, rng), Eigen::Vector4d(1, 2, 1, 2));
    EXPECT_EQ(propagate_cv(Eigen::Vector4d(5, 6, 0, 0), 1.0, 0.0, rng), Eigen::Vector4d(5, 6, 0, 0));
}

TEST(ConstantVelocity, NoisyMean) {
    RandomSource rng(11);
    const Eigen::Vector4d x0(10, 20, 3, -1), expect(13, 19, 3, -1);
    const int n = 10000;
    const double sigma = 2.0;
    Eigen::Vector4d sum = Eigen::Vector4d::Zero();
    for (int i = 0; i < n; ++i) sum += propagate_cv(x0, 1.0, sigma, rng);
    const Eigen::Vector4d mean = sum / n;
    const Eigen::Vector4d se(0.5 * sigma / std::sqrt(n), 0.5 * sigma / std::sqrt(n), sigma / std::sqrt(n),
                             sigma / std::sqrt(n));
    for (int i = 0; i < 4; ++i) EXPECT_LT(std::abs(mean[i] - expect[i]), 3.0 * se[i]);
}

TEST(CoordinatedTurn, ZeroRateMatchesCv) {
    RandomSource rng(0);
    Eigen::VectorXd x(5);
    x << 1, 2, 3, 4, 0;
    const auto ct = propagate_ct(x, 1.0, 0.0, 0.0, rng);
    const auto cv = propagate_cv(Eigen::Vector4d(1, 2, 3, 4), 1.0, 0.0, rng);
    EXPECT_EQ(ct.head<4>(), cv);
    EXPECT_EQ(ct[4], 0.0);
}

TEST(CoordinatedTurn, QuarterTurn) {
    RandomSource rng(0);
    const double v = 10.0, w = pi / 2.0;
    Eigen::VectorXd x(5);
    x << 0, 0, v, 0, w;
    const auto y = propagate_ct(x, 1.0, 0.0, 0.0, rng);
    EXPECT_NEAR(y[0], v / w, 1e-12);
    EXPECT_NEAR(y[1], v / w, 1e-12);
    EXPECT_NEAR(y[2], 0.0, 1e-12);
    EXPECT_NEAR(y[3], v, 1e-12);
}

TEST(CoordinatedTurn, SpeedPreserved) {
    RandomSource rng(0);
    Eigen::VectorXd x(5);
    x << 0, 0, 3, 4, 0.3;
    for (int k = 0; k < 20; ++k) {
        x = propagate_ct(x, 1.0, 0.0, 0.0, rng);
        EXPECT_NEAR(std::hypot(x[2], x[3]), 5.0, 1e-12);
    }
}

TEST(CoordinatedTurn, SmallRateLimit) {
    RandomSource rng(0);
    for (double eps : {1e-7, -1e-7}) {
        Eigen::VectorXd x(5);
        x << 100, -50, 12, 7, eps;
        const auto got = propagate_ct(x, 1.0, 0.0, 0.0, rng);
        // Full trigonometric transition evaluated at the same small rate.
        const double s = std::sin(eps), c = std::cos(eps);
        const Eigen::Vector4d exact(100 + s / eps * 12 - (1 - c) / eps * 7, -50 + (1 - c) / eps * 12 + s / eps * 7,
                                    c * 12 - s * 7, s * 12 + c * 7);
        for (int i = 0; i < 4; ++i) EXPECT_LE(std::abs(got[i] - exact[i]) / std::abs(exact[i]), 1e-6);
    }
}

TEST(Clutter, ZeroRateIsEmpty) {
    RandomSource rng(5);
    const ClutterModel c{0.0, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 100)};
    for (int i = 0; i < 100; ++i) EXPECT_TRUE(sample_clutter(c, rng).empty());
}

TEST(Clutter, MeanCountAndSupport) {
    RandomSource rng(6);
    const double hi = 1000.0 * std::sqrt(2.0);
    const ClutterModel c{5.0, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, hi)};
    std::size_t total = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto Z = sample_clutter(c, rng);
        total += Z.size();
        for (const auto& z : Z) {
            EXPECT_GE(z[0], 0.0);
            EXPECT_LE(z[0], hi);
        }
    }
    const double mean = static_cast<double>(total) / 10000.0;
    EXPECT_GE(mean, 4.85);
    EXPECT_LE(mean, 5.15);
    EXPECT_DOUBLE_EQ(c.intensity(Eigen::VectorXd::Constant(1, 10.0)), 5.0 / hi);
    EXPECT_EQ(c.intensity(Eigen::VectorXd::Constant(1, -1.0)), 0.0);
}

TEST(Birth, SamplesWithinUniformBox) {
    RandomSource rng(8);
    const BirthComponent b{0.03, UniformBirth{Eigen::Vector4d(0, 0, -1, -1), Eigen::Vector4d(1000, 1000, 1, 1)}};
    const auto s = b.sample(500, rng);
    EXPECT_EQ(s.cols(), 500);
    EXPECT_GE(s.minCoeff(), -1.0);
    EXPECT_LE(s.maxCoeff(), 1000.0);
}
