#pragma once

#include "peecs/rfs_core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <variant>
#include <vector>

namespace peecs {

using Measurement = Eigen::VectorXd;
using MeasurementSet = std::vector<Measurement>;

/// Wrap an angle to (-pi, pi]. Exact for inputs that differ by a representable multiple of 2*pi.
[[nodiscard]] inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::remainder(a, two_pi);
    if (r <= -std::numbers::pi) r += two_pi;
    return r;
}

[[nodiscard]] inline double gaussian_pdf(double residual, double sigma) {
    constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343818684758586311649;
    const double u = residual / sigma;
    return inv_sqrt_2pi / sigma * std::exp(-0.5 * u * u);
}

struct SensorState {
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

// ---- Detection ----

/// Unit detection inside radius R0, then a linear fall-off with slope h, floored at zero.
struct DetectionProfile {
    double R0 = 320.0;
    double h = 0.00025;
};

[[nodiscard]] inline double detection_probability(const SensorState& sensor, const Eigen::Vector2d& object,
                                                  const DetectionProfile& profile) {
    const double d = (object - sensor.position).norm();
    if (d <= profile.R0) return 1.0;
    return std::max(0.0, 1.0 - profile.h * (d - profile.R0));
}

// ---- Measurement models ----

/// Range-only sensor whose noise standard deviation grows quadratically with distance.
struct RangeSensorModel {
    double sigma0 = 1.0;
    double beta = 5e-5;
    DetectionProfile profile;

    static constexpr Eigen::Index measurement_dim = 1;

    [[nodiscard]] double noise_std(double distance) const { return sigma0 + beta * distance * distance; }

    [[nodiscard]] double likelihood(const Measurement& z, const SensorState& sensor,
                                    const Eigen::Vector2d& object) const {
        const double d = (object - sensor.position).norm();
        return gaussian_pdf(z[0] - d, noise_std(d));
    }

    [[nodiscard]] Measurement ideal(const SensorState& sensor, const Eigen::Vector2d& object) const {
        Measurement z(1);
        z[0] = (object - sensor.position).norm();
        return z;
    }

    [[nodiscard]] Measurement sample(const SensorState& sensor, const Eigen::Vector2d& object,
                                     RandomSource& rng) const {
        Measurement z = ideal(sensor, object);
        z[0] += rng.normal(0.0, noise_std(z[0]));
        return z;
    }
};

/// Bearing (measured from the +y axis towards +x) and range relative to the sensor.
struct BearingRangeSensorModel {
    double sigma_theta = std::numbers::pi / 180.0;
    double sigma_r = 5.0;
    DetectionProfile profile;

    static constexpr Eigen::Index measurement_dim = 2;
    static constexpr double min_range = 1e-6;

    [[nodiscard]] Measurement ideal(const SensorState& sensor, const Eigen::Vector2d& object) const {
        const Eigen::Vector2d rel = object - sensor.position;
        const double range = rel.norm();
        if (range < min_range) throw DegenerateGeometry("bearing undefined: object at sensor position");
        Measurement z(2);
        z[0] = std::atan2(rel.x(), rel.y());
        z[1] = range;
        return z;
    }

    [[nodiscard]] double likelihood(const Measurement& z, const SensorState& sensor,
                                    const Eigen::Vector2d& object) const {
        const Eigen::Vector2d rel = object - sensor.position;
        const double range = rel.norm();
        if (range < min_range) throw DegenerateGeometry("bearing undefined: object at sensor position");
        const double bearing_residual = wrap_angle(wrap_angle(z[0]) - std::atan2(rel.x(), rel.y()));
        return gaussian_pdf(bearing_residual, sigma_theta) * gaussian_pdf(z[1] - range, sigma_r);
    }

    [[nodiscard]] Measurement sample(const SensorState& sensor, const Eigen::Vector2d& object,
                                     RandomSource& rng) const {
        Measurement z = ideal(sensor, object);
        z[0] = wrap_angle(z[0] + rng.normal(0.0, sigma_theta));
        z[1] += rng.normal(0.0, sigma_r);
        return z;
    }
};

using SensorModel = std::variant<RangeSensorModel, BearingRangeSensorModel>;

[[nodiscard]] inline const DetectionProfile& detection_profile(const SensorModel& model) {
    return std::visit([](const auto& m) -> const DetectionProfile& { return m.profile; }, model);
}

/// The likelihood-maximising measurement of a single-target state (its first two entries are x, y).
[[nodiscard]] inline Measurement ideal_measurement(const SensorState& sensor, const Eigen::VectorXd& state,
                                                   const SensorModel& model) {
    const Eigen::Vector2d pos = state.head<2>();
    return std::visit([&](const auto& m) { return m.ideal(sensor, pos); }, model);
}

[[nodiscard]] inline double measurement_likelihood(const Measurement& z, const SensorState& sensor,
                                                   const Eigen::Vector2d& object, const SensorModel& model) {
    return std::visit([&](const auto& m) { return m.likelihood(z, sensor, object); }, model);
}

[[nodiscard]] inline double range_likelihood(double z, const SensorState& sensor, const Eigen::Vector2d& object,
                                             const RangeSensorModel& model) {
    Measurement m(1);
    m[0] = z;
    return model.likelihood(m, sensor, object);
}

[[nodiscard]] inline double bearing_range_likelihood(const Measurement& z, const SensorState& sensor,
                                                     const Eigen::Vector2d& object,
                                                     const BearingRangeSensorModel& model) {
    return model.likelihood(z, sensor, object);
}

// ---- Clutter ----

/// Poisson clutter, uniform over an axis-aligned box in measurement space.
struct ClutterModel {
    double rate = 0.0;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    [[nodiscard]] double volume() const { return (upper - lower).prod(); }

    [[nodiscard]] bool contains(const Measurement& z) const {
        for (Eigen::Index i = 0; i < lower.size(); ++i)
            if (z[i] < lower[i] || z[i] > upper[i]) return false;
        return true;
    }

    /// Spatial density c(z).
    [[nodiscard]] double density(const Measurement& z) const { return contains(z) ? 1.0 / volume() : 0.0; }

    /// Intensity kappa(z) = rate * c(z).
    [[nodiscard]] double intensity(const Measurement& z) const { return rate * density(z); }

    [[nodiscard]] MeasurementSet sample(RandomSource& rng) const {
        const std::size_t n = rng.poisson(rate);
        MeasurementSet out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            Measurement z(lower.size());
            for (Eigen::Index d = 0; d < lower.size(); ++d) z[d] = rng.uniform(lower[d], upper[d]);
            out.push_back(std::move(z));
        }
        return out;
    }
};

[[nodiscard]] inline MeasurementSet sample_clutter(const ClutterModel& model, RandomSource& rng) {
    return model.sample(rng);
}

// ---- Birth ----

struct UniformBirth {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

/// Gaussian with diagonal covariance, given by per-coordinate standard deviations.
struct GaussianBirth {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;
};

struct BirthComponent {
    double existence = 0.0;
    std::variant<UniformBirth, GaussianBirth> density;

    [[nodiscard]] Eigen::Index dim() const {
        return std::visit([](const auto& d) -> Eigen::Index {
            if constexpr (std::is_same_v<std::decay_t<decltype(d)>, UniformBirth>)
                return d.lower.size();
            else
                return d.mean.size();
        }, density);
    }

    [[nodiscard]] Eigen::MatrixXd sample(Eigen::Index count, RandomSource& rng) const {
        Eigen::MatrixXd out(dim(), count);
        std::visit([&](const auto& d) {
            for (Eigen::Index j = 0; j < count; ++j) {
                for (Eigen::Index i = 0; i < out.rows(); ++i) {
                    if constexpr (std::is_same_v<std::decay_t<decltype(d)>, UniformBirth>)
                        out(i, j) = rng.uniform(d.lower[i], d.upper[i]);
                    else
                        out(i, j) = rng.normal(d.mean[i], d.stddev[i]);
                }
            }
        }, density);
        return out;
    }
};

struct BirthModel {
    std::vector<BirthComponent> components;
};

// ---- Motion ----

enum class MotionKind { ConstantVelocity, CoordinatedTurn };

/// Transition model for [x y vx vy] (constant velocity) or [x y vx vy omega] (nearly-constant turn).
struct MotionModel {
    MotionKind kind = MotionKind::ConstantVelocity;
    double T = 1.0;
    double survival = 0.99;
    double sigma_accel = 0.0;  // constant-velocity acceleration noise, also used as sigma_eps for turns
    double sigma_turn = 0.0;   // turn-rate noise (rad/s^2)

    [[nodiscard]] Eigen::Index state_dim() const { return kind == MotionKind::ConstantVelocity ? 4 : 5; }
};

inline constexpr double kTurnRateEpsilon = 1e-6;

inline void propagate_cv_inplace(Eigen::Ref<Eigen::VectorXd> x, double T, double sigma, RandomSource* rng) {
    double ax = 0.0, ay = 0.0;
    if (sigma > 0.0 && rng) {
        ax = rng->normal(0.0, sigma);
        ay = rng->normal(0.0, sigma);
    }
    const double half_t2 = 0.5 * T * T;
    x[0] += T * x[2] + half_t2 * ax;
    x[1] += T * x[3] + half_t2 * ay;
    x[2] += T * ax;
    x[3] += T * ay;
}

[[nodiscard]] inline Eigen::VectorXd propagate_cv(Eigen::VectorXd state, double T, double noise_scale,
                                                  RandomSource& rng) {
    propagate_cv_inplace(state, T, noise_scale, &rng);
    return state;
}

/// Coordinated turn. The turn-rate random walk is applied after the linear part uses the old rate.
inline void propagate_ct_inplace(Eigen::Ref<Eigen::VectorXd> x, double T, double sigma_eps, double sigma_gamma,
                                 RandomSource* rng) {
    double ex = 0.0, ey = 0.0, gamma = 0.0;
    if (rng) {
        if (sigma_eps > 0.0) {
            ex = rng->normal(0.0, sigma_eps);
            ey = rng->normal(0.0, sigma_eps);
        }
        if (sigma_gamma > 0.0) gamma = rng->normal(0.0, sigma_gamma);
    }
    const double w = x[4];
    const double vx = x[2], vy = x[3];
    // Both off-diagonal position gains use the standard (1 - cos wT) / w form; the
    // small-rate branch is the exact w -> 0 limit (the constant-velocity matrix).
    double a, b, c, s;  // a = sin(wT)/w, b = (1-cos(wT))/w
    if (std::abs(w) < kTurnRateEpsilon) {
        a = T;
        b = 0.0;
        c = 1.0;
        s = 0.0;
    } else {
        s = std::sin(w * T);
        c = std::cos(w * T);
        a = s / w;
        b = (1.0 - c) / w;
    }
    const double half_t2 = 0.5 * T * T;
    x[0] += a * vx - b * vy + half_t2 * ex;
    x[1] += b * vx + a * vy + half_t2 * ey;
    x[2] = c * vx - s * vy + T * ex;
    x[3] = s * vx + c * vy + T * ey;
    x[4] = w + T * gamma;
}

[[nodiscard]] inline Eigen::VectorXd propagate_ct(Eigen::VectorXd state, double T, double sigma_eps,
                                                  double sigma_gamma, RandomSource& rng) {
    propagate_ct_inplace(state, T, sigma_eps, sigma_gamma, &rng);
    return state;
}

/// Propagate every column of `states` one step under `motion`.
inline void propagate(const MotionModel& motion, Eigen::MatrixXd& states, RandomSource& rng) {
    for (Eigen::Index j = 0; j < states.cols(); ++j) {
        if (motion.kind == MotionKind::ConstantVelocity)
            propagate_cv_inplace(states.col(j), motion.T, motion.sigma_accel, &rng);
        else
            propagate_ct_inplace(states.col(j), motion.T, motion.sigma_accel, motion.sigma_turn, &rng);
    }
}

}  // namespace peecs
