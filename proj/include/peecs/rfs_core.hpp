#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace peecs {

// ---- Errors ----

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a particle set has no positive weight left; the owning track is degenerate.
class AllWeightsZero : public Error {
public:
    AllWeightsZero() : Error("all particle weights are zero") {}
};

class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

class NonFiniteLikelihood : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

inline constexpr double kWeightSumFloor = 1e-300;

// ---- Randomness ----

/// SplitMix64 finalizer. Used to derive child stream seeds.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seeded random stream. Single owner; parallel tasks take their own child via split().
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed)) {}

    RandomSource(const RandomSource&) = delete;
    RandomSource& operator=(const RandomSource&) = delete;
    RandomSource(RandomSource&&) noexcept = default;
    RandomSource& operator=(RandomSource&&) noexcept = default;

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    /// Child stream whose seed depends only on this stream's seed and `stream_id`,
    /// never on how many draws have been taken so far.
    [[nodiscard]] RandomSource split(std::uint64_t stream_id) const {
        return RandomSource(mix_seed(seed_ ^ mix_seed(stream_id + 0x632BE59BD9B4E019ULL)));
    }

    /// Uniform on [0, 1).
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() { return normal_(engine_); }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    std::size_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        return static_cast<std::size_t>(std::poisson_distribution<long long>(mean)(engine_));
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// ---- Particles and Bernoulli components ----

/// Weighted particle cloud. Column j of `states` is particle j.
struct ParticleSet {
    Eigen::MatrixXd states;
    Eigen::VectorXd weights;

    [[nodiscard]] Eigen::Index size() const noexcept { return weights.size(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return states.rows(); }
    [[nodiscard]] bool empty() const noexcept { return weights.size() == 0; }
};

/// Rescale weights to unit sum in place. Throws AllWeightsZero when the total is not positive.
inline void normalize_weights(Eigen::VectorXd& weights) {
    const double total = weights.sum();
    if (!(total > kWeightSumFloor) || !std::isfinite(total)) throw AllWeightsZero();
    weights /= total;
}

[[nodiscard]] inline ParticleSet normalize_weights(ParticleSet particles) {
    normalize_weights(particles.weights);
    return particles;
}

[[nodiscard]] inline Eigen::VectorXd weighted_mean(const ParticleSet& particles) {
    return particles.states * particles.weights;
}

/// Bernoulli RFS: exists with probability `existence`, state density given by `particles`.
struct BernoulliComponent {
    double existence = 0.0;
    ParticleSet particles;

    [[nodiscard]] Eigen::Vector2d position_estimate() const {
        const Eigen::VectorXd m = weighted_mean(particles);
        return m.head<2>();
    }
};

struct MultiBernoulliDensity {
    std::vector<BernoulliComponent> components;

    [[nodiscard]] std::size_t size() const noexcept { return components.size(); }
    [[nodiscard]] bool empty() const noexcept { return components.empty(); }

    /// Expected cardinality: the sum of existence probabilities.
    [[nodiscard]] double expected_cardinality() const noexcept {
        double s = 0.0;
        for (const auto& c : components) s += c.existence;
        return s;
    }
};

/// Systematic resampling indices: one uniform offset, `count` evenly spaced pointers
/// into the cumulative weight sum. Weights must be normalized.
[[nodiscard]] inline std::vector<Eigen::Index> systematic_indices(const Eigen::VectorXd& weights,
                                                                   std::size_t count, RandomSource& rng) {
    std::vector<Eigen::Index> idx;
    idx.reserve(count);
    Eigen::Index n = weights.size();
    while (n > 1 && weights[n - 1] <= 0.0) --n;  // never land on trailing zero-weight particles
    const double step = 1.0 / static_cast<double>(count);
    const double u0 = rng.uniform() * step;
    double cumulative = weights[0];
    Eigen::Index i = 0;
    for (std::size_t m = 0; m < count; ++m) {
        const double u = u0 + static_cast<double>(m) * step;
        while (u >= cumulative && i + 1 < n) cumulative += weights[++i];
        idx.push_back(i);
    }
    return idx;
}

/// Resample a component to `target_count` equally weighted particles. Existence is untouched.
[[nodiscard]] inline BernoulliComponent resample(const BernoulliComponent& component, std::size_t target_count,
                                                 RandomSource& rng) {
    if (target_count == 0) throw std::invalid_argument("resample: target_count must be positive");
    Eigen::VectorXd w = component.particles.weights;
    normalize_weights(w);
    const auto idx = systematic_indices(w, target_count, rng);

    BernoulliComponent out;
    out.existence = component.existence;
    out.particles.states.resize(component.particles.dim(), static_cast<Eigen::Index>(target_count));
    for (std::size_t m = 0; m < target_count; ++m)
        out.particles.states.col(static_cast<Eigen::Index>(m)) = component.particles.states.col(idx[m]);
    out.particles.weights =
        Eigen::VectorXd::Constant(static_cast<Eigen::Index>(target_count), 1.0 / static_cast<double>(target_count));
    return out;
}

/// Particle budget for a component with existence r:
/// per_target * max(1, round(r)), clamped to [min_count, max_count].
[[nodiscard]] inline std::size_t particle_budget(double r, std::size_t per_target, std::size_t min_count,
                                                 std::size_t max_count) {
    const double scale = std::max(1.0, std::round(r));
    const auto raw = static_cast<std::size_t>(static_cast<double>(per_target) * scale);
    return std::clamp(raw, min_count, max_count);
}

}  // namespace peecs
