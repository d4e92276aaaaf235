#pragma once

#include "peecs/models.hpp"
#include "peecs/rfs_core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

namespace peecs {

/// Track-management and particle-budget knobs of the SMC CB-MeMBer filter.
struct FilterConfig {
    std::size_t particles_per_target = 1000;
    std::size_t min_particles = 100;
    std::size_t max_particles = 1000;
    double prune_threshold = 1e-3;
    double merge_distance = 4.0;
    std::size_t max_components = 100;
    double existence_threshold = 0.5;
    double max_merged_existence = 0.999;

    [[nodiscard]] std::size_t budget(double r) const {
        return particle_budget(r, particles_per_target, min_particles, max_particles);
    }
};

/// Lower bound applied to 1 - r and 1 - r * rho_L before they are used as divisors.
inline constexpr double kMinDenominator = 1e-12;

// ---- Prediction ----

/// Predicted multi-Bernoulli density (survivors followed by births).
///
/// The density is held behind a shared pointer so that the many hypothetical updates run
/// during command selection can reference its particles without copying them. The
/// concatenated particle array is built once on construction; the object is read-only
/// afterwards and safe to share between threads.
class PredictedDensity {
public:
    PredictedDensity() : PredictedDensity(MultiBernoulliDensity{}) {}

    explicit PredictedDensity(MultiBernoulliDensity density, std::size_t survived = 0, std::size_t dropped = 0)
        : density_(std::make_shared<const MultiBernoulliDensity>(std::move(density))),
          survived_(survived),
          dropped_(dropped) {
        const auto& comps = density_->components;
        offsets_.reserve(comps.size() + 1);
        offsets_.push_back(0);
        for (const auto& c : comps) {
            if (c.particles.empty()) throw Error("predicted component has no particles");
            if (dim_ == 0) dim_ = c.particles.dim();
            if (c.particles.dim() != dim_) throw DimensionMismatch("predicted components differ in state dimension");
            offsets_.push_back(offsets_.back() + c.particles.size());
        }
        auto all = std::make_shared<Eigen::MatrixXd>(dim_, offsets_.back());
        for (std::size_t i = 0; i < comps.size(); ++i)
            all->middleCols(offsets_[i], comps[i].particles.size()) = comps[i].particles.states;
        concatenated_ = std::move(all);
    }

    [[nodiscard]] const MultiBernoulliDensity& density() const noexcept { return *density_; }
    [[nodiscard]] const std::shared_ptr<const MultiBernoulliDensity>& shared() const noexcept { return density_; }
    [[nodiscard]] std::size_t size() const noexcept { return density_->size(); }
    [[nodiscard]] bool empty() const noexcept { return density_->empty(); }
    [[nodiscard]] std::size_t survived() const noexcept { return survived_; }
    [[nodiscard]] std::size_t born() const noexcept { return size() - survived_; }
    /// Components dropped during prediction because their weights collapsed.
    [[nodiscard]] std::size_t dropped() const noexcept { return dropped_; }
    [[nodiscard]] Eigen::Index state_dim() const noexcept { return dim_; }

    /// Offset of component i's first particle in the concatenated particle array.
    [[nodiscard]] Eigen::Index offset(std::size_t i) const { return offsets_[i]; }
    [[nodiscard]] Eigen::Index total_particles() const { return offsets_.back(); }

    /// All particle states side by side, in component order.
    [[nodiscard]] const Eigen::MatrixXd& concatenated_states() const noexcept { return *concatenated_; }

private:
    std::shared_ptr<const MultiBernoulliDensity> density_;
    std::vector<Eigen::Index> offsets_;
    Eigen::Index dim_ = 0;
    std::size_t survived_ = 0;
    std::size_t dropped_ = 0;
    std::shared_ptr<const Eigen::MatrixXd> concatenated_;
};

/// Survival (existence scaled by the weighted survival probability, particles moved by the
/// transition density used as its own proposal) followed by the birth components.
[[nodiscard]] inline PredictedDensity predict(const MultiBernoulliDensity& prior, const MotionModel& motion,
                                              const BirthModel& birth, const FilterConfig& config,
                                              RandomSource& rng) {
    MultiBernoulliDensity out;
    out.components.reserve(prior.size() + birth.components.size());
    std::size_t dropped = 0;

    for (const auto& comp : prior.components) {
        if (comp.particles.dim() != motion.state_dim())
            throw DimensionMismatch("prior state dimension does not match the motion model");
        BernoulliComponent next;
        // Constant survival: r_P = r * sum_j w_j * p_S, and the normalized weights are unchanged.
        Eigen::VectorXd w = comp.particles.weights;
        next.existence = comp.existence * motion.survival * w.sum();
        try {
            normalize_weights(w);
        } catch (const AllWeightsZero&) {
            ++dropped;
            continue;
        }
        next.particles.states = comp.particles.states;
        propagate(motion, next.particles.states, rng);
        next.particles.weights = std::move(w);
        out.components.push_back(std::move(next));
    }
    const std::size_t survived = out.components.size();

    for (const auto& b : birth.components) {
        if (b.dim() != motion.state_dim())
            throw DimensionMismatch("birth state dimension does not match the motion model");
        const auto n = static_cast<Eigen::Index>(config.budget(b.existence));
        BernoulliComponent born;
        born.existence = b.existence;
        born.particles.states = b.sample(n, rng);
        born.particles.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
        out.components.push_back(std::move(born));
    }
    return PredictedDensity(std::move(out), survived, dropped);
}

// ---- Update ----

/// Output of the CB-MeMBer measurement update, kept in factored form.
///
/// Legacy track i reuses predicted component i's particles with new weights. The
/// measurement-corrected track for z ranges over every predicted particle (the
/// concatenated array of `predicted`), so only its weight vector is stored.
struct UpdatedDensity {
    std::shared_ptr<const PredictedDensity> predicted;
    MeasurementSet measurements;

    std::vector<double> legacy_existence;
    std::vector<Eigen::VectorXd> legacy_weights;
    std::vector<double> corrected_existence;
    std::vector<Eigen::VectorXd> corrected_weights;

    /// Number of denominators clamped to kMinDenominator.
    std::size_t clamped_denominators = 0;

    [[nodiscard]] std::size_t size() const noexcept {
        return legacy_existence.size() + corrected_existence.size();
    }

    [[nodiscard]] double expected_cardinality() const {
        return std::accumulate(legacy_existence.begin(), legacy_existence.end(), 0.0) +
               std::accumulate(corrected_existence.begin(), corrected_existence.end(), 0.0);
    }

    /// Expand into an ordinary density, keeping only components with existence >= min_existence.
    [[nodiscard]] MultiBernoulliDensity materialize(double min_existence = 0.0) const {
        MultiBernoulliDensity out;
        if (!predicted) return out;
        const auto& comps = predicted->density().components;
        for (std::size_t i = 0; i < legacy_existence.size(); ++i) {
            if (legacy_existence[i] < min_existence) continue;
            out.components.push_back({legacy_existence[i], {comps[i].particles.states, legacy_weights[i]}});
        }
        for (std::size_t m = 0; m < corrected_existence.size(); ++m) {
            if (corrected_existence[m] < min_existence) continue;
            out.components.push_back(
                {corrected_existence[m], {predicted->concatenated_states(), corrected_weights[m]}});
        }
        return out;
    }
};

namespace detail {

template <typename Model>
UpdatedDensity update_kernel(std::shared_ptr<const PredictedDensity> predicted, const MeasurementSet& Z,
                             const SensorState& sensor, const Model& model, const ClutterModel& clutter) {
    UpdatedDensity out;
    out.predicted = predicted;
    out.measurements = Z;
    const PredictedDensity& pred = *predicted;
    const auto& comps = pred.density().components;
    const std::size_t M = comps.size();
    if (M == 0) {
        out.measurements.clear();
        return out;
    }
    const Eigen::Index N = pred.total_particles();

    // Per-particle detection probability at the commanded sensor state.
    Eigen::VectorXd pd(N);
    std::vector<double> rho_l(M), one_minus_r(M), denom(M);
    for (std::size_t i = 0; i < M; ++i) {
        const auto& c = comps[i];
        const Eigen::Index off = pred.offset(i);
        double rho = 0.0;
        for (Eigen::Index j = 0; j < c.particles.size(); ++j) {
            const Eigen::Vector2d pos(c.particles.states(0, j), c.particles.states(1, j));
            pd[off + j] = detection_probability(sensor, pos, model.profile);
            rho += c.particles.weights[j] * pd[off + j];
        }
        rho_l[i] = rho;
        const double r = c.existence;
        one_minus_r[i] = 1.0 - r;
        if (one_minus_r[i] < kMinDenominator) {
            one_minus_r[i] = kMinDenominator;
            ++out.clamped_denominators;
        }
        denom[i] = 1.0 - r * rho;
        if (denom[i] < kMinDenominator) {
            denom[i] = kMinDenominator;
            ++out.clamped_denominators;
        }
    }

    // Legacy (missed-detection) tracks.
    out.legacy_existence.resize(M);
    out.legacy_weights.resize(M);
    for (std::size_t i = 0; i < M; ++i) {
        const auto& c = comps[i];
        const Eigen::Index off = pred.offset(i);
        Eigen::VectorXd w = c.particles.weights.array() * (1.0 - pd.segment(off, c.particles.size()).array());
        if (w.sum() > kWeightSumFloor)
            normalize_weights(w);
        else
            w = c.particles.weights;
        out.legacy_existence[i] = std::clamp(c.existence * (1.0 - rho_l[i]) / denom[i], 0.0, 1.0);
        out.legacy_weights[i] = std::move(w);
    }

    // Measurement-corrected tracks, one per measurement.
    out.corrected_existence.reserve(Z.size());
    out.corrected_weights.reserve(Z.size());
    Eigen::VectorXd v(N);
    for (const auto& z : Z) {
        double numerator = 0.0;
        double denominator = clutter.intensity(z);
        Eigen::VectorXd w(N);
        for (std::size_t i = 0; i < M; ++i) {
            const auto& c = comps[i];
            const Eigen::Index off = pred.offset(i);
            double rho_u = 0.0;
            for (Eigen::Index j = 0; j < c.particles.size(); ++j) {
                const double p = pd[off + j];
                double term = 0.0;
                if (p > 0.0) {
                    const Eigen::Vector2d pos(c.particles.states(0, j), c.particles.states(1, j));
                    const double g = model.likelihood(z, sensor, pos);
                    if (!std::isfinite(g)) throw NonFiniteLikelihood("non-finite measurement likelihood");
                    term = c.particles.weights[j] * p * g;
                }
                v[off + j] = term;
                rho_u += term;
            }
            const double r = c.existence;
            numerator += r * one_minus_r[i] * rho_u / (denom[i] * denom[i]);
            denominator += r * rho_u / denom[i];
            w.segment(off, c.particles.size()) = v.segment(off, c.particles.size()) * (r / one_minus_r[i]);
        }
        if (!std::isfinite(numerator) || !std::isfinite(denominator))
            throw NonFiniteLikelihood("non-finite corrected existence");
        const double r_u = denominator > 0.0 ? std::clamp(numerator / denominator, 0.0, 1.0) : 0.0;
        if (w.sum() > kWeightSumFloor)
            normalize_weights(w);
        else
            w.setConstant(1.0 / static_cast<double>(N));
        out.corrected_existence.push_back(r_u);
        out.corrected_weights.push_back(std::move(w));
    }
    return out;
}

}  // namespace detail

/// CB-MeMBer measurement update: one legacy track per predicted component and one
/// measurement-corrected track per measurement, with the clutter intensity in the
/// corrected-existence denominator.
[[nodiscard]] inline UpdatedDensity update(std::shared_ptr<const PredictedDensity> predicted, const MeasurementSet& Z,
                                           const SensorState& sensor, const SensorModel& model,
                                           const ClutterModel& clutter) {
    return std::visit(
        [&](const auto& m) { return detail::update_kernel(std::move(predicted), Z, sensor, m, clutter); }, model);
}

[[nodiscard]] inline UpdatedDensity update(const PredictedDensity& predicted, const MeasurementSet& Z,
                                           const SensorState& sensor, const SensorModel& model,
                                           const ClutterModel& clutter) {
    return update(std::make_shared<const PredictedDensity>(predicted), Z, sensor, model, clutter);
}

// ---- Track management ----

/// Prune low-existence tracks, merge tracks whose position estimates are within
/// merge_distance, cap the track count and resample every survivor to its budget.
/// The result is ordered by decreasing existence.
[[nodiscard]] inline MultiBernoulliDensity prune_merge_resample(const MultiBernoulliDensity& density,
                                                                const FilterConfig& config, RandomSource& rng) {
    std::vector<const BernoulliComponent*> kept;
    for (const auto& c : density.components)
        if (c.existence >= config.prune_threshold && c.particles.weights.sum() > kWeightSumFloor) kept.push_back(&c);
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto* a, const auto* b) { return a->existence > b->existence; });

    std::vector<Eigen::Vector2d> positions;
    positions.reserve(kept.size());
    for (const auto* c : kept) {
        Eigen::VectorXd w = c->particles.weights;
        normalize_weights(w);
        const Eigen::VectorXd m = c->particles.states * w;
        positions.emplace_back(m[0], m[1]);
    }

    std::vector<BernoulliComponent> merged;
    std::vector<bool> used(kept.size(), false);
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        std::vector<std::size_t> group{i};
        for (std::size_t j = i + 1; j < kept.size(); ++j) {
            if (!used[j] && (positions[j] - positions[i]).norm() <= config.merge_distance) {
                used[j] = true;
                group.push_back(j);
            }
        }
        if (group.size() == 1) {
            merged.push_back(*kept[i]);
            continue;
        }
        BernoulliComponent out;
        double miss = 1.0;
        Eigen::Index total = 0;
        for (auto g : group) {
            miss *= 1.0 - kept[g]->existence;
            total += kept[g]->particles.size();
        }
        out.existence = std::min(config.max_merged_existence, 1.0 - miss);
        out.particles.states.resize(kept[i]->particles.dim(), total);
        out.particles.weights.resize(total);
        Eigen::Index off = 0;
        for (auto g : group) {
            const auto& p = kept[g]->particles;
            out.particles.states.middleCols(off, p.size()) = p.states;
            out.particles.weights.segment(off, p.size()) = p.weights * (kept[g]->existence / p.weights.sum());
            off += p.size();
        }
        normalize_weights(out.particles.weights);
        merged.push_back(std::move(out));
    }

    std::stable_sort(merged.begin(), merged.end(),
                     [](const auto& a, const auto& b) { return a.existence > b.existence; });
    if (merged.size() > config.max_components) merged.resize(config.max_components);

    MultiBernoulliDensity out;
    out.components.reserve(merged.size());
    for (const auto& c : merged) out.components.push_back(resample(c, config.budget(c.existence), rng));
    return out;
}

[[nodiscard]] inline MultiBernoulliDensity prune_merge_resample(const UpdatedDensity& updated,
                                                                const FilterConfig& config, RandomSource& rng) {
    return prune_merge_resample(updated.materialize(config.prune_threshold), config, rng);
}

// ---- Estimation ----

struct MultiTargetEstimate {
    std::size_t count = 0;
    std::vector<Eigen::VectorXd> states;
};

/// Components with existence strictly above `threshold`, each reported by its weighted mean.
[[nodiscard]] inline MultiTargetEstimate extract_estimate(const MultiBernoulliDensity& density, double threshold) {
    MultiTargetEstimate est;
    for (const auto& c : density.components) {
        if (c.existence > threshold) est.states.push_back(weighted_mean(c.particles));
    }
    est.count = est.states.size();
    return est;
}

}  // namespace peecs
