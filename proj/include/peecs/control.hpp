#pragma once

#include "peecs/cbmember.hpp"
#include "peecs/models.hpp"
#include "peecs/rfs_core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace peecs {

// ---- Commands ----

/// Radial grid of moves around the current sensor position plus "stay".
struct CommandGrid {
    double step = 50.0;      // metres per ring
    std::size_t headings = 8;
    std::size_t rings = 2;
    Eigen::Vector2d region_min{0.0, 0.0};
    Eigen::Vector2d region_max{1000.0, 1000.0};
};

struct ControlCommand {
    int id = 0;
    SensorState target;

    [[nodiscard]] bool is_stay() const noexcept { return id == 0; }
};

/// Id 0 is "stay"; id 1 + ring_index * headings + heading_index for the moves.
[[nodiscard]] inline std::vector<ControlCommand> admissible_commands(const SensorState& current,
                                                                     const CommandGrid& grid) {
    std::vector<ControlCommand> cmds;
    cmds.reserve(1 + grid.headings * grid.rings);
    auto clamp_to_region = [&](Eigen::Vector2d p) {
        return p.cwiseMax(grid.region_min).cwiseMin(grid.region_max);
    };
    cmds.push_back({0, {clamp_to_region(current.position)}});
    int id = 1;
    for (std::size_t ring = 1; ring <= grid.rings; ++ring) {
        for (std::size_t h = 0; h < grid.headings; ++h) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(h) / static_cast<double>(grid.headings);
            const Eigen::Vector2d move =
                grid.step * static_cast<double>(ring) * Eigen::Vector2d(std::cos(angle), std::sin(angle));
            cmds.push_back({id++, {clamp_to_region(current.position + move)}});
        }
    }
    return cmds;
}

// ---- PIMS ----

/// Predicted ideal measurement set: one noiseless measurement per predicted target estimate,
/// taken from the candidate sensor state. No clutter, no misses.
[[nodiscard]] inline MeasurementSet build_pims(const MultiBernoulliDensity& predicted, const SensorState& candidate,
                                               const SensorModel& model, double threshold) {
    const auto estimate = extract_estimate(predicted, threshold);
    MeasurementSet pims;
    pims.reserve(estimate.count);
    for (const auto& x : estimate.states) pims.push_back(ideal_measurement(candidate, x, model));
    return pims;
}

// ---- Cost terms ----

struct CostBreakdown {
    double cardinality_error = 0.0;
    double state_error = 0.0;
    double total = 0.0;
    double eta = 0.5;
};

[[nodiscard]] inline double cardinality_variance(const std::vector<double>& existence) {
    double v = 0.0;
    for (double r : existence) v += r * (1.0 - r);
    return v;
}

[[nodiscard]] inline std::vector<double> existence_of(const MultiBernoulliDensity& density) {
    std::vector<double> r;
    r.reserve(density.size());
    for (const auto& c : density.components) r.push_back(c.existence);
    return r;
}

[[nodiscard]] inline std::vector<double> existence_of(const UpdatedDensity& updated) {
    std::vector<double> r = updated.legacy_existence;
    r.insert(r.end(), updated.corrected_existence.begin(), updated.corrected_existence.end());
    return r;
}

[[nodiscard]] inline double cardinality_variance(const MultiBernoulliDensity& density) {
    return cardinality_variance(existence_of(density));
}

/// Cardinality variance divided by its maximum M/4 (every r = 0.5). Zero for an empty density.
[[nodiscard]] inline double normalized_cardinality_error(const std::vector<double>& existence) {
    if (existence.empty()) return 0.0;
    const double max_var = static_cast<double>(existence.size()) / 4.0;
    return std::clamp(cardinality_variance(existence) / max_var, 0.0, 1.0);
}

[[nodiscard]] inline double normalized_cardinality_error(const MultiBernoulliDensity& density) {
    return normalized_cardinality_error(existence_of(density));
}

/// Normalised positional spread of one Bernoulli component.
///
/// Product of the weighted x and y variances divided by the product of their
/// equal-weight maxima (1/L)(1 - 1/L) * sum(coord^2). The maxima are not true suprema
/// of the weighted variances, so the ratio is clamped to [0, 1]; it is 0 when either
/// maximum vanishes (a single particle, or a coordinate that is zero for every particle).
template <typename States, typename Weights>
[[nodiscard]] double positional_spread(const States& states, const Weights& weights) {
    const auto L = static_cast<double>(weights.size());
    double mx = 0.0, my = 0.0, qx = 0.0, qy = 0.0;
    for (Eigen::Index j = 0; j < weights.size(); ++j) {
        const double x = states(0, j), y = states(1, j), w = weights[j];
        mx += w * x;
        my += w * y;
        qx += x * x;
        qy += y * y;
    }
    const double scale = (1.0 / L) * (1.0 - 1.0 / L);
    const double max_x = scale * qx;
    const double max_y = scale * qy;
    if (!(max_x > 0.0) || !(max_y > 0.0)) return 0.0;
    // Second pass about the mean: identical particles give exactly zero.
    double var_x = 0.0, var_y = 0.0;
    for (Eigen::Index j = 0; j < weights.size(); ++j) {
        const double dx = states(0, j) - mx, dy = states(1, j) - my;
        var_x += weights[j] * dx * dx;
        var_y += weights[j] * dy * dy;
    }
    return std::clamp((var_x * var_y) / (max_x * max_y), 0.0, 1.0);
}

[[nodiscard]] inline double component_state_error(const BernoulliComponent& component) {
    return positional_spread(component.particles.states, component.particles.weights);
}

/// Existence-weighted average of per-component spreads. Zero when the existences sum to zero.
[[nodiscard]] inline double normalized_state_error(const std::vector<double>& existence,
                                                   const std::vector<double>& spreads) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < existence.size(); ++i) {
        num += existence[i] * spreads[i];
        den += existence[i];
    }
    return den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
}

[[nodiscard]] inline double normalized_state_error(const MultiBernoulliDensity& density) {
    std::vector<double> spreads;
    spreads.reserve(density.size());
    for (const auto& c : density.components) spreads.push_back(component_state_error(c));
    return normalized_state_error(existence_of(density), spreads);
}

[[nodiscard]] inline CostBreakdown combine_costs(double cardinality_error, double state_error, double eta) {
    return {cardinality_error, state_error, eta * cardinality_error + (1.0 - eta) * state_error, eta};
}

[[nodiscard]] inline CostBreakdown peecs_cost(const MultiBernoulliDensity& density, double eta) {
    return combine_costs(normalized_cardinality_error(density), normalized_state_error(density), eta);
}

/// Same value as peecs_cost(updated.materialize(), eta), without expanding the particles.
[[nodiscard]] inline CostBreakdown peecs_cost(const UpdatedDensity& updated, double eta) {
    const auto existence = existence_of(updated);
    const double card = normalized_cardinality_error(existence);
    double state = 0.0;
    if (eta < 1.0 && updated.predicted) {
        std::vector<double> spreads;
        spreads.reserve(existence.size());
        const auto& comps = updated.predicted->density().components;
        for (std::size_t i = 0; i < updated.legacy_weights.size(); ++i)
            spreads.push_back(positional_spread(comps[i].particles.states, updated.legacy_weights[i]));
        const auto& all = updated.predicted->concatenated_states();
        for (const auto& w : updated.corrected_weights) spreads.push_back(positional_spread(all, w));
        state = normalized_state_error(existence, spreads);
    }
    return combine_costs(card, state, eta);
}

/// Poisson-binomial distribution of the number of existing components.
[[nodiscard]] inline std::vector<double> cardinality_pmf(const std::vector<double>& existence) {
    std::vector<double> pmf{1.0};
    pmf.reserve(existence.size() + 1);
    for (double r : existence) {
        pmf.push_back(0.0);
        for (std::size_t n = pmf.size() - 1; n > 0; --n) pmf[n] = pmf[n] * (1.0 - r) + pmf[n - 1] * r;
        pmf[0] *= 1.0 - r;
    }
    return pmf;
}

/// Second moment of the cardinality about its MAP value (lowest index on ties).
[[nodiscard]] inline double map_cardinality_variance(const std::vector<double>& existence) {
    const auto pmf = cardinality_pmf(existence);
    const auto n_map = static_cast<double>(std::distance(pmf.begin(), std::max_element(pmf.begin(), pmf.end())));
    double v = 0.0;
    for (std::size_t n = 0; n < pmf.size(); ++n) {
        const double d = static_cast<double>(n) - n_map;
        v += pmf[n] * d * d;
    }
    return v;
}

[[nodiscard]] inline double map_cardinality_variance_cost(const MultiBernoulliDensity& density) {
    return map_cardinality_variance(existence_of(density));
}

[[nodiscard]] inline double map_cardinality_variance_cost(const UpdatedDensity& updated) {
    return map_cardinality_variance(existence_of(updated));
}

// ---- Selection ----

enum class CostFunction { Peecs, MapCardinalityVariance, CardinalityVarianceOnly };

[[nodiscard]] inline std::string to_string(CostFunction f) {
    switch (f) {
        case CostFunction::Peecs: return "peecs";
        case CostFunction::MapCardinalityVariance: return "map_card_variance";
        case CostFunction::CardinalityVarianceOnly: return "card_variance_only";
    }
    return "peecs";
}

[[nodiscard]] inline CostFunction cost_function_from_string(const std::string& s) {
    if (s == "peecs") return CostFunction::Peecs;
    if (s == "map_card_variance") return CostFunction::MapCardinalityVariance;
    if (s == "card_variance_only") return CostFunction::CardinalityVarianceOnly;
    throw ConfigError("unknown cost function: " + s);
}

struct ControlConfig {
    CostFunction cost = CostFunction::Peecs;
    double eta = 0.5;
    CommandGrid grid;
};

struct CommandEvaluation {
    ControlCommand command;
    double cost = std::numeric_limits<double>::infinity();
    CostBreakdown breakdown;
    bool failed = false;
};

struct CommandSelection {
    ControlCommand command;
    std::vector<CommandEvaluation> evaluations;

    [[nodiscard]] const CommandEvaluation& chosen() const {
        for (const auto& e : evaluations)
            if (e.command.id == command.id) return e;
        throw Error("chosen command missing from evaluations");
    }
};

/// Cost of one candidate: PIMS at the candidate state, hypothetical update of the shared
/// predicted density (detection evaluated at the candidate), then the configured cost.
/// Consumes no randomness.
[[nodiscard]] inline CommandEvaluation evaluate_command(const std::shared_ptr<const PredictedDensity>& predicted,
                                                        const ControlCommand& command, const SensorModel& model,
                                                        const ClutterModel& clutter, const ControlConfig& config,
                                                        double existence_threshold) {
    CommandEvaluation eval;
    eval.command = command;
    try {
        const auto pims = build_pims(predicted->density(), command.target, model, existence_threshold);
        const auto updated = update(predicted, pims, command.target, model, clutter);
        switch (config.cost) {
            case CostFunction::Peecs:
                eval.breakdown = peecs_cost(updated, config.eta);
                eval.cost = eval.breakdown.total;
                break;
            case CostFunction::CardinalityVarianceOnly:
                eval.breakdown = peecs_cost(updated, 1.0);
                eval.cost = eval.breakdown.total;
                break;
            case CostFunction::MapCardinalityVariance:
                eval.cost = map_cardinality_variance_cost(updated);
                eval.breakdown = {eval.cost, 0.0, eval.cost, 1.0};
                break;
        }
        if (!std::isfinite(eval.cost)) throw NonFiniteLikelihood("non-finite command cost");
    } catch (const Error&) {
        eval.cost = std::numeric_limits<double>::infinity();
        eval.failed = true;
    }
    return eval;
}

/// Minimum-cost command. Ties go to "stay", then to the lowest id.
[[nodiscard]] inline CommandSelection select_command(const std::shared_ptr<const PredictedDensity>& predicted,
                                                     const std::vector<ControlCommand>& commands,
                                                     const SensorModel& model, const ClutterModel& clutter,
                                                     const ControlConfig& config, double existence_threshold) {
    if (commands.empty()) throw Error("select_command: empty command set");
    CommandSelection sel;
    sel.evaluations.reserve(commands.size());
    for (const auto& cmd : commands)
        sel.evaluations.push_back(evaluate_command(predicted, cmd, model, clutter, config, existence_threshold));

    const auto better = [](const CommandEvaluation& a, const CommandEvaluation& b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        if (a.command.is_stay() != b.command.is_stay()) return a.command.is_stay();
        return a.command.id < b.command.id;
    };
    const CommandEvaluation* best = &sel.evaluations.front();
    for (const auto& e : sel.evaluations)
        if (better(e, *best)) best = &e;
    sel.command = best->command;
    return sel;
}

[[nodiscard]] inline CommandSelection select_command(const PredictedDensity& predicted, const SensorState& current,
                                                     const SensorModel& model, const ClutterModel& clutter,
                                                     const ControlConfig& config, double existence_threshold) {
    return select_command(std::make_shared<const PredictedDensity>(predicted),
                          admissible_commands(current, config.grid), model, clutter, config, existence_threshold);
}

}  // namespace peecs
