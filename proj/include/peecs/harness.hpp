#pragma once

#include "peecs/cbmember.hpp"
#include "peecs/control.hpp"
#include "peecs/metrics.hpp"
#include "peecs/models.hpp"
#include "peecs/scenario.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace peecs {

// ---- Random streams ----

/// Independent streams of one run. Each step draws from children keyed by the step index,
/// so toggling clutter or detection never perturbs the truth or the filter.
struct RunStreams {
    enum Id : std::uint64_t { Truth = 1, Detection = 2, Clutter = 3, Filter = 4 };

    explicit RunStreams(std::uint64_t seed) : base(seed) {}

    [[nodiscard]] RandomSource truth() const { return base.split(Truth); }
    [[nodiscard]] RandomSource at(Id id, int k) const {
        return base.split(id).split(static_cast<std::uint64_t>(k));
    }

    RandomSource base;
};

// ---- Ground truth ----

struct GroundTruth {
    /// states[k] holds the targets present at step k, for k = 0..duration.
    std::vector<std::vector<Eigen::VectorXd>> states;

    [[nodiscard]] std::vector<Eigen::VectorXd> positions(int k) const {
        std::vector<Eigen::VectorXd> out;
        for (const auto& x : states[static_cast<std::size_t>(k)]) out.emplace_back(x.head<2>());
        return out;
    }
};

[[nodiscard]] inline GroundTruth simulate_truth(const ScenarioConfig& config, RandomSource& rng) {
    GroundTruth truth;
    const int K = config.duration;
    truth.states.resize(static_cast<std::size_t>(K) + 1);
    MotionModel motion = config.motion;
    motion.sigma_accel = config.truth_sigma_accel;
    motion.sigma_turn = config.truth_sigma_turn;
    for (const auto& target : config.targets) {
        if (target.state.size() != motion.state_dim())
            throw ConfigError("target state dimension does not match the motion model");
        const int death = target.death < 0 ? K : std::min(target.death, K);
        Eigen::VectorXd x = target.state;
        for (int k = target.birth; k <= death; ++k) {
            truth.states[static_cast<std::size_t>(k)].push_back(x);
            Eigen::MatrixXd col = x;
            propagate(motion, col, rng);
            x = col.col(0);
        }
    }
    return truth;
}

// ---- Measurements ----

/// Detections (each target with probability p_D, model noise) plus Poisson clutter, shuffled.
[[nodiscard]] inline MeasurementSet generate_measurements(const std::vector<Eigen::VectorXd>& targets,
                                                          const SensorState& sensor, const SensorModel& model,
                                                          const ClutterModel& clutter, RandomSource& detection_rng,
                                                          RandomSource& clutter_rng) {
    MeasurementSet Z;
    const auto& profile = detection_profile(model);
    for (const auto& x : targets) {
        const Eigen::Vector2d pos = x.head<2>();
        if (!detection_rng.bernoulli(detection_probability(sensor, pos, profile))) continue;
        Z.push_back(std::visit([&](const auto& m) { return m.sample(sensor, pos, detection_rng); }, model));
    }
    auto clutter_points = clutter.sample(clutter_rng);
    Z.insert(Z.end(), std::make_move_iterator(clutter_points.begin()), std::make_move_iterator(clutter_points.end()));
    std::shuffle(Z.begin(), Z.end(), detection_rng.engine());
    return Z;
}

[[nodiscard]] inline MeasurementSet generate_measurements(const std::vector<Eigen::VectorXd>& targets,
                                                          const SensorState& sensor, const SensorModel& model,
                                                          const ClutterModel& clutter, RandomSource& rng) {
    return generate_measurements(targets, sensor, model, clutter, rng, rng);
}

// ---- Closed loop ----

struct StepRecord {
    int k = 0;
    std::size_t n_true = 0;
    std::size_t n_est = 0;
    OspaResult ospa;
    Eigen::Vector2d sensor = Eigen::Vector2d::Zero();
    int command_id = 0;
    double cost = 0.0;
    double ctrl_ms = 0.0;
    std::vector<double> command_costs;
    std::vector<Eigen::VectorXd> estimates;
};

struct FilterState {
    MultiBernoulliDensity density;
    SensorState sensor;
};

/// One pass of the controlled filter: predict, choose and apply a command, measure,
/// update, manage tracks, extract and score the estimate.
[[nodiscard]] inline StepRecord run_step(FilterState& state, const std::vector<Eigen::VectorXd>& truth_k, int k,
                                         const ScenarioConfig& config, const RunStreams& streams) {
    auto filter_rng = streams.at(RunStreams::Filter, k);
    auto detection_rng = streams.at(RunStreams::Detection, k);
    auto clutter_rng = streams.at(RunStreams::Clutter, k);
    const double threshold = config.filter.existence_threshold;

    auto predicted = std::make_shared<const PredictedDensity>(
        predict(state.density, config.motion, config.birth, config.filter, filter_rng));

    const auto t0 = std::chrono::steady_clock::now();
    const auto selection = select_command(predicted, admissible_commands(state.sensor, config.control.grid),
                                          config.sensor, config.clutter, config.control, threshold);
    const auto t1 = std::chrono::steady_clock::now();
    state.sensor = selection.command.target;

    const auto Z = generate_measurements(truth_k, state.sensor, config.sensor, config.clutter, detection_rng,
                                         clutter_rng);
    const auto updated = update(predicted, Z, state.sensor, config.sensor, config.clutter);
    state.density = prune_merge_resample(updated, config.filter, filter_rng);

    StepRecord rec;
    rec.k = k;
    rec.n_true = truth_k.size();
    const auto estimate = extract_estimate(state.density, threshold);
    rec.n_est = estimate.count;
    std::vector<Eigen::VectorXd> est_pos, true_pos;
    for (const auto& x : estimate.states) est_pos.emplace_back(x.head<2>());
    for (const auto& x : truth_k) true_pos.emplace_back(x.head<2>());
    rec.ospa = ospa(true_pos, est_pos, config.ospa);
    rec.estimates = std::move(est_pos);
    rec.sensor = state.sensor.position;
    rec.command_id = selection.command.id;
    rec.cost = selection.chosen().cost;
    for (const auto& e : selection.evaluations) rec.command_costs.push_back(e.cost);
    if (config.record_timing) rec.ctrl_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return rec;
}

/// Runs steps 1..duration from an empty prior, handing each record to `sink` as soon as it exists.
inline void run_scenario(const ScenarioConfig& config, std::uint64_t seed,
                         const std::function<void(const StepRecord&)>& sink) {
    const RunStreams streams(seed);
    auto truth_rng = streams.truth();
    const auto truth = simulate_truth(config, truth_rng);
    FilterState state{{}, config.initial_sensor};
    for (int k = 1; k <= config.duration; ++k)
        sink(run_step(state, truth.states[static_cast<std::size_t>(k)], k, config, streams));
}

[[nodiscard]] inline std::vector<StepRecord> run_scenario(const ScenarioConfig& config, std::uint64_t seed) {
    std::vector<StepRecord> records;
    records.reserve(static_cast<std::size_t>(std::max(0, config.duration)));
    run_scenario(config, seed, [&](const StepRecord& r) { records.push_back(r); });
    return records;
}

[[nodiscard]] inline std::vector<StepRecord> run_scenario(const ScenarioConfig& config) {
    return run_scenario(config, config.seed);
}

// ---- Monte Carlo ----

struct MetricStats {
    double mean = 0.0;
    double stddev = 0.0;
};

struct AggregateRow {
    int k = 0;
    MetricStats ospa, ospa_loc, ospa_card, n_est, ctrl_ms;
};

/// All runs of a Monte-Carlo batch; run i uses seed config.seed + i.
[[nodiscard]] inline std::vector<std::vector<StepRecord>> run_monte_carlo_records(const ScenarioConfig& config,
                                                                                  std::size_t runs,
                                                                                  std::size_t parallelism) {
    if (runs == 0) throw ConfigError("runs must be >= 1");
    std::vector<std::vector<StepRecord>> results(runs);
    const std::size_t workers = std::clamp<std::size_t>(parallelism, 1, runs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < runs; i = next++) {
            try {
                results[i] = run_scenario(config, config.seed + i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

/// Per-step mean and sample standard deviation across runs, reduced in run order.
[[nodiscard]] inline std::vector<AggregateRow> aggregate(const std::vector<std::vector<StepRecord>>& runs) {
    std::vector<AggregateRow> rows;
    if (runs.empty()) return rows;
    const std::size_t steps = runs.front().size();
    const auto n = static_cast<double>(runs.size());
    auto stats = [&](std::size_t s, auto getter) {
        double sum = 0.0;
        for (const auto& r : runs) sum += getter(r[s]);
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& r : runs) {
            const double d = getter(r[s]) - mean;
            ss += d * d;
        }
        return MetricStats{mean, runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
    };
    for (std::size_t s = 0; s < steps; ++s) {
        AggregateRow row;
        row.k = runs.front()[s].k;
        row.ospa = stats(s, [](const StepRecord& r) { return r.ospa.total; });
        row.ospa_loc = stats(s, [](const StepRecord& r) { return r.ospa.localization; });
        row.ospa_card = stats(s, [](const StepRecord& r) { return r.ospa.cardinality; });
        row.n_est = stats(s, [](const StepRecord& r) { return static_cast<double>(r.n_est); });
        row.ctrl_ms = stats(s, [](const StepRecord& r) { return r.ctrl_ms; });
        rows.push_back(row);
    }
    return rows;
}

[[nodiscard]] inline std::vector<AggregateRow> run_monte_carlo(const ScenarioConfig& config, std::size_t runs,
                                                               std::size_t parallelism) {
    return aggregate(run_monte_carlo_records(config, runs, parallelism));
}

// ---- CSV ----

[[nodiscard]] inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline void write_steps_header(std::ostream& out) {
    out << "k,n_true,n_est,ospa,ospa_loc,ospa_card,sensor_x,sensor_y,cmd_id,cost,ctrl_ms\n";
}

inline void write_step_row(std::ostream& out, const StepRecord& r) {
    out << r.k << ',' << r.n_true << ',' << r.n_est << ',' << format_real(r.ospa.total) << ','
        << format_real(r.ospa.localization) << ',' << format_real(r.ospa.cardinality) << ','
        << format_real(r.sensor.x()) << ',' << format_real(r.sensor.y()) << ',' << r.command_id << ','
        << format_real(r.cost) << ',' << format_real(r.ctrl_ms) << '\n';
}

inline void write_steps_csv(std::ostream& out, const std::vector<StepRecord>& records) {
    write_steps_header(out);
    for (const auto& r : records) write_step_row(out, r);
}

inline void write_aggregate_header(std::ostream& out, const std::string& prefix = {}) {
    out << prefix
        << "k,ospa_mean,ospa_std,ospa_loc_mean,ospa_loc_std,ospa_card_mean,ospa_card_std,"
           "n_est_mean,n_est_std,ctrl_ms_mean,ctrl_ms_std\n";
}

inline void write_aggregate_rows(std::ostream& out, const std::vector<AggregateRow>& rows,
                                 const std::string& prefix = {}) {
    for (const auto& r : rows) {
        out << prefix << r.k;
        for (const auto* m : {&r.ospa, &r.ospa_loc, &r.ospa_card, &r.n_est, &r.ctrl_ms})
            out << ',' << format_real(m->mean) << ',' << format_real(m->stddev);
        out << '\n';
    }
}

inline void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
    write_aggregate_header(out);
    write_aggregate_rows(out, rows);
}

}  // namespace peecs
