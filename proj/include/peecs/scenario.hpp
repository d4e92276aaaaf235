#pragma once

#include "peecs/cbmember.hpp"
#include "peecs/control.hpp"
#include "peecs/metrics.hpp"
#include "peecs/models.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace peecs {

/// A ground-truth target: its state at step `birth`, present for birth <= k <= death.
/// death < 0 means "until the end of the scenario".
struct TargetSpec {
    Eigen::VectorXd state;
    int birth = 0;
    int death = -1;
};

struct ScenarioConfig {
    std::string name = "custom";
    int duration = 35;
    std::uint64_t seed = 1;

    MotionModel motion;             // filter transition model
    double truth_sigma_accel = 0.0;  // ground-truth process noise
    double truth_sigma_turn = 0.0;

    SensorModel sensor = RangeSensorModel{};
    SensorState initial_sensor;
    ClutterModel clutter;
    BirthModel birth;
    std::vector<TargetSpec> targets;

    FilterConfig filter;
    ControlConfig control;
    OspaParams ospa;

    /// When false, control-step timings are reported as 0 so that outputs are byte-reproducible.
    bool record_timing = false;
};

// ---- JSON ----

namespace detail {

inline Eigen::VectorXd vec_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigError("expected a numeric array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

inline nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
    auto j = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

inline Eigen::Vector2d vec2_from_json(const nlohmann::json& j) {
    const auto v = vec_from_json(j);
    if (v.size() != 2) throw ConfigError("expected a 2-element array");
    return v;
}

template <typename T>
T value_or(const nlohmann::json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace detail

inline nlohmann::json to_json(const ScenarioConfig& c) {
    using detail::vec_to_json;
    nlohmann::json j;
    j["name"] = c.name;
    j["duration"] = c.duration;
    j["seed"] = c.seed;

    auto& m = j["motion"];
    m["model"] = c.motion.kind == MotionKind::ConstantVelocity ? "cv" : "ct";
    m["T"] = c.motion.T;
    m["survival"] = c.motion.survival;
    m["sigma_accel"] = c.motion.sigma_accel;
    m["sigma_turn"] = c.motion.sigma_turn;
    m["truth_sigma_accel"] = c.truth_sigma_accel;
    m["truth_sigma_turn"] = c.truth_sigma_turn;

    auto& s = j["sensor"];
    std::visit([&](const auto& model) {
        using M = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<M, RangeSensorModel>) {
            s["model"] = "range";
            s["sigma0"] = model.sigma0;
            s["beta"] = model.beta;
        } else {
            s["model"] = "bearing_range";
            s["sigma_theta"] = model.sigma_theta;
            s["sigma_r"] = model.sigma_r;
        }
        s["detection"] = {{"R0", model.profile.R0}, {"h", model.profile.h}};
    }, c.sensor);
    s["initial_position"] = vec_to_json(c.initial_sensor.position);

    j["clutter"] = {{"rate", c.clutter.rate}, {"lower", vec_to_json(c.clutter.lower)},
                    {"upper", vec_to_json(c.clutter.upper)}};

    auto& b = j["birth"];
    b = nlohmann::json::array();
    for (const auto& comp : c.birth.components) {
        nlohmann::json e;
        e["existence"] = comp.existence;
        if (const auto* u = std::get_if<UniformBirth>(&comp.density))
            e["uniform"] = {{"lower", vec_to_json(u->lower)}, {"upper", vec_to_json(u->upper)}};
        else {
            const auto& g = std::get<GaussianBirth>(comp.density);
            e["gaussian"] = {{"mean", vec_to_json(g.mean)}, {"stddev", vec_to_json(g.stddev)}};
        }
        b.push_back(e);
    }

    auto& t = j["targets"];
    t = nlohmann::json::array();
    for (const auto& tgt : c.targets)
        t.push_back({{"state", vec_to_json(tgt.state)}, {"birth", tgt.birth}, {"death", tgt.death}});

    j["filter"] = {{"particles_per_target", c.filter.particles_per_target},
                   {"min_particles", c.filter.min_particles},
                   {"max_particles", c.filter.max_particles},
                   {"prune_threshold", c.filter.prune_threshold},
                   {"merge_distance", c.filter.merge_distance},
                   {"max_components", c.filter.max_components},
                   {"existence_threshold", c.filter.existence_threshold}};

    j["control"] = {{"cost", to_string(c.control.cost)},
                    {"eta", c.control.eta},
                    {"step", c.control.grid.step},
                    {"headings", c.control.grid.headings},
                    {"rings", c.control.grid.rings},
                    {"region_min", vec_to_json(c.control.grid.region_min)},
                    {"region_max", vec_to_json(c.control.grid.region_max)}};

    j["ospa"] = {{"cutoff", c.ospa.cutoff}, {"order", c.ospa.order}};
    j["record_timing"] = c.record_timing;
    return j;
}

/// Parse and validate a scenario. Every failure surfaces as ConfigError.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    using detail::require;
    using detail::value_or;
    using detail::vec2_from_json;
    using detail::vec_from_json;
    ScenarioConfig c;
    try {
        c.name = value_or<std::string>(j, "name", "custom");
        c.duration = j.at("duration").get<int>();
        c.seed = value_or<std::uint64_t>(j, "seed", 1);

        const auto& m = j.at("motion");
        const auto model = m.at("model").get<std::string>();
        if (model == "cv")
            c.motion.kind = MotionKind::ConstantVelocity;
        else if (model == "ct")
            c.motion.kind = MotionKind::CoordinatedTurn;
        else
            throw ConfigError("unknown motion model: " + model);
        c.motion.T = value_or(m, "T", 1.0);
        c.motion.survival = value_or(m, "survival", 0.99);
        c.motion.sigma_accel = value_or(m, "sigma_accel", 0.0);
        c.motion.sigma_turn = value_or(m, "sigma_turn", 0.0);
        c.truth_sigma_accel = value_or(m, "truth_sigma_accel", 0.0);
        c.truth_sigma_turn = value_or(m, "truth_sigma_turn", 0.0);

        const auto& s = j.at("sensor");
        DetectionProfile profile;
        if (s.contains("detection")) {
            profile.R0 = s.at("detection").at("R0").get<double>();
            profile.h = s.at("detection").at("h").get<double>();
        }
        const auto sensor_model = s.at("model").get<std::string>();
        if (sensor_model == "range") {
            RangeSensorModel r;
            r.sigma0 = s.at("sigma0").get<double>();
            r.beta = s.at("beta").get<double>();
            r.profile = profile;
            require(r.sigma0 > 0.0 && r.beta >= 0.0, "range sensor needs sigma0 > 0 and beta >= 0");
            c.sensor = r;
        } else if (sensor_model == "bearing_range") {
            BearingRangeSensorModel br;
            br.sigma_theta = s.at("sigma_theta").get<double>();
            br.sigma_r = s.at("sigma_r").get<double>();
            br.profile = profile;
            require(br.sigma_theta > 0.0 && br.sigma_r > 0.0, "bearing-range sensor needs positive noise");
            c.sensor = br;
        } else {
            throw ConfigError("unknown sensor model: " + sensor_model);
        }
        c.initial_sensor.position = vec2_from_json(s.at("initial_position"));

        const auto& cl = j.at("clutter");
        c.clutter.rate = cl.at("rate").get<double>();
        c.clutter.lower = vec_from_json(cl.at("lower"));
        c.clutter.upper = vec_from_json(cl.at("upper"));

        for (const auto& e : j.at("birth")) {
            BirthComponent b;
            b.existence = e.at("existence").get<double>();
            require(b.existence >= 0.0 && b.existence <= 1.0, "birth existence must lie in [0, 1]");
            if (e.contains("uniform"))
                b.density = UniformBirth{vec_from_json(e["uniform"].at("lower")), vec_from_json(e["uniform"].at("upper"))};
            else if (e.contains("gaussian"))
                b.density =
                    GaussianBirth{vec_from_json(e["gaussian"].at("mean")), vec_from_json(e["gaussian"].at("stddev"))};
            else
                throw ConfigError("birth component needs 'uniform' or 'gaussian'");
            c.birth.components.push_back(std::move(b));
        }

        for (const auto& e : j.at("targets"))
            c.targets.push_back({vec_from_json(e.at("state")), value_or(e, "birth", 0), value_or(e, "death", -1)});

        if (j.contains("filter")) {
            const auto& f = j["filter"];
            c.filter.particles_per_target = value_or(f, "particles_per_target", c.filter.particles_per_target);
            c.filter.min_particles = value_or(f, "min_particles", c.filter.min_particles);
            c.filter.max_particles = value_or(f, "max_particles", c.filter.max_particles);
            c.filter.prune_threshold = value_or(f, "prune_threshold", c.filter.prune_threshold);
            c.filter.merge_distance = value_or(f, "merge_distance", c.filter.merge_distance);
            c.filter.max_components = value_or(f, "max_components", c.filter.max_components);
            c.filter.existence_threshold = value_or(f, "existence_threshold", c.filter.existence_threshold);
        }

        if (j.contains("control")) {
            const auto& ct = j["control"];
            c.control.cost = cost_function_from_string(value_or<std::string>(ct, "cost", "peecs"));
            c.control.eta = value_or(ct, "eta", c.control.eta);
            c.control.grid.step = value_or(ct, "step", c.control.grid.step);
            c.control.grid.headings = value_or(ct, "headings", c.control.grid.headings);
            c.control.grid.rings = value_or(ct, "rings", c.control.grid.rings);
            if (ct.contains("region_min")) c.control.grid.region_min = vec2_from_json(ct["region_min"]);
            if (ct.contains("region_max")) c.control.grid.region_max = vec2_from_json(ct["region_max"]);
        }

        if (j.contains("ospa")) {
            c.ospa.cutoff = value_or(j["ospa"], "cutoff", c.ospa.cutoff);
            c.ospa.order = value_or(j["ospa"], "order", c.ospa.order);
        }
        c.record_timing = value_or(j, "record_timing", false);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }

    const auto dim = c.motion.state_dim();
    require(c.duration >= 0, "duration must be >= 0");
    require(c.motion.T > 0.0, "motion.T must be positive");
    require(c.motion.survival >= 0.0 && c.motion.survival <= 1.0, "motion.survival must lie in [0, 1]");
    require(detection_profile(c.sensor).R0 > 0.0 && detection_profile(c.sensor).h >= 0.0,
            "detection needs R0 > 0 and h >= 0");
    const auto zdim = std::visit([](const auto& mdl) { return mdl.measurement_dim; }, c.sensor);
    require(c.clutter.rate >= 0.0, "clutter.rate must be >= 0");
    require(c.clutter.lower.size() == zdim && c.clutter.upper.size() == zdim,
            "clutter support dimension must match the sensor model");
    require((c.clutter.upper.array() > c.clutter.lower.array()).all(), "clutter support must be nondegenerate");
    for (const auto& b : c.birth.components) {
        require(b.dim() == dim, "birth dimension must match the motion model");
        require(b.existence >= 0.0 && b.existence <= 1.0, "birth existence must lie in [0, 1]");
    }
    for (const auto& t : c.targets) {
        require(t.state.size() == dim, "target dimension must match the motion model");
        require(t.birth >= 0, "target birth step must be >= 0");
    }
    require(c.filter.min_particles >= 1 && c.filter.min_particles <= c.filter.max_particles,
            "filter particle bounds are inconsistent");
    require(c.filter.particles_per_target >= 1, "filter.particles_per_target must be >= 1");
    require(c.control.eta >= 0.0 && c.control.eta <= 1.0, "control.eta must lie in [0, 1]");
    require(c.control.grid.step >= 0.0, "control.step must be >= 0");
    require((c.control.grid.region_max.array() >= c.control.grid.region_min.array()).all(),
            "control region is inverted");
    require(c.ospa.cutoff > 0.0 && c.ospa.order >= 1.0, "ospa needs cutoff > 0 and order >= 1");
    return c;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario " + path + ": " + e.what());
    }
    return scenario_from_json(j);
}

// ---- Presets ----

/// Range-only sensor, five slowly moving targets in a 1 km square.
inline ScenarioConfig case1_preset() {
    ScenarioConfig c;
    c.name = "case1";
    c.duration = 35;
    c.seed = 1;
    c.motion = {MotionKind::ConstantVelocity, 1.0, 0.99, 2.0, 0.0};

    RangeSensorModel sensor;
    sensor.sigma0 = 1.0;
    sensor.beta = 5e-5;
    sensor.profile = {320.0, 0.00025};
    c.sensor = sensor;
    c.initial_sensor.position = {10.0, 10.0};

    c.clutter.rate = 0.5;
    c.clutter.lower = Eigen::VectorXd::Zero(1);
    c.clutter.upper = Eigen::VectorXd::Constant(1, 1000.0 * std::numbers::sqrt2);

    for (int i = 0; i < 4; ++i) {
        Eigen::VectorXd lo(4), hi(4);
        lo << 0.0, 0.0, -1.0, -1.0;
        hi << 1000.0, 1000.0, 1.0, 1.0;
        c.birth.components.push_back({0.03, UniformBirth{lo, hi}});
    }

    const double initial[5][4] = {
        {800, 600, 1, 0}, {650, 500, 0.3, 0.6}, {620, 700, 0.25, 0.45}, {750, 800, 0, 0.6}, {700, 700, 0.2, 0.6}};
    for (const auto& s : initial) {
        Eigen::VectorXd x(4);
        x << s[0], s[1], s[2], s[3];
        c.targets.push_back({x, 0, -1});
    }

    c.filter.particles_per_target = 300;
    c.control.grid.region_min = {0.0, 0.0};
    c.control.grid.region_max = {1000.0, 1000.0};
    return c;
}

/// Bearing-range sensor, manoeuvring targets under the nearly-constant-turn model.
inline ScenarioConfig case2_preset() {
    ScenarioConfig c;
    c.name = "case2";
    c.duration = 50;
    c.seed = 1;
    c.motion = {MotionKind::CoordinatedTurn, 1.0, 0.99, 15.0, std::numbers::pi / 180.0};

    BearingRangeSensorModel sensor;
    sensor.sigma_theta = std::numbers::pi / 180.0;
    sensor.sigma_r = 5.0;
    sensor.profile = {320.0, 0.00025};
    c.sensor = sensor;
    c.initial_sensor.position = {10.0, 10.0};

    c.clutter.rate = 10.0;
    c.clutter.lower = Eigen::Vector2d(-std::numbers::pi / 2.0, 0.0);
    c.clutter.upper = Eigen::Vector2d(std::numbers::pi / 2.0, 2000.0);

    // Birth means as positions (x, y) with zero velocity and turn rate.
    const double means[4][2] = {{-1500, 250}, {-250, 1000}, {250, 750}, {1000, 1500}};
    const double existence[4] = {0.02, 0.02, 0.03, 0.03};
    Eigen::VectorXd sd(5);
    sd << 50, 50, 50, 50, 6.0 * std::numbers::pi / 180.0;
    for (int i = 0; i < 4; ++i) {
        Eigen::VectorXd m = Eigen::VectorXd::Zero(5);
        m[0] = means[i][0];
        m[1] = means[i][1];
        c.birth.components.push_back({existence[i], GaussianBirth{m, sd}});
    }

    const double initial[4][5] = {{-1500, 250, 20, 10, 0.01},
                                  {-250, 1000, 15, -10, -0.01},
                                  {250, 750, -10, 15, 0.015},
                                  {1000, 1500, -20, -10, -0.01}};
    const int births[4] = {0, 10, 0, 0};
    const int deaths[4] = {-1, -1, -1, 40};
    for (int i = 0; i < 4; ++i) {
        Eigen::VectorXd x(5);
        x << initial[i][0], initial[i][1], initial[i][2], initial[i][3], initial[i][4];
        c.targets.push_back({x, births[i], deaths[i]});
    }

    c.filter.particles_per_target = 300;
    c.control.grid.region_min = {-2000.0, 0.0};
    c.control.grid.region_max = {2000.0, 2000.0};
    return c;
}

inline std::vector<std::string> preset_names() { return {"case1", "case2"}; }

inline ScenarioConfig preset(const std::string& name) {
    if (name == "case1") return case1_preset();
    if (name == "case2") return case2_preset();
    throw ConfigError("unknown preset: " + name);
}

}  // namespace peecs
