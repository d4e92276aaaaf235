// Command-line driver: single runs, Monte-Carlo batches, parameter sweeps and preset export.

#include "peecs/peecs.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

/// A path to a scenario file, or the bare name of a built-in preset.
nlohmann::json scenario_json(const std::string& arg) {
    if (!std::filesystem::exists(arg)) {
        for (const auto& name : peecs::preset_names())
            if (arg == name) return peecs::to_json(peecs::preset(name));
        throw peecs::ConfigError("scenario file not found: " + arg);
    }
    std::ifstream in(arg);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw peecs::ConfigError("scenario " + arg + ": " + e.what());
    }
}

/// Output stream: the named file, or stdout when the name is empty or "-".
class Output {
public:
    explicit Output(const std::string& path) {
        if (path.empty() || path == "-") return;
        file_ = std::make_unique<std::ofstream>(path);
        if (!*file_) throw peecs::ConfigError("cannot open output file: " + path);
    }
    std::ostream& get() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

nlohmann::json parse_value(const std::string& text) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        return text;  // bare words such as cost-function names
    }
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

nlohmann::json::json_pointer pointer_for(const std::string& dotted) {
    std::string ptr = "/" + dotted;
    std::replace(ptr.begin(), ptr.end(), '.', '/');
    try {
        return nlohmann::json::json_pointer(ptr);
    } catch (const nlohmann::json::exception& e) {
        throw peecs::ConfigError("bad parameter path " + dotted + ": " + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-Bernoulli tracking with PEECS sensor control"};
    app.require_subcommand(1);

    std::string scenario, out, param, values, dir = ".";
    std::uint64_t seed = 0;
    std::size_t runs = 200, parallel = 1;
    bool timing = false;

    auto* run = app.add_subcommand("run", "Run one scenario and write per-step records as CSV");
    run->add_option("--scenario", scenario, "Scenario JSON file or preset name")->required();
    auto* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--out", out, "Output CSV (default stdout)");
    run->add_flag("--timing", timing, "Record wall-clock control-step times");

    auto* mc = app.add_subcommand("mc", "Monte-Carlo batch; writes per-step mean/std CSV");
    mc->add_option("--scenario", scenario, "Scenario JSON file or preset name")->required();
    mc->add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber);
    mc->add_option("--parallel", parallel, "Worker threads")->check(CLI::PositiveNumber);
    mc->add_option("--out", out, "Output CSV (default stdout)");
    mc->add_flag("--timing", timing, "Record wall-clock control-step times");

    auto* sweep = app.add_subcommand("sweep", "Monte-Carlo batches over values of one parameter");
    sweep->add_option("--scenario", scenario, "Scenario JSON file or preset name")->required();
    sweep->add_option("--param", param, "Dotted parameter path, e.g. control.eta")->required();
    sweep->add_option("--values", values, "Comma-separated values")->required();
    sweep->add_option("--runs", runs, "Runs per value")->check(CLI::PositiveNumber);
    sweep->add_option("--parallel", parallel, "Worker threads")->check(CLI::PositiveNumber);
    sweep->add_option("--out", out, "Output CSV (default stdout)");
    sweep->add_flag("--timing", timing, "Record wall-clock control-step times");

    auto* presets = app.add_subcommand("presets", "List built-in scenarios and write them as JSON");
    presets->add_option("--dir", dir, "Directory for the preset files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*presets) {
            std::filesystem::create_directories(dir);
            for (const auto& name : peecs::preset_names()) {
                const auto path = std::filesystem::path(dir) / (name + ".json");
                std::ofstream f(path);
                if (!f) throw peecs::ConfigError("cannot write " + path.string());
                f << peecs::to_json(peecs::preset(name)).dump(2) << '\n';
                std::cout << name << '\t' << path.string() << '\n';
            }
            return 0;
        }

        auto json = scenario_json(scenario);
        if (*sweep) {
            const auto ptr = pointer_for(param);
            const auto list = split_list(values);
            if (list.empty()) throw peecs::ConfigError("--values is empty");
            if (!json.contains(ptr)) throw peecs::ConfigError("unknown parameter: " + param);
            std::vector<peecs::ScenarioConfig> configs;
            for (const auto& v : list) {
                auto j = json;
                j[ptr] = parse_value(v);
                configs.push_back(peecs::scenario_from_json(j));
                configs.back().record_timing = configs.back().record_timing || timing;
            }
            Output o(out);
            peecs::write_aggregate_header(o.get(), "value,");
            for (std::size_t i = 0; i < configs.size(); ++i)
                peecs::write_aggregate_rows(o.get(), peecs::run_monte_carlo(configs[i], runs, parallel),
                                            list[i] + ",");
            return 0;
        }

        auto config = peecs::scenario_from_json(json);
        config.record_timing = config.record_timing || timing;
        if (*run) {
            if (*seed_opt) config.seed = seed;
            Output o(out);
            auto& os = o.get();
            peecs::write_steps_header(os);
            // Records are written and flushed one at a time so a failing run leaves a partial CSV.
            peecs::run_scenario(config, config.seed, [&](const peecs::StepRecord& r) {
                peecs::write_step_row(os, r);
                os.flush();
            });
            return 0;
        }
        if (*mc) {
            Output o(out);
            peecs::write_aggregate_csv(o.get(), peecs::run_monte_carlo(config, runs, parallel));
            return 0;
        }
    } catch (const peecs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
