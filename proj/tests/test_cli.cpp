#include "peecs/scenario.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
    const std::string cmd = std::string(PEECS_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("peecs_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                           "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
    fs::path dir;
};

}  // namespace

TEST_F(Cli, PresetsWritesFiles) {
    ASSERT_EQ(cli("presets --dir " + path("p")), 0);
    EXPECT_TRUE(fs::exists(dir / "p" / "case1.json"));
    EXPECT_TRUE(fs::exists(dir / "p" / "case2.json"));
}

TEST_F(Cli, RunIsByteIdentical) {
    ASSERT_EQ(cli("presets --dir " + path("p")), 0);
    const auto scenario = path("p/case1.json");
    ASSERT_EQ(cli("run --scenario " + scenario + " --seed 7 --out " + path("a.csv")), 0);
    ASSERT_EQ(cli("run --scenario " + scenario + " --seed 7 --out " + path("b.csv")), 0);
    const auto a = slurp(dir / "a.csv");
    EXPECT_EQ(a, slurp(dir / "b.csv"));
    EXPECT_EQ(a.substr(0, a.find('\n')), "k,n_true,n_est,ospa,ospa_loc,ospa_card,sensor_x,sensor_y,cmd_id,cost,ctrl_ms");
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 36);
}

TEST_F(Cli, McAndSweep) {
    auto c = peecs::preset("case1");
    c.duration = 4;
    std::ofstream(path("short.json")) << peecs::to_json(c).dump();
    ASSERT_EQ(cli("mc --scenario " + path("short.json") + " --runs 3 --parallel 2 --out " + path("mc2.csv")), 0);
    ASSERT_EQ(cli("mc --scenario " + path("short.json") + " --runs 3 --parallel 1 --out " + path("mc1.csv")), 0);
    EXPECT_EQ(slurp(dir / "mc1.csv"), slurp(dir / "mc2.csv"));
    ASSERT_EQ(cli("sweep --scenario " + path("short.json") +
                  " --param control.eta --values 0.5,1.0 --runs 2 --out " + path("sw.csv")),
              0);
    const auto sw = slurp(dir / "sw.csv");
    EXPECT_EQ(sw.substr(0, sw.find(',')), "value");
    EXPECT_EQ(std::count(sw.begin(), sw.end(), '\n'), 1 + 2 * 4);
    EXPECT_EQ(cli("sweep --scenario " + path("short.json") +
                  " --param control.cost --values map_card_variance,peecs --runs 1 --out " + path("sw2.csv")),
              0);
}

TEST_F(Cli, ConfigErrors) {
    EXPECT_EQ(cli("run --scenario " + path("missing.json")), 2);
    std::ofstream(path("broken.json")) << "{ not json";
    EXPECT_EQ(cli("run --scenario " + path("broken.json")), 2);
    EXPECT_EQ(cli("frobnicate"), 2);
    EXPECT_EQ(cli("mc --scenario case1 --runs 0"), 2);
    EXPECT_EQ(cli("sweep --scenario case1 --param control.nothing --values 1 --runs 1"), 2);
    EXPECT_EQ(cli("sweep --scenario case1 --param control.eta --values 7 --runs 1"), 2);
    EXPECT_EQ(cli("run --scenario case1 --out " + path("no/such/dir/x.csv")), 2);
}

TEST_F(Cli, RuntimeFailureLeavesPartialCsv) {
    // A bearing sensor parked on top of a stationary target cannot form a bearing.
    auto c = peecs::preset("case2");
    c.duration = 5;
    c.control.grid.step = 0.0;
    c.targets = {{(Eigen::VectorXd(5) << 10, 10, 0, 0, 0).finished(), 0, -1}};
    c.initial_sensor.position = Eigen::Vector2d(10, 10);
    c.truth_sigma_accel = 0.0;
    c.truth_sigma_turn = 0.0;
    std::ofstream(path("bad.json")) << peecs::to_json(c).dump();
    EXPECT_EQ(cli("run --scenario " + path("bad.json") + " --out " + path("partial.csv")), 3);
    const auto csv = slurp(dir / "partial.csv");
    EXPECT_EQ(csv.rfind("k,n_true", 0), 0u);
}
