#include "support.hpp"

#include "morsespec/report.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace morsespec;
namespace fs = std::filesystem;

namespace {

RunConfig small_block()
{
    RunConfig c;
    c.scenario = "block";
    c.n_omega = 6;
    c.dichotomy_omegas = 2;
    c.angle_horizon = 200;
    c.gamma_grid = GammaGrid{-0.2, 0.9, 0.01};
    return c;
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("morsespec_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::vector<std::string> read_lines(const fs::path& p)
{
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);)
        out.push_back(line);
    return out;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(MORSESPEC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Config, ParsesAndRejects)
{
    const RunConfig c = config_from_json(Json::parse(R"({"scenario": {"name": "block", "params": {"beta": 3}},
        "seed": 7, "T_grid": [10, 20], "epsilon": 0.05, "outputs": ["morse"]})"));
    EXPECT_EQ(c.scenario, "block");
    EXPECT_EQ(c.params.get("beta", 0), 3.0);
    EXPECT_EQ(c.seed, 7U);
    EXPECT_EQ(*c.T_grid, (std::vector<std::int64_t>{10, 20}));
    EXPECT_EQ(c.epsilon, std::vector<double>{0.05});

    for (const char* bad : {R"({"scenario": "block", "T_grid": [20, 10]})", R"({"scenario": "block", "bogus": 1})",
                            R"({"T_grid": [1]})", R"({"scenario": "block", "n_omega": 0})",
                            R"({"scenario": "block", "gamma_grid": {"lo": 0, "hi": 1, "step": 0}})",
                            R"({"scenario": "block", "outputs": ["plots"]})", R"({"scenario": "block", "seed": "x"})",
                            R"([1, 2])"})
        EXPECT_THROW(config_from_json(Json::parse(bad)), ConfigError) << bad;
}

TEST(Config, CustomTable)
{
    const RunConfig c = config_from_json(Json::parse(R"({"scenario": {"name": "custom",
        "custom": {"d": 2, "driver": "bernoulli", "matrices": [[[2, 0], [0, 1]], [[1, 0], [0, 3]]]}}})"));
    ASSERT_TRUE(c.params.custom);
    EXPECT_EQ(c.params.custom->matrices.size(), 2U);
    EXPECT_EQ(c.params.custom->matrices[1](1, 1), 3.0);
    EXPECT_THROW(config_from_json(Json::parse(R"({"scenario": {"name": "custom", "custom": {"d": 2,
        "matrices": [[[1, 2, 3]]]}}})")),
                 ConfigError);
}

TEST(Report, BlockRunRoundTripsAndIsDeterministic)
{
    const RunConfig c = small_block();
    const ResultBundle one = run(c, 1);
    const ResultBundle three = run(c, 3);
    EXPECT_TRUE(one.validation_ok()) << one.report["validation"].dump(2);
    EXPECT_EQ(one.canonical(), three.canonical());
    const ResultBundle back = bundle_from_json(bundle_to_json(one));
    EXPECT_EQ(back.report, one.report);
    EXPECT_EQ(one.report["morse"]["n"], 2);
    EXPECT_EQ(one.report["meta"]["seed"], 1);
}

TEST(Report, ExtendedRealsSerialiseAsStrings)
{
    EXPECT_EQ(detail::num(kInf), "inf");
    EXPECT_EQ(detail::num(-kInf), "-inf");
    EXPECT_EQ(detail::as_extended(detail::num(-kInf)), -kInf);
    EXPECT_EQ(detail::num(0.1234567890123456).get<double>(), 0.123456789012);
    EXPECT_EQ(detail::fmt12(std::log(2.0)), "0.69314718056");
}

TEST(Report, CsvFilesForBlock)
{
    const fs::path dir = fresh_dir("block_csv");
    write_outputs(run(small_block(), 1), dir);
    for (const auto& [file, header] : csv_headers()) {
        const auto lines = read_lines(dir / file);
        ASSERT_FALSE(lines.empty()) << file;
        EXPECT_EQ(lines.front(), header);
    }
    const auto ivs = read_lines(dir / "morse_intervals.csv");
    ASSERT_EQ(ivs.size(), 3U);
    std::vector<double> mids;
    for (std::size_t i = 1; i < ivs.size(); ++i)
        mids.push_back(std::stod(ivs[i].substr(ivs[i].rfind(',') + 1)));
    std::sort(mids.begin(), mids.end());
    EXPECT_NEAR(mids[0], 0.0, 0.02);
    EXPECT_NEAR(mids[1], std::log(2.0), 0.02);
    EXPECT_EQ(read_lines(dir / "dichotomy.csv").size(), 1U + 111U);
    EXPECT_TRUE(fs::exists(dir / "report.json"));
}

TEST(Report, EmptyBundleGivesHeaderOnlyFiles)
{
    const fs::path dir = fresh_dir("empty");
    emit_plot_data(ResultBundle{}, dir);
    for (const auto& [file, header] : csv_headers()) {
        const auto lines = read_lines(dir / file);
        ASSERT_EQ(lines.size(), 1U) << file;
        EXPECT_EQ(lines.front(), header);
    }
}

TEST(Report, IdentityReportsZero)
{
    RunConfig c;
    c.scenario = "identity";
    c.n_omega = 4;
    c.dichotomy_omegas = 2;
    const ResultBundle b = run(c, 1);
    EXPECT_TRUE(b.validation_ok()) << b.report["validation"].dump(2);
    EXPECT_EQ(b.report["morse"]["n"], 1);
    EXPECT_NEAR(detail::as_extended(b.report["morse"]["full_space_interval"]["lo"]), 0.0, 1e-15);
    EXPECT_NEAR(detail::as_extended(b.report["morse"]["full_space_interval"]["hi"]), 0.0, 1e-15);
}

TEST(Report, MergedDecompositionFailsValidation)
{
    RunConfig c = small_block();
    c.cluster_gap = 10.0;
    const ResultBundle b = run(c, 1);
    EXPECT_FALSE(b.validation_ok());
    EXPECT_EQ(b.report["morse"]["n"], 1);
}

TEST(Report, PointsMatchIntervals)
{
    EXPECT_TRUE(detail::points_match_intervals({0.0, 0.7}, {{-0.01, 0.01}, {0.69, 0.71}}, 0.05));
    EXPECT_FALSE(detail::points_match_intervals({0.0, 0.7}, {{-0.01, 0.71}}, 0.05));
    EXPECT_FALSE(detail::points_match_intervals({0.0}, {{-0.01, 0.01}, {0.5, 0.51}}, 0.05));
    EXPECT_FALSE(detail::points_match_intervals({0.0}, {}, 0.05));
}

TEST(Cli, ExitCodes)
{
    const fs::path dir = fresh_dir("cli");
    fs::create_directories(dir);
    EXPECT_EQ(run_cli("scenarios list"), 0);
    EXPECT_EQ(run_cli("run --scenario identity --n-omega 3 --outputs lyapunov morse --out " + (dir / "id").string()),
              0);
    EXPECT_TRUE(fs::exists(dir / "id" / "report.json"));

    {
        std::ofstream cfg(dir / "bad.json");
        cfg << R"({"scenario": "block", "T_grid": [200, 100]})";
    }
    EXPECT_EQ(run_cli("run --config " + (dir / "bad.json").string() + " --out " + (dir / "bad").string()), 1);
    EXPECT_EQ(run_cli("run --scenario nope --out " + (dir / "nope").string()), 1);
    EXPECT_EQ(run_cli("run --scenario block --beta 0.5 --out " + (dir / "beta").string()), 1);

    {
        std::ofstream cfg(dir / "merged.json");
        cfg << R"({"scenario": "block", "n_omega": 4, "cluster_gap": 10, "outputs": ["morse"]})";
    }
    EXPECT_EQ(run_cli("run --config " + (dir / "merged.json").string() + " --out " + (dir / "merged").string()), 2);
}
