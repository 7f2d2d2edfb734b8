#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "csv_reader.hpp"
#include "helpers.hpp"
#include "mesh/cli.hpp"
#include "mesh/error.hpp"
#include "mesh/run_config.hpp"

namespace mesh {
namespace {

struct Result {
    int code = 0;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "mesh");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Cli, SummarizeFixture) {
    const auto dir = test::scratch_dir("cli_summarize");
    const auto r = run({"summarize", "--events", test::fixture("three_events.csv").string(), "--roster",
                        test::fixture("roster.csv").string(), "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(dir / "summary.csv");
    const auto rows = test::read_csv_rows(in);
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& row : rows) EXPECT_EQ(row[2], "33.33");
    EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
}

TEST(Cli, SummarizePublishedCounts) {
    const auto dir = test::scratch_dir("cli_counts");
    const auto r = run({"summarize", "--counts", "3352,397017,3628", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto s = slurp(dir / "summary.csv");
    EXPECT_NE(s.find("0.83"), std::string::npos);
    EXPECT_NE(s.find("98.27"), std::string::npos);
    EXPECT_NE(s.find("0.90"), std::string::npos);
}

TEST(Cli, GnetAppendix) {
    const auto dir = test::scratch_dir("cli_gnet");
    const auto r = run({"gnet", "--coefficients", test::fixture("appendix_contributions.csv").string(), "--out",
                        dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(dir / "gnet.csv");
    const auto rows = test::read_csv_rows(in);
    ASSERT_FALSE(rows.empty());
    EXPECT_EQ(rows[0][1], "HENRIK.LUNDQVIST");
    EXPECT_NEAR(std::stod(rows[0][5]) / 127.80, 1.0, 0.005);
}

TEST(Cli, ExitCodesAndErrorJson) {
    const auto dir = test::scratch_dir("cli_errors");
    auto r = run({"nonsense"});
    EXPECT_EQ(r.code, 1);
    auto j = nlohmann::json::parse(r.err);
    EXPECT_EQ(j["error"], "usage");
    EXPECT_EQ(j["exit_code"], 1);

    r = run({"summarize", "--events", (dir / "missing.csv").string(), "--roster",
             test::fixture("roster.csv").string(), "--out", dir.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "data");

    std::ofstream(dir / "bad.csv") << "game_id,season\nG1,2010\n";
    r = run({"summarize", "--events", (dir / "bad.csv").string(), "--roster", test::fixture("roster.csv").string(),
             "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, 2);

    r = run({"fit", "--set", "fit.mode=sideways", "--events", test::fixture("three_events.csv").string(),
             "--roster", test::fixture("roster.csv").string(), "--out", (dir / "o2").string()});
    EXPECT_EQ(r.code, 1);

    r = run({"validate", "--set", "validate.replications=20", "--set", "validate.predictors=4", "--set",
             "validate.events=1500", "--set", "validate.debug_likelihood_power=8", "--out", (dir / "o3").string()});
    EXPECT_EQ(r.code, 3) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "numerical");
}

TEST(Cli, RefusesToOverwriteInputs) {
    const auto dir = test::scratch_dir("cli_overwrite");
    std::filesystem::copy_file(test::fixture("appendix_contributions.csv"), dir / "gnet.csv");
    const auto before = slurp(dir / "gnet.csv");
    const auto r = run({"gnet", "--coefficients", (dir / "gnet.csv").string(), "--out", dir.string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(slurp(dir / "gnet.csv"), before);
}

TEST(Cli, IniConfigAndOverrides) {
    const auto dir = test::scratch_dir("cli_ini");
    std::ofstream(dir / "run.ini") << "[data]\nevents = " << test::fixture("three_events.csv").string()
                                   << "\nroster = " << test::fixture("roster.csv").string()
                                   << "\n[run]\nseed = 17\nout = " << (dir / "out").string() << "\n";
    const auto r = run({"summarize", "--config", (dir / "run.ini").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto m = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
    EXPECT_EQ(m["seed"], 17);
    EXPECT_EQ(m["command"], "summarize");
    EXPECT_EQ(m["inputs"].size(), 2u);

    cli::RunConfig cfg;
    cfg.set_assignment("mcmc.burn_in=20");
    EXPECT_EQ(cfg.u64("mcmc.burn_in", 5), 20u);
    EXPECT_THROW(cfg.set_assignment("nodot=1"), UsageError);
    EXPECT_THROW(cfg.set_assignment("a.b"), UsageError);
}

class CliPipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root_ = test::scratch_dir("cli_pipeline");
        const auto r = run({"simulate", "--seed", "5", "--out", (root_ / "league").string(), "--set",
                            "simulate.n_teams=6", "--set", "simulate.games_per_team=60", "--set",
                            "simulate.truth=none", "--set",
                            "simulate.planted=T01C1:1:0;T02D1:0:-1;T03L1:1:0;T04R1:1:0;T05D1:0.8:-0.6"});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    static std::vector<std::string> data() {
        return {"--events", (root_ / "league" / "events.csv").string(), "--roster",
                (root_ / "league" / "roster.csv").string()};
    }
    static std::filesystem::path root_;
};
std::filesystem::path CliPipeline::root_;

TEST_F(CliPipeline, CompareRanksPlayersFirstOnHeldOutData) {
    auto args = std::vector<std::string>{"compare", "--out", (root_ / "compare").string(), "--set",
                                         "penalty.lambda=4"};
    for (auto& a : data()) args.push_back(a);
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(root_ / "compare" / "comparison.csv");
    std::map<std::string, double> oos;
    for (const auto& row : test::read_csv_rows(in)) oos[row[0]] = std::stod(row[3]);
    EXPECT_LT(oos["players"], oos["score"]);
}

TEST_F(CliPipeline, ManifestRerunIsByteIdenticalAcrossThreads) {
    for (const char* mode : {"mle", "mcmc"}) {
        const auto a = root_ / (std::string("fit_") + mode);
        auto args = std::vector<std::string>{"fit", "--threads", "1", "--out", a.string(), "--set",
                                             std::string("fit.mode=") + mode, "--set", "mcmc.n_chains=2",
                                             "--set", "mcmc.burn_in=50", "--set", "mcmc.draws_per_chain=250",
                                             "--set", "mcmc.thin=1"};
        for (auto& x : data()) args.push_back(x);
        const auto first = run(args);
        ASSERT_EQ(first.code, 0) << first.err;
        const auto inputs_before = slurp(root_ / "league" / "events.csv");
        const auto again = run({"rerun", "--manifest", (a / "manifest.json").string(), "--out",
                                (a.string() + "_rerun"), "--threads", "4", "--verify"});
        EXPECT_EQ(again.code, 0) << mode << ": " << again.err;
        EXPECT_EQ(slurp(a / "coefficients.csv"), slurp(a.string() + "_rerun/coefficients.csv"));
        EXPECT_EQ(slurp(root_ / "league" / "events.csv"), inputs_before);
    }
}

TEST_F(CliPipeline, RerunDetectsChangedInput) {
    const auto copy = root_ / "copy";
    std::filesystem::create_directories(copy);
    std::filesystem::copy_file(root_ / "league" / "events.csv", copy / "events.csv",
                               std::filesystem::copy_options::overwrite_existing);
    const auto a = root_ / "fit_changed";
    auto r = run({"summarize", "--events", (copy / "events.csv").string(), "--roster",
                  (root_ / "league" / "roster.csv").string(), "--out", a.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ofstream(copy / "events.csv", std::ios::app) << "\n";
    r = run({"rerun", "--manifest", (a / "manifest.json").string(), "--out", (a.string() + "_2"), "--verify"});
    EXPECT_EQ(r.code, 2);
}

}  // namespace
}  // namespace mesh
