#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cli.hpp"

using namespace scaledreg;
using json = nlohmann::json;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "scaledreg");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

const std::string kToyX = std::string(SCALEDREG_TOY_DIR) + "/X.csv";
const std::string kToyY = std::string(SCALEDREG_TOY_DIR) + "/y.csv";

} // namespace

TEST(Cli, FitOnToyData)
{
    const Outcome o = run_cli({"fit", "--x", kToyX, "--y", kToyY, "--lambda0", "auto-j2", "--penalty", "l1"});
    ASSERT_EQ(o.code, 0) << o.err;
    const json j = json::parse(o.out);
    EXPECT_EQ(j["schema"], 1);
    EXPECT_GT(j["sigma"].get<double>(), 0.0);
    EXPECT_EQ(j["provenance"]["command"], "fit");
    EXPECT_TRUE(j["converged"].get<bool>());
}

TEST(Cli, FitResultRoundTrips)
{
    const Outcome o = run_cli({"fit", "--x", kToyX, "--y", kToyY, "--penalty", "mcp", "--post-lse"});
    ASSERT_EQ(o.code, 0) << o.err;
    const json j = json::parse(o.out);
    const Dataset d = load_dataset(kToyX, kToyY);
    Vector beta = Vector::Zero(d.p());
    for (const auto& pair : j["beta"]) beta(pair[0].get<Index>()) = pair[1].get<double>();
    const double rn = (d.y() - d.x() * beta).norm();
    EXPECT_NEAR(rn, j["residual_norm"].get<double>(), 1e-10 * rn);
    EXPECT_TRUE(j.contains("post"));
    EXPECT_GT(j["gamma"].get<double>(), 1.0);
}

TEST(Cli, EstimatorsAndSubcommands)
{
    for (const char* est : {"pmle", "bc"})
        EXPECT_EQ(run_cli({"fit", "--x", kToyX, "--y", kToyY, "--estimator", est}).code, 0) << est;
    const Outcome path = run_cli({"path", "--x", kToyX, "--y", kToyY, "--grid-points", "20"});
    ASSERT_EQ(path.code, 0) << path.err;
    EXPECT_NE(path.out.find("lambda,df,residual_norm"), std::string::npos);
    const Outcome stab = run_cli({"stability", "--x", kToyX, "--y", kToyY, "--reps", "20"});
    ASSERT_EQ(stab.code, 0) << stab.err;
    EXPECT_TRUE(json::parse(stab.out).contains("selected"));
    const Outcome cv = run_cli({"cv", "--x", kToyX, "--y", kToyY, "--splits", "5", "--grid-points", "20"});
    ASSERT_EQ(cv.code, 0) << cv.err;
    EXPECT_GT(json::parse(cv.out)["lambda_cv"].get<double>(), 0.0);
}

TEST(Cli, SimulateSmoke)
{
    const Outcome o = run_cli({"simulate", "--design", "ex1", "--scale", "smoke", "--reps", "2", "--levels", "2",
                               "--estimators", "scaled-lasso", "--threads", "1"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_NE(o.out.find("scaled-lasso,2,2,0,"), std::string::npos) << o.out;
}

TEST(Cli, VerifySummaryLine)
{
    const Outcome o = run_cli({"verify", "--suite", "thm1", "--instances", "3", "--seed", "7", "--threads", "1"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_NE(o.out.find("violations=0"), std::string::npos);
}

TEST(Cli, ExitCodes)
{
    EXPECT_EQ(run_cli({"fit", "--x", kToyX, "--y", kToyY, "--bogus"}).code, 1);
    EXPECT_EQ(run_cli({}).code, 1);
    EXPECT_EQ(run_cli({"--version"}).code, 0);
    EXPECT_EQ(run_cli({"fit", "--x", "/nonexistent.csv", "--y", kToyY}).code, 1);
    EXPECT_EQ(run_cli({"fit", "--x", kToyX, "--y", kToyY, "--lambda0", "abc"}).code, 1);
    EXPECT_EQ(run_cli({"verify", "--suite", "thm9"}).code, 1);
    // a zero response puts sigma at its floor: numerical failure
    const std::string zero_y = ::testing::TempDir() + "/zero_y.csv";
    {
        std::ofstream f(zero_y);
        for (int i = 0; i < 40; ++i) f << "0\n";
    }
    const Outcome o = run_cli({"fit", "--x", kToyX, "--y", zero_y});
    EXPECT_EQ(o.code, 2) << o.err;
    EXPECT_NE(o.err.find("SigmaFloorHit"), std::string::npos);
}

TEST(Cli, DiagnosticIsOneLine)
{
    const Outcome o = run_cli({"fit", "--x", kToyX, "--y", kToyY, "--gamma", "x", "--penalty", "mcp"});
    EXPECT_EQ(o.code, 1);
    EXPECT_EQ(std::count(o.err.begin(), o.err.end(), '\n'), 1);
}
