#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(WF_CLI_PATH) + " " + args + " 2>/dev/null";
    RunResult res;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return res;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) res.out.append(buf, n);
    const int status = pclose(pipe);
    res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

class CliTest : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("wf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    // Two-factor panel with small deterministic noise; optionally duplicates
    // unit 0 into unit 1.
    std::string write_panel(const std::string& name, int n, int t, bool duplicate = false,
                            unsigned seed = 1) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g;
        std::vector<std::vector<double>> b(n, std::vector<double>(2)), f(t, std::vector<double>(2));
        for (auto& row : b) for (auto& v : row) v = 3.0 * g(rng);
        for (auto& row : f) for (auto& v : row) v = g(rng);
        const fs::path p = dir / name;
        std::ofstream out(p);
        out << "unit";
        for (int k = 0; k < t; ++k) out << ",t" << k;
        out << "\n";
        std::vector<std::vector<double>> x(n, std::vector<double>(t));
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < t; ++k) x[i][k] = b[i][0] * f[k][0] + b[i][1] * f[k][1] + g(rng);
        if (duplicate) x[1] = x[0];
        for (int i = 0; i < n; ++i) {
            out << "u" << i;
            for (int k = 0; k < t; ++k) out << "," << x[i][k];
            out << "\n";
        }
        // Factor file for the same periods: columns f1 and f2 plus noise.
        std::ofstream ff(dir / (name + ".factors.csv"));
        ff << "date,f1,noise\n";
        for (int k = 0; k < t; ++k) ff << "t" << k << "," << f[k][0] << "," << g(rng) << "\n";
        return p.string();
    }
};

}  // namespace

TEST_F(CliTest, EstimateEmitsJson) {
    const std::string panel = write_panel("p.csv", 12, 20);
    const RunResult r = run_cli("estimate --input " + panel + " --rank 2");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j.size(), 1u + 20u + 12u);
    EXPECT_EQ(j[0]["kind"], "singular_value");
    EXPECT_EQ(j[1]["label"], "t0");
    EXPECT_TRUE(j[0].contains("c2"));
}

TEST_F(CliTest, OutputExtensionSelectsFormat) {
    const std::string panel = write_panel("p.csv", 12, 20);
    const std::string csv = (dir / "out.csv").string();
    ASSERT_EQ(run_cli("scree --input " + panel + " --k 3 --output " + csv).code, 0);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "k,singular_value,eigenvalue");
    const std::string js = (dir / "out.json").string();
    ASSERT_EQ(run_cli("scree --input " + panel + " --k 3 --output " + js).code, 0);
    std::ifstream jin(js);
    EXPECT_EQ(nlohmann::json::parse(jin).size(), 3u);
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
    const std::string panel = write_panel("p.csv", 12, 20);
    const fs::path cfg = dir / "run.toml";
    std::ofstream(cfg) << "# comment\nrank = 3\nk = 4\n";
    const RunResult a = run_cli("scree --input " + panel + " --config " + cfg.string());
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(nlohmann::json::parse(a.out).size(), 4u);
    const RunResult b = run_cli("scree --input " + panel + " --config " + cfg.string() + " --k 2");
    ASSERT_EQ(b.code, 0);
    EXPECT_EQ(nlohmann::json::parse(b.out).size(), 2u);
}

TEST_F(CliTest, ExitCodes) {
    const std::string panel = write_panel("p.csv", 20, 30);
    EXPECT_EQ(run_cli("estimate --input " + panel + " --rank 40").code, 1);
    EXPECT_EQ(run_cli("estimate --input " + (dir / "missing.csv").string() + " --rank 1").code, 1);
    EXPECT_EQ(run_cli("estimate").code, 1);
    EXPECT_EQ(run_cli("bogus").code, 1);
    EXPECT_EQ(run_cli("--help").code, 0);
    const std::string dup = write_panel("dup.csv", 20, 30, true);
    EXPECT_EQ(run_cli("test-twosample --input " + dup + " --unit-i u0 --unit-j u1 --rank 2").code, 2);
}

TEST_F(CliTest, TestCommands) {
    const std::string panel = write_panel("p.csv", 30, 40);
    const std::string factors = panel + ".factors.csv";
    const RunResult tf =
        run_cli("test-factor --input " + panel + " --factor-series " + factors + " --subset 20:32 --rank 2");
    ASSERT_EQ(tf.code, 0);
    const auto j = nlohmann::json::parse(tf.out);
    ASSERT_EQ(j.size(), 2u);
    EXPECT_EQ(j[0]["label"], "f1");
    EXPECT_EQ(j[0]["df"], 10);
    EXPECT_EQ(j[1]["reject"], true);

    const RunResult ts = run_cli("test-twosample --input " + panel + " --unit-i u0 --unit-j 5 --rank 2");
    ASSERT_EQ(ts.code, 0);
    EXPECT_EQ(nlohmann::json::parse(ts.out)[0]["label"], "u0|u5");

    const std::string p2 = write_panel("q.csv", 30, 40, false, 1);
    const RunResult tb = run_cli("test-break --panel1 " + panel + " --panel2 " + p2 + " --unit u3 --rank 2");
    ASSERT_EQ(tb.code, 0);
    EXPECT_EQ(nlohmann::json::parse(tb.out)[0]["df"], 2);

    const RunResult ci = run_cli("ci-risk --input " + panel + " --rank 2 --unit u4");
    ASSERT_EQ(ci.code, 0);
    const auto cj = nlohmann::json::parse(ci.out);
    EXPECT_LT(cj[0]["lo"].get<double>(), cj[0]["hi"].get<double>());

    const RunResult cv = run_cli("cov --input " + panel + " --rank 2 --rule soft");
    ASSERT_EQ(cv.code, 0);
    EXPECT_EQ(nlohmann::json::parse(cv.out).size(), 30u);

    const RunResult ro = run_cli("rolling --input " + panel + " --factor-series " + factors +
                                 " --rank 2 --window 30 --subset-len 12 --stride 5");
    ASSERT_EQ(ro.code, 0);
    EXPECT_EQ(nlohmann::json::parse(ro.out).size(), 3u * 2u);
}

TEST_F(CliTest, SimulateIsDeterministicAcrossWorkers) {
    const std::string args =
        "simulate --experiment break-power --n-units 60 --n-periods 40 --blocks 4 --trials 6 --seed 11";
    const RunResult a = run_cli(args + " --workers 1");
    const RunResult b = run_cli(args + " --workers 8");
    const RunResult c = run_cli(args + " --workers 1");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out, c.out);
    const RunResult d = run_cli(
        "simulate --experiment twosample --n-units 60 --n-periods 40 --blocks 4 --trials 4 --pairs 0:1,0:2");
    ASSERT_EQ(d.code, 0);
    EXPECT_EQ(nlohmann::json::parse(d.out).size(), 2u);
    EXPECT_EQ(run_cli("simulate --experiment coverage --trials 0").code, 1);
}
