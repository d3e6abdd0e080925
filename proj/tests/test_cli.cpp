#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
};

Outcome run_cli(const std::string& args) {
    std::string cmd = std::string(WILDSCALAR_CLI_PATH) + " " + args + " 2>&1";
    Outcome o;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return o;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) o.out.append(buf, n);
    int st = pclose(p);
    o.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("wildscalar_cli_" + name);
    fs::remove_all(d);
    return d;
}

}

TEST(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(run_cli("--help").code, 0);
    EXPECT_EQ(run_cli("integrate --help").code, 0);
    EXPECT_EQ(run_cli("").code, 2);
    EXPECT_EQ(run_cli("integrate --no-such-flag").code, 2);
    EXPECT_EQ(run_cli("frobnicate").code, 2);
    Outcome eta = run_cli("integrate --eta 0.25");
    EXPECT_EQ(eta.code, 2);
    EXPECT_NE(eta.out.find("eta"), std::string::npos);
    EXPECT_EQ(run_cli("integrate --config /nonexistent/run.cfg").code, 2);
    EXPECT_EQ(run_cli("verify --input /nonexistent/field.wsf1").code, 2);
    EXPECT_EQ(run_cli("symbol-check --name nope").code, 2);
}

TEST(Cli, SymbolCheck) {
    Outcome ok = run_cli("symbol-check --name pm2d");
    EXPECT_EQ(ok.code, 0) << ok.out;
    EXPECT_NE(ok.out.find("even: true"), std::string::npos);
    Outcome sqg = run_cli("symbol-check --name sqg");
    EXPECT_EQ(sqg.code, 1);
    EXPECT_NE(sqg.out.find("even: false"), std::string::npos);
    fs::path d = scratch("sym");
    EXPECT_EQ(run_cli("symbol-check --name pm3d --out " + d.string()).code, 0);
    EXPECT_TRUE(fs::exists(d / "symbol_check.csv"));
    fs::remove_all(d);
}

TEST(Cli, WaveBuildAndT4Solve) {
    fs::path d = scratch("wave");
    Outcome w = run_cli("wave-build --out " + d.string());
    EXPECT_EQ(w.code, 0) << w.out;
    for (const char* f : {"wave.csv", "checks.csv", "wave.wsf1"}) EXPECT_TRUE(fs::exists(d / f)) << f;
    Outcome v = run_cli("verify --input " + (d / "wave.wsf1").string());
    EXPECT_EQ(v.code, 0) << v.out;

    Outcome t = run_cli("t4-solve --samples 20 --out " + d.string());
    EXPECT_EQ(t.code, 0) << t.out;
    EXPECT_TRUE(fs::exists(d / "t4.csv"));
    EXPECT_EQ(run_cli("t4-solve --state 1,2,3").code, 2);
    fs::remove_all(d);
}

TEST(Cli, IntegrateVerifyAndDeterminism) {
    fs::path a = scratch("int_a"), b = scratch("int_b");
    const std::string common = " --grid 32x16 --stages 1 --seed 3 --config " + std::string(WILDSCALAR_CONFIG_DIR) + "/run.cfg";
    Outcome ra = run_cli("integrate" + common + " --out " + a.string());
    ASSERT_EQ(ra.code, 0) << ra.out;
    for (const char* f : {"field.wsf1", "stages.csv", "checks.csv", "summary.txt"}) EXPECT_TRUE(fs::exists(a / f)) << f;
    Outcome rb = run_cli("integrate" + common + " --out " + b.string());
    ASSERT_EQ(rb.code, 0) << rb.out;
    EXPECT_EQ(slurp(a / "checks.csv"), slurp(b / "checks.csv"));
    EXPECT_EQ(slurp(a / "field.wsf1"), slurp(b / "field.wsf1"));
    // wall time is the only column allowed to differ; stages.csv omits it
    EXPECT_EQ(slurp(a / "stages.csv"), slurp(b / "stages.csv"));

    Outcome v = run_cli("verify --input " + (a / "field.wsf1").string() + " --out " + a.string());
    EXPECT_EQ(v.code, 0) << v.out;
    EXPECT_TRUE(fs::exists(a / "verify.csv"));
    EXPECT_EQ(run_cli("verify --input " + (a / "field.wsf1").string() + " --symbol pm3d").code, 2);
    fs::remove_all(a);
    fs::remove_all(b);
}
