#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(EIV_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  while (std::fgets(buf, sizeof(buf), pipe)) out += buf;
  const int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
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
    dir_ = fs::temp_directory_path() / ("eiv_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& leaf) const { return (dir_ / leaf).string(); }
  fs::path dir_;
};

const char* kSmall = "--set problem.d1=4 problem.d2=4 bench.n=300 lambda.c0=0.01";

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("bench --set problem.nope=1").code, 2);
  EXPECT_EQ(cli("bench --set problem.d1=-3").code, 2);
  EXPECT_EQ(cli("simulate --config " + path("absent.ini")).code, 2);
  EXPECT_EQ(cli("fit").code, 2);
  EXPECT_EQ(cli("--help").code, 0);
}

TEST_F(Cli, SimulateThenFit) {
  ASSERT_EQ(cli(std::string("simulate ") + kSmall + " --out " + path("data")).code, 0);
  EXPECT_TRUE(fs::exists(path("data/manifest.json")));
  const auto fit = cli(std::string("fit ") + kSmall + " --data " + path("data") + " --out " +
                       path("fit"));
  ASSERT_EQ(fit.code, 0);
  EXPECT_NE(fit.out.find("\"status\": \"ok\""), std::string::npos);
  EXPECT_TRUE(fs::exists(path("fit/theta_hat.csv")));
  EXPECT_TRUE(fs::exists(path("fit/trace.csv")));
  EXPECT_TRUE(fs::exists(path("fit/record.json")));
  // Fit needs exactly one family.
  EXPECT_EQ(cli(std::string("fit ") + kSmall + " penalty.families=scad,mcp --data " +
                path("data") + " --out " + path("fit2"))
                .code,
            2);
}

TEST_F(Cli, MissingDataIsIoError) {
  EXPECT_EQ(cli("fit --data " + path("nowhere") + " --out " + path("fit")).code, 4);
}

TEST_F(Cli, DivergenceIsNumericalError) {
  ASSERT_EQ(cli(std::string("simulate ") + kSmall + " --out " + path("data")).code, 0);
  const auto r = cli(std::string("fit ") + kSmall +
                     " lambda.policy=fixed lambda.lambda=0.01 lambda.omega=1e9 solver.v=0.001"
                     " --data " + path("data") + " --out " + path("fit"));
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(fs::exists(path("fit/record.json")));
}

TEST_F(Cli, BenchIsReproducibleAcrossJobCounts) {
  const std::string args = std::string("bench ") + kSmall +
                           " bench.n=200,400 bench.replications=3 --seed 9";
  ASSERT_EQ(cli(args + " --jobs 1 --out " + path("a")).code, 0);
  ASSERT_EQ(cli(args + " --jobs 3 --out " + path("b")).code, 0);
  const auto a = slurp(path("a/results.csv"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(path("b/results.csv")));
  EXPECT_EQ(slurp(path("a/summary.csv")), slurp(path("b/summary.csv")));
}

TEST_F(Cli, AuditWritesReport) {
  const auto r = cli(std::string("audit ") + kSmall +
                     " lambda.c0=1 noise.sigma_w=0 bench.n=500,2000 bench.replications=2"
                     " audit.trials=50 --out " + path("audit"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("violations 0"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("audit/audit.csv")));
  EXPECT_TRUE(fs::exists(path("audit/audit.json")));
}

TEST_F(Cli, AcceptSubset) {
  const auto r = cli("accept --only P1 P5");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("P1  PASS"), std::string::npos);
  EXPECT_NE(r.out.find("P5  PASS"), std::string::npos);
  EXPECT_EQ(r.out.find("P2"), std::string::npos);
}

}  // namespace
