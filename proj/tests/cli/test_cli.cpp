#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(SHOTNOISE_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("shotnoise_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Cli, ZeroIntensityGivesZeroPath) {
  const auto out = scratch("zero");
  ASSERT_EQ(run("simulate -n 1 --lambda 0 -o " + out.string()), 0);
  std::ifstream f(out / "path_00000.csv");
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "t,X,dX,d2X");
  int rows = 0;
  while (std::getline(f, line)) {
    EXPECT_EQ(line.substr(line.find(',')), ",0,0,0");
    ++rows;
  }
  EXPECT_EQ(rows, 201);
  EXPECT_FALSE(fs::exists(out / "path_00001.csv"));
}

TEST(Cli, SameSeedSameBytesAcrossThreadCounts) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(run("simulate -n 4 --lambda 3 --seed 99 -j 1 -o " + a.string()), 0);
  ASSERT_EQ(run("simulate -n 4 --lambda 3 --seed 99 -j 3 -o " + b.string()), 0);
  for (int r = 0; r < 4; ++r) {
    const std::string f = "path_0000" + std::to_string(r) + ".csv";
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const auto c = scratch("det_c");
  ASSERT_EQ(run("simulate -n 1 --lambda 3 --seed 100 -o " + c.string()), 0);
  EXPECT_NE(slurp(a / "path_00000.csv"), slurp(c / "path_00000.csv"));
}

TEST(Cli, ManifestRecordsCertificatesAndConfig) {
  const auto out = scratch("manifest");
  ASSERT_EQ(run("simulate -n 2 --lambda 2 -s b=5 -o " + out.string()), 0);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["command"], "simulate");
  EXPECT_EQ(m["seed"], 2024);
  EXPECT_EQ(m["config"]["b"], "5");
  EXPECT_EQ(m["config"].size(), 26u);
  ASSERT_EQ(m["paths"].size(), 2u);
  for (const auto& p : m["paths"]) {
    ASSERT_EQ(p["truncation_certificate"].size(), 3u);
    for (const auto& c : p["truncation_certificate"]) EXPECT_LE(c.get<double>(), 1e-8);
  }
  EXPECT_TRUE(m.contains("version"));
  EXPECT_TRUE(m.contains("wall_seconds"));
}

TEST(Cli, UsageErrorsExitTwo) {
  const auto out = scratch("usage");
  EXPECT_EQ(run("simulate -k bogus:sigma=1 -o " + out.string()), 2);
  EXPECT_EQ(run("crossings -k bogus -o " + out.string()), 2);
  EXPECT_EQ(run("spectral -s no_such_key=1 -o " + out.string()), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("simulate --lambda -1 -o " + out.string()), 2);
}

TEST(Cli, ConfigFileAndOverrides) {
  const auto dir = scratch("cfgfile");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "run.cfg");
    f << "# test\nlambda = 4\nb = 3\nreplications = 1\n";
  }
  const auto out = dir / "out";
  ASSERT_EQ(run("simulate -c " + (dir / "run.cfg").string() + " --lambda 5 -o " + out.string()), 0);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["config"]["lambda"], "5");
  EXPECT_EQ(m["config"]["b"], "3");
  EXPECT_EQ(m["paths"].size(), 1u);
}

TEST(Cli, CrossingsEmitsCurveWithSe) {
  const auto out = scratch("cross");
  ASSERT_EQ(run("crossings -n 50 --lambda 2 -s level_count=9 -o " + out.string()), 0);
  const auto text = slurp(out / "crossings.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "alpha,C_mean,C_se,up_mean,down_mean,tangency_rate,replications");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_TRUE(m["results"]["rolle"]["pass"].get<bool>());
}

TEST(Cli, ScalespaceLambdaSweepCapped) {
  const auto out = scratch("scale");
  ASSERT_EQ(run("scalespace -n 20 -s lambda_grid=0.1,0.2,0.5,1,2,5,10 -s sigma_grid= -s rho_length=50 -o " +
                out.string()),
            0);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_TRUE(m["results"]["lambda_sweep"]["cap_2lambda_pass"].get<bool>());
  EXPECT_TRUE(m["results"]["semigroup_check"]["pass"].get<bool>());
  EXPECT_TRUE(fs::exists(out / "rho_lambda.csv"));
}

TEST(Cli, VerifySubsetWritesReport) {
  const auto out = scratch("verify");
  ASSERT_EQ(run("verify -s criteria=9,11 -o " + out.string()), 0);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  ASSERT_EQ(m["results"].size(), 2u);
  for (const auto& r : m["results"]) {
    EXPECT_TRUE(r["pass"].get<bool>());
    EXPECT_TRUE(r["attempted"].get<bool>());
  }
  EXPECT_EQ(m["profile"], "quick");
}
