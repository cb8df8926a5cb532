#include <fstream>
#include <iterator>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include <mfd/cli.hpp>
#include <mfd/point_cloud.hpp>

#include "helpers.hpp"

using namespace mfd;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run mfd_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string s(const std::filesystem::path& p) { return p.string(); }

// Noisy 300-point circle with its truth sibling, shared by the tests below.
void make_circle(const test::TempDir& dir) {
  auto r = mfd_run({"generate", "--kind", "circle", "--n", "300", "--noise-var", "0.1", "--seed", "1", "--out",
                    s(dir / "c.csv")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
}

}  // namespace

TEST(Cli, GenerateWritesCloudAndTruth) {
  test::TempDir dir("cli_gen");
  auto r = mfd_run({"generate", "--kind", "circle", "--n", "1000", "--noise-var", "0.1", "--seed", "1", "--out",
                    s(dir / "c.csv")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const Matrix x = load_matrix_csv(dir / "c.csv");
  EXPECT_EQ(x.rows(), 1000);
  EXPECT_EQ(x.cols(), 2);
  ASSERT_TRUE(std::filesystem::exists(dir / "c.truth.csv"));
  const Matrix truth = load_matrix_csv(dir / "c.truth.csv");
  EXPECT_NEAR(rmse(x, truth), std::sqrt(0.1), 0.02);

  auto echo = nlohmann::json::parse(r.out);
  EXPECT_EQ(echo["command"], "generate");
  EXPECT_EQ(echo["seed"], 1);
  EXPECT_EQ(echo["argv"].size(), 11u);
}

TEST(Cli, DenoiseReportsSixBands) {
  test::TempDir dir("cli_den");
  make_circle(dir);
  auto r = mfd_run({"denoise", "--in", s(dir / "c.csv"), "--k", "30", "--levels", "5", "--out", s(dir / "d.csv")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  auto out = load_matrix_csv(dir / "d.csv");
  EXPECT_EQ(out.rows(), 300);
  EXPECT_EQ(out.cols(), 2);

  auto report = nlohmann::json::parse(slurp(dir / "d.csv.bands.json"));
  ASSERT_EQ(report["bands"].size(), 2u);
  for (const auto& b : report["bands"]) {
    EXPECT_EQ(b["energies"].size(), 6u);
    EXPECT_EQ(b["retained"][0], 0);
  }
  EXPECT_EQ(report["config"]["denoise"]["cheb_order"], 20);
  EXPECT_LT(report["rmse_denoised"].get<double>(), report["rmse_input"].get<double>());
}

TEST(Cli, UsageErrors) {
  test::TempDir dir("cli_usage");
  make_circle(dir);
  auto k0 = mfd_run({"denoise", "--in", s(dir / "c.csv"), "--k", "0", "--out", s(dir / "d.csv")});
  EXPECT_EQ(k0.code, cli::kUsage);
  EXPECT_NE(k0.err.find("[1, 299]"), std::string::npos) << k0.err;
  EXPECT_FALSE(std::filesystem::exists(dir / "d.csv"));

  auto unknown = mfd_run({"denoise", "--in", s(dir / "c.csv"), "--bogus", "--out", s(dir / "d.csv")});
  EXPECT_EQ(unknown.code, cli::kUsage);
  EXPECT_NE(unknown.err.find("--bogus"), std::string::npos);

  auto missing = mfd_run({"denoise", "--in", s(dir / "nope.csv"), "--out", s(dir / "d.csv")});
  EXPECT_EQ(missing.code, cli::kUsage);
  EXPECT_NE(missing.err.find("nope.csv"), std::string::npos);

  EXPECT_EQ(mfd_run({}).code, cli::kUsage);
  EXPECT_EQ(mfd_run({"generate", "--kind", "torus", "--out", s(dir / "x.csv")}).code, cli::kUsage);
  EXPECT_EQ(mfd_run({"--replay", s(dir / "c.csv"), "generate", "--out", s(dir / "x.csv")}).code, cli::kUsage);
}

TEST(Cli, RuntimeFailureExitsTwo) {
  test::TempDir dir("cli_fail");
  std::ofstream(dir / "bad.csv") << "1,2\n3\n";
  auto r = mfd_run({"denoise", "--in", s(dir / "bad.csv"), "--k", "1", "--out", s(dir / "d.csv")});
  EXPECT_EQ(r.code, cli::kFailure);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, ByteIdenticalReruns) {
  test::TempDir dir("cli_det");
  for (const char* tag : {"a", "b"}) {
    const std::string out = s(dir / (std::string(tag) + ".csv"));
    ASSERT_EQ(mfd_run({"generate", "--kind", "helix", "--n", "250", "--noise-var", "0.01", "--seed", "4", "--out", out})
                  .code,
              0);
    ASSERT_EQ(mfd_run({"denoise", "--in", out, "--k", "12", "--out", s(dir / (std::string(tag) + ".d.csv"))}).code, 0);
  }
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_EQ(slurp(dir / "a.truth.csv"), slurp(dir / "b.truth.csv"));
  EXPECT_EQ(slurp(dir / "a.d.csv"), slurp(dir / "b.d.csv"));
}

TEST(Cli, ReplayReproducesOutputs) {
  test::TempDir dir("cli_replay");
  make_circle(dir);
  auto first = mfd_run({"denoise", "--in", s(dir / "c.csv"), "--k", "20", "--energy-threshold", "0.95", "--out",
                        s(dir / "d.csv")});
  ASSERT_EQ(first.code, 0) << first.err;
  const std::string before = slurp(dir / "d.csv");
  std::ofstream(dir / "echo.json") << first.out;
  std::filesystem::remove(dir / "d.csv");

  auto again = mfd_run({"--replay", s(dir / "echo.json")});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(slurp(dir / "d.csv"), before);

  // A report embedding the echo under "config" replays too.
  std::filesystem::remove(dir / "d.csv");
  ASSERT_EQ(mfd_run({"--replay", s(dir / "d.csv.bands.json")}).code, 0);
  EXPECT_EQ(slurp(dir / "d.csv"), before);
}

TEST(Cli, AnalyzeWritesTheoryReport) {
  test::TempDir dir("cli_ana");
  ASSERT_EQ(mfd_run({"generate", "--kind", "circle", "--n", "300", "--seed", "2", "--out", s(dir / "c.csv")}).code, 0);
  auto r = mfd_run({"analyze", "--in", s(dir / "c.csv"), "--tau", "1", "--trials", "40", "--out", s(dir / "t.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rep = nlohmann::json::parse(slurp(dir / "t.json"));
  ASSERT_EQ(rep["band_bounds"].size(), 2u);
  EXPECT_EQ(rep["band_bounds"][0]["scales"].size(), 5u);
  EXPECT_TRUE(rep["band_bounds"][0]["satisfied"].get<bool>());
  EXPECT_EQ(rep["neighbor_differences"]["violations"], 0);
  EXPECT_TRUE(rep.contains("noise_energy"));

  auto no_tau = mfd_run({"analyze", "--in", s(dir / "c.csv"), "--out", s(dir / "t.json")});
  EXPECT_EQ(no_tau.code, cli::kUsage);
}

TEST(Cli, SweepAndSpectrumCsv) {
  test::TempDir dir("cli_swp");
  make_circle(dir);
  auto sw = mfd_run({"sweep", "--in", s(dir / "c.csv"), "--k-values", "10,14", "--out", s(dir / "s.csv")});
  ASSERT_EQ(sw.code, 0) << sw.err;
  std::istringstream rows(slurp(dir / "s.csv"));
  std::string line;
  std::getline(rows, line);
  EXPECT_EQ(line, "k,rmse");
  std::getline(rows, line);
  EXPECT_EQ(line.rfind("10,", 0), 0u);
  std::getline(rows, line);
  EXPECT_EQ(line.rfind("14,", 0), 0u);

  auto sp = mfd_run({"spectrum", "--in", s(dir / "c.csv"), "--k", "20", "--out", s(dir / "e.csv"), "--coeffs",
                     s(dir / "coeffs.csv")});
  ASSERT_EQ(sp.code, 0) << sp.err;
  std::istringstream e(slurp(dir / "e.csv"));
  std::getline(e, line);
  EXPECT_EQ(line, "dimension,band,scale,energy,fraction");
  std::size_t n = 0;
  while (std::getline(e, line)) ++n;
  EXPECT_EQ(n, 12u);  // 2 dimensions x 6 bands
  EXPECT_TRUE(std::filesystem::exists(dir / "coeffs.csv"));
}
