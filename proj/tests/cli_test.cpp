#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "memweave/analytic.hpp"
#include "support.hpp"

using testing_support::TempDir;

namespace {

struct Result {
  int exit_code;
  std::string out;
};

Result run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + MEMWEAVE_CLI_PATH + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  std::string out;
  std::array<char, 4096> buf{};
  while (auto n = fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string golden(const std::string& name) {
  std::ifstream in(std::string(MEMWEAVE_GOLDEN_DIR) + "/" + name, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(Cli, PredictDramOnly) {
  const auto r = run_cli("predict --mix 1r0w --weights 1,0");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(first_line(r.out), "556.00 GB/s");
}

TEST(Cli, PredictInvalidWeights) {
  EXPECT_EQ(run_cli("predict --mix 1r0w --weights 0,0").exit_code, 1);
  EXPECT_EQ(run_cli("predict --mix 1r0w --weights 3,x").exit_code, 1);
  EXPECT_EQ(run_cli("predict --mix 3q --weights 3,1").exit_code, 1);
  EXPECT_EQ(run_cli("predict --mix 1r3w --weights 3,1").exit_code, 1);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli("").exit_code, 1);
  EXPECT_EQ(run_cli("frobnicate").exit_code, 1);
  EXPECT_EQ(run_cli("predict --mix 1r0w --weights 1,0 --bogus").exit_code, 1);
  EXPECT_EQ(run_cli("predict --mix 1r0w").exit_code, 1);
  EXPECT_EQ(run_cli("--help").exit_code, 0);
}

// Printed values equal the library result at the printed precision.
TEST(Cli, PredictRoundTrip) {
  const auto set = testing_support::bundled_profiles();
  for (const char* w : {"1,1", "2,1", "5,2", "3,1", "4,1"}) {
    for (const char* m : {"1r0w", "2r1w", "1r1w", "2r1wnt"}) {
      const auto r = run_cli(std::string("predict --mix ") + m + " --weights " + w);
      ASSERT_EQ(r.exit_code, 0);
      const double lib = memweave::predict_bandwidth(set, memweave::parse_weights(w),
                                                     memweave::parse_mix(m))
                             .aggregate_gbps;
      EXPECT_EQ(first_line(r.out), fmt::format("{:.2f} GB/s", lib));
      const auto j = nlohmann::json::parse(
          run_cli(std::string("--format json predict --mix ") + m + " --weights " + w).out);
      EXPECT_EQ(j["aggregate_gbps"].get<double>(), lib);
    }
  }
}

TEST(Cli, JsonGoldenFiles) {
  EXPECT_EQ(run_cli("predict --mix 1r0w --weights 3,1 --format json").out,
            golden("predict_1r0w_3_1.json"));
  EXPECT_EQ(run_cli("predict --mix 2r1wnt --weights 1,0 --format json").out,
            golden("predict_2r1wnt_1_0.json"));
  EXPECT_EQ(run_cli("recommend --mix 1r1w --max-weight 6 --format json").out,
            golden("recommend_1r1w_k6.json"));
  EXPECT_EQ(run_cli("simulate --mix 2r1w --weights 5,2 --streams 8 --outstanding 8 --measured 2000 "
                    "--seed 7 --format json")
                .out,
            golden("simulate_2r1w_5_2_small.json"));
}

TEST(Cli, Recommend) {
  const auto r = run_cli("recommend --mix 1r0w --max-weight 6");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(first_line(r.out), "weights: 3,1");
  EXPECT_NE(r.out.find("741.33 GB/s"), std::string::npos);

  const auto d = run_cli("recommend --mix 1r0w --demand 1");
  EXPECT_EQ(d.exit_code, 0);
  EXPECT_EQ(first_line(d.out), "weights: 1,0");
}

TEST(Cli, InfeasibleDemandExitsTwo) {
  EXPECT_EQ(run_cli("recommend --mix 1r0w --demand 800").exit_code, 2);
  EXPECT_EQ(run_cli("recommend --mix 1r0w --demand -5").exit_code, 1);
}

TEST(Cli, ProfileOverride) {
  TempDir dir("cli_profile");
  const auto path = dir.write(
      "p.json",
      R"({"tiers":[{"name":"a","kind":"dram","unloaded_latency_ns":90,"points":[{"reads":1,"writes":0,"write_kind":"regular","gbps":300}]},
                   {"name":"b","kind":"cxl","unloaded_latency_ns":200,"points":[{"reads":1,"writes":0,"write_kind":"regular","gbps":100}]}]})");
  EXPECT_EQ(first_line(run_cli("predict --mix 1r0w --weights 1,0", "MEMWEAVE_PROFILE=" + path.string()).out),
            "300.00 GB/s");
  EXPECT_EQ(first_line(run_cli("--profile " + path.string() + " predict --mix 1r0w --weights 3,1").out),
            "400.00 GB/s");
  EXPECT_EQ(run_cli("profiles validate " + path.string()).exit_code, 0);

  const auto bad = dir.write("bad.json", R"({"tiers":[]})");
  EXPECT_EQ(run_cli("profiles validate " + bad.string()).exit_code, 1);
  EXPECT_EQ(run_cli("profiles validate " + (dir.path() / "nope.json").string()).exit_code, 1);
}

TEST(Cli, SimulateDeterministicJson) {
  const std::string args =
      "simulate --mix 1r0w --weights 3,1 --streams 16 --outstanding 16 --measured 20000 --format json";
  const auto a = run_cli(args + " --seed 5");
  const auto b = run_cli(args + " --seed 5");
  const auto c = run_cli(args + " --seed 6");
  EXPECT_EQ(a.exit_code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
}

TEST(Cli, CsvFormats) {
  const auto p = run_cli("predict --mix 1r0w --weights 3,1 --format csv");
  EXPECT_EQ(p.out, "mix,weights,aggregate_gbps,bottleneck\n1r0w,\"3,1\",741.3333,dram\n");
  const auto s = run_cli("simulate --mix 1r0w --weights 1,0 --measured 1000 --format csv");
  EXPECT_EQ(first_line(s.out), "label,achieved_gbps,mean_ns,p50_ns,p95_ns,p99_ns,util_tier0,util_tier1");
}

TEST(Cli, Allocate) {
  const auto r = run_cli("allocate --pages 4 --weights 3,1");
  EXPECT_EQ(r.out, "page_index,tier_index\n0,0\n1,0\n2,0\n3,1\n");
}

TEST(Cli, Report) {
  const auto r = run_cli("report");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("best: 5,2 -> 1.27"), std::string::npos);
  EXPECT_NE(r.out.find("geometric mean of best speedups: 1.23"), std::string::npos);
  EXPECT_NE(r.out.find("24%"), std::string::npos);
  const auto j = nlohmann::json::parse(run_cli("report --format json").out);
  EXPECT_NEAR(j["geomean_best_speedup"].get<double>(), 1.2345, 5e-4);
}

TEST(Cli, SweepWritesCurves) {
  TempDir dir("cli_sweep");
  const auto r = run_cli("sweep --mix 1r0w --weights-list 1,0 3,1 --concurrency-list 1 8 64 --streams 16 "
                         "--measured 5000 --out " + dir.path().string());
  EXPECT_EQ(r.exit_code, 0);
  for (const char* f : {"sweep.csv", "sim_curve.csv", "sim_curve.svg", "analytic_curve.csv",
                        "analytic_curve.svg"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / f)) << f;
  }
  std::ifstream in(dir.path() / "analytic_curve.csv");
  std::ostringstream s;
  s << in.rdbuf();
  EXPECT_NE(s.str().find("\"(9,1)\""), std::string::npos);
  EXPECT_NE(s.str().find("\"(3,1)\""), std::string::npos);
}
