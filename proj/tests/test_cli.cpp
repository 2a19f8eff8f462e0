#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace fs = std::filesystem;
using sccovert::cli::run;

namespace {

const std::string kTable1 = std::string(SCCOVERT_TEST_DATA) + "/table1.cfg";

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "sccovert");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sccovert_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Cli, HelpAndUsage) {
  EXPECT_EQ(invoke({"--help"}).code, 0);
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"analyze"}).code, 2);
  EXPECT_EQ(invoke({"analyze", kTable1, "--bogus"}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
}

TEST(Cli, MissingConfigIsUsageError) {
  const auto r = invoke({"analyze", "/nonexistent/x.cfg"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("x.cfg"), std::string::npos);
}

TEST(Cli, BadConfigReportsLine) {
  const fs::path dir = scratch("badcfg");
  std::ofstream(dir / "bad.cfg") << "[converter]\nr_switch = 1\nwhat = 2\n";
  const auto r = invoke({"analyze", (dir / "bad.cfg").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bad.cfg:3"), std::string::npos) << r.err;
}

TEST(Cli, AnalyzePrintsReferenceMatrix) {
  const fs::path dir = scratch("analyze");
  const auto r = invoke({"--out", dir.string(), "analyze", kTable1});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* v : {"210", "215", "220", "closed-form check: PASS"})
    EXPECT_NE(r.out.find(v), std::string::npos) << v << "\n" << r.out;
  EXPECT_TRUE(fs::exists(dir / "r_fsl.csv"));
  EXPECT_EQ(slurp(dir / "r_fsl.csv").substr(0, 14), "row,c1,c2,c3\nr");
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const fs::path dir = scratch("same");
  const std::vector<std::string> args{"--out", dir.string(), "extract", kTable1, "--freq", "2M"};
  const auto ra = invoke(args);
  ASSERT_EQ(ra.code, 0) << ra.err;
  const std::string csv = slurp(dir / "r_extracted.csv"), json = slurp(dir / "r_extracted.json");
  const auto rb = invoke(args);
  EXPECT_EQ(ra.out, rb.out);
  EXPECT_EQ(csv, slurp(dir / "r_extracted.csv"));
  EXPECT_EQ(json, slurp(dir / "r_extracted.json"));
}

TEST(Cli, ExtractWritesMatrixAndSidecar) {
  const fs::path dir = scratch("extract");
  const auto r = invoke({"--out", dir.string(), "--jobs", "3", "extract", kTable1});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "r_extracted.csv"));
  const std::string json = slurp(dir / "r_extracted.json");
  EXPECT_NE(json.find("\"mode\": \"current\""), std::string::npos) << json;
  EXPECT_NE(json.find("\"f_sw_hz\""), std::string::npos);
}

TEST(Cli, NonConvergenceExitCode) {
  const fs::path dir = scratch("noconv");
  std::ofstream(dir / "tight.cfg") << "[simulation]\nmax_periods = 3\ntolerance = 1e-18\n";
  const auto r = invoke({"--out", dir.string(), "extract", (dir / "tight.cfg").string()});
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST(Cli, TransientTrace) {
  const fs::path dir = scratch("transient");
  const auto r = invoke({"--out", dir.string(), "transient", kTable1, "--duration", "1u", "--loads", "100,open,1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir / "trace.csv");
  EXPECT_EQ(csv.substr(0, 7), "time_s,");
  EXPECT_EQ(invoke({"transient", kTable1, "--duration", "1u", "--loads", "100,100"}).code, 2);
}

TEST(Cli, CovertTransmitDecodesPattern) {
  const fs::path dir = scratch("covert");
  const auto r = invoke({"--out", dir.string(), "covert", kTable1, "--source", "2", "--sinks", "1,3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("source = 2"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "report.txt"));
  EXPECT_TRUE(fs::exists(dir / "resolved.cfg"));
  EXPECT_NE(slurp(dir / "report.txt").find("bit errors:   0"), std::string::npos) << slurp(dir / "report.txt");
  EXPECT_EQ(invoke({"covert", kTable1, "--source", "2", "--sinks", "2"}).code, 2);
}

TEST(Cli, CovertOffchipSweep) {
  const fs::path dir = scratch("offchip");
  const auto r = invoke({"--out", dir.string(), "covert", kTable1, "--sweep", "offchip", "--values", "0,50m,100m"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "sweep_offchip.csv").rfind("sweep_value,node,delta_v_volts\n", 0), 0u);
}
