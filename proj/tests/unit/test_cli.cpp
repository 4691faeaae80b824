#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "ltviqc/cli.hpp"
#include "ltviqc/robot2link.hpp"

using namespace ltviqc;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "ltviqc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ltviqc_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Json read_json(const fs::path& p) const {
    std::ifstream f(p);
    return Json::parse(f);
  }

  static Json without_timing(Json results) {
    for (auto& r : results["results"]) r.erase("wall_time");
    return results;
  }

  fs::path dir_;
};

}  // namespace

TEST(ParseSweep, SingleValueAndRange) {
  EXPECT_EQ(cli::parse_sweep("0.3"), std::vector<double>{0.3});
  const auto s = cli::parse_sweep("0.05:0.4:0.05");
  ASSERT_EQ(s.size(), 8u);
  EXPECT_EQ(s.front(), 0.05);
  EXPECT_EQ(s[2], 0.15);
  EXPECT_EQ(s.back(), 0.4);
  EXPECT_EQ(cli::parse_sweep("1:2:0.3").size(), 4u);
}

TEST(ParseSweep, Errors) {
  EXPECT_THROW(cli::parse_sweep(""), std::invalid_argument);
  EXPECT_THROW(cli::parse_sweep("abc"), std::invalid_argument);
  EXPECT_THROW(cli::parse_sweep("1:2"), std::invalid_argument);
  EXPECT_THROW(cli::parse_sweep("1:2:0"), std::invalid_argument);
  EXPECT_THROW(cli::parse_sweep("2:1:0.1"), std::invalid_argument);
  EXPECT_THROW(cli::parse_sweep("0.1x"), std::invalid_argument);
}

TEST(ParseList, Values) {
  EXPECT_EQ(cli::parse_list("1,2.5,-3"), (std::vector<double>{1, 2.5, -3}));
  EXPECT_THROW(cli::parse_list("1,,2"), std::invalid_argument);
}

TEST(ExpandInstances, Validation) {
  cli::AnalysisConfig c;
  EXPECT_THROW(cli::expand_instances(c), std::invalid_argument);  // neither problem nor benchmark
  c.benchmark = "robot2link";
  EXPECT_THROW(cli::expand_instances(c), std::invalid_argument);  // beta missing
  c.beta = "0.1:0.3:0.1";
  const auto inst = cli::expand_instances(c);
  ASSERT_EQ(inst.size(), 3u);
  EXPECT_EQ(inst[0].key, "000");
  EXPECT_EQ(inst[2].description, "robot2link full beta=0.3");
  c.structure = "diagonal";
  EXPECT_THROW(cli::expand_instances(c), std::invalid_argument);  // diagonal needs beta1/beta2
  c.beta.clear();
  c.beta1 = "0.05";
  c.beta2 = "0.8";
  EXPECT_EQ(cli::expand_instances(c).size(), 1u);
  c.problem_path = "x.json";
  EXPECT_THROW(cli::expand_instances(c), std::invalid_argument);  // both sources
}

TEST_F(CliTest, BadArgumentsExitOne) {
  EXPECT_EQ(run({"analyze", "--benchmark", "nope"}).code, cli::kBadInput);
  EXPECT_EQ(run({"analyze", "--benchmark", "robot2link", "--beta", "x", "--out", dir_.string()}).code, cli::kBadInput);
  EXPECT_EQ(run({"rde", "--benchmark", "scalar"}).code, cli::kBadInput);  // --lambda missing
  EXPECT_EQ(run({"rde", "--benchmark", "scalar", "--lambda", "-1", "--out", dir_.string()}).code, cli::kBadInput);
  EXPECT_EQ(run({"rde", "--benchmark", "scalar", "--lambda", "1,2", "--out", dir_.string()}).code, cli::kBadInput);
  // lambda = 0 leaves R = 0, which is not negative definite.
  EXPECT_EQ(run({"rde", "--benchmark", "scalar", "--lambda", "0", "--out", dir_.string()}).code, cli::kBadInput);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kBadInput);
}

TEST_F(CliTest, MalformedProblemFileExitsOne) {
  fs::create_directories(dir_);
  std::ofstream(dir_ / "bad.json") << "{\"format\": \"ltviqc-problem\"}";
  const CliRun r = run({"analyze", "--problem", (dir_ / "bad.json").string(), "--out", dir_.string()});
  EXPECT_EQ(r.code, cli::kBadInput);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST_F(CliTest, RdeSolvedAndEscaped) {
  CliRun r = run({"rde", "--benchmark", "scalar", "--lambda", "1", "--dump-y", "--out", dir_.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  Json j = read_json(dir_ / "rde.json");
  EXPECT_EQ(j["status"], "solved");
  const AnalysisProblem p = scalar_benchmark(0.5);
  const double J = eval_j(solve_rde_backward(p.system, p.qsr, VectorXd::Ones(1), MatrixXd::Zero(2, 2)));
  EXPECT_EQ(j["J"].get<double>(), J);
  EXPECT_TRUE(fs::exists(dir_ / "Y.json"));
  EXPECT_TRUE(fs::exists(dir_ / "Y.csv"));

  r = run({"rde", "--benchmark", "scalar", "--lambda", "0.1", "--out", dir_.string()});
  EXPECT_EQ(r.code, cli::kEscaped);
  j = read_json(dir_ / "rde.json");
  EXPECT_EQ(j["status"], "escaped");
  EXPECT_TRUE(j["J"].is_null());
}

TEST_F(CliTest, AnalyzeMatchesLibraryBitForBit) {
  const CliRun r = run({"analyze", "--benchmark", "robot2link", "--structure", "diagonal", "--beta1", "0.05", "--beta2",
                     "0.8", "--out", dir_.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const Json j = read_json(dir_ / "results.json");
  ASSERT_EQ(j["results"].size(), 1u);
  const Json& row = j["results"][0];

  const MinimizeResult lib = optimize_multipliers(robot::build_analysis_problem(robot::Diagonal{0.05, 0.8}));
  EXPECT_EQ(row["J"].get<double>(), lib.J);
  EXPECT_EQ(row["lambda"][0].get<double>(), lib.lambda(0));
  EXPECT_EQ(row["lambda"][1].get<double>(), lib.lambda(1));
  EXPECT_EQ(row["iterations"].get<int>(), lib.iterations);
  EXPECT_EQ(row["status"], "converged");
  EXPECT_TRUE(fs::exists(dir_ / "iterations.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "witness.csv"));
}

TEST_F(CliTest, JobsDoNotChangeResults) {
  const std::vector<std::string> base{"analyze", "--benchmark", "robot2link", "--beta", "0.1:0.3:0.05"};
  auto with = [&](const std::string& jobs, const fs::path& out) {
    auto a = base;
    a.insert(a.end(), {"--jobs", jobs, "--out", out.string()});
    return run(a);
  };
  ASSERT_EQ(with("1", dir_ / "serial").code, cli::kOk);
  ASSERT_EQ(with("3", dir_ / "parallel").code, cli::kOk);
  const Json a = without_timing(read_json(dir_ / "serial" / "results.json"));
  const Json b = without_timing(read_json(dir_ / "parallel" / "results.json"));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a["results"].size(), 5u);
  EXPECT_TRUE(fs::exists(dir_ / "parallel" / "iterations_004.csv"));
}

TEST_F(CliTest, ExportThenAnalyzeFile) {
  ASSERT_EQ(run({"export", "--benchmark", "scalar", "--out", dir_.string()}).code, cli::kOk);
  ASSERT_TRUE(fs::exists(dir_ / "problem.json"));
  const CliRun r = run({"analyze", "--problem", (dir_ / "problem.json").string(), "--out", (dir_ / "a").string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const CliRun s = run({"analyze", "--benchmark", "scalar", "--out", (dir_ / "b").string()});
  ASSERT_EQ(s.code, cli::kOk) << s.err;
  EXPECT_EQ(read_json(dir_ / "a" / "results.json")["results"][0]["J"],
            read_json(dir_ / "b" / "results.json")["results"][0]["J"]);
}

TEST_F(CliTest, NotCertifiedExitsTwo) {
  const CliRun r = run({"analyze", "--benchmark", "scalar", "--max-iter", "2", "--out", dir_.string()});
  EXPECT_EQ(r.code, cli::kNotCertified);
  const Json j = read_json(dir_ / "results.json");
  EXPECT_NE(j["results"][0]["status"], "converged");
}

TEST_F(CliTest, Help) {
  const CliRun r = run({"--help"});
  EXPECT_EQ(r.code, cli::kOk);
  EXPECT_NE(r.out.find("analyze"), std::string::npos);
}
