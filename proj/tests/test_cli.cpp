#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

const fs::path kData = SELC_DATA_DIR;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("selc_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  /// Runs the tool with `args`; stdout lands in `out_`, stderr in `err_`.
  int run(const std::string& args) {
    const auto out = dir_ / "stdout.txt";
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + SELC_EXE + "\" " + args + " >\"" + out.string() +
                            "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    out_ = read_file(out);
    err_ = read_file(err);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  std::string out_;
  std::string err_;
};

TEST_F(Cli, RejectOnExplicitAtoms) {
  ASSERT_EQ(run("reject --type bounded-coverage --omega 0.75 --atoms 0.1:0.5,0.3:0.5"), 0) << err_;
  EXPECT_EQ(out_,
            "model bounded-coverage\nomega 0.75\nthreshold 0.3\naccept_prob 0.5\ncoverage 0.75\n"
            "selective_risk 0.16666666666666666\n");
}

TEST_F(Cli, RejectCostReportsExpectedCost) {
  ASSERT_EQ(run("reject --type cost --epsilon 0.2 --atoms 0.1:0.5,0.3:0.5"), 0) << err_;
  EXPECT_NE(out_.find("coverage 0.5\n"), std::string::npos) << out_;
  EXPECT_NE(out_.find("expected_cost 0.15000000000000002\n"), std::string::npos) << out_;
}

TEST_F(Cli, RejectInfeasibleTargetIsReported) {
  ASSERT_EQ(run("reject --type bounded-improvement --lambda 0.05 --atoms 0.1:0.5,0.3:0.5"), 0) << err_;
  EXPECT_NE(out_.find("status infeasible-target\n"), std::string::npos) << out_;
  EXPECT_NE(out_.find("selective_risk undefined\n"), std::string::npos) << out_;
}

TEST_F(Cli, EvalOnOrderedPairs) {
  write_file(path("pairs.csv"), "score,loss\n0.1,0\n0.2,0\n0.9,100\n");
  ASSERT_EQ(run("eval --pairs " + path("pairs.csv") + " --curve " + path("curve.csv")), 0) << err_;
  EXPECT_EQ(out_, "samples 3\naurc 11.111111111111112\nr_at_90 33.333333333333336\nr_at_100 33.333333333333336\n");
  const auto curve = read_file(path("curve.csv"));
  EXPECT_EQ(curve.rfind("# selc ", 0), 0u);
  EXPECT_NE(curve.find("coverage,selective_risk,threshold\n"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("train --data " + (kData / "synth_blobs.csv").string() + " --C-grid 1,-3"), 2);
  EXPECT_EQ(run("reject --type cost --atoms 0.1:1"), 2);  // missing --epsilon
  EXPECT_EQ(run("no-such-command"), 2);

  write_file(path("bad.libsvm"), "1 1:0.5\n2 x:1\n");
  EXPECT_EQ(run("inspect " + path("bad.libsvm")), 3);
  EXPECT_NE(err_.find("parse error"), std::string::npos) << err_;

  write_file(path("pairs.csv"), "score,loss\n0.1,0\nnope\n");
  EXPECT_EQ(run("eval --pairs " + path("pairs.csv")), 3);

  EXPECT_EQ(run("inspect " + path("missing.csv")), 5);
  EXPECT_EQ(run("eval --pairs " + path("missing.csv")), 5);
}

TEST_F(Cli, InspectDataset) {
  ASSERT_EQ(run("inspect " + (kData / "synth_binary.libsvm").string()), 0) << err_;
  EXPECT_NE(out_.find("samples 1500\n"), std::string::npos) << out_;
  EXPECT_NE(out_.find("storage sparse\n"), std::string::npos) << out_;
  EXPECT_NE(out_.find("labels 2\n"), std::string::npos) << out_;
}

TEST_F(Cli, TrainScoreEvalRoundTrip) {
  const std::string data = "--manifest " + (kData / "synth_binary.json").string();
  ASSERT_EQ(run("train " + data + " --model SVM --C-grid 1,10 --out " + path("m1.txt") + " --report " +
                path("r1.txt")),
            0)
      << err_;
  EXPECT_NE(out_.find("chosen C="), std::string::npos);
  ASSERT_EQ(run("train " + data + " --model SVM --C-grid 1,10 --out " + path("m2.txt")), 0) << err_;
  EXPECT_EQ(read_file(path("m1.txt")), read_file(path("m2.txt")));

  ASSERT_EQ(run("inspect " + path("m1.txt")), 0) << err_;
  EXPECT_NE(out_.find("model BinarySVM\n"), std::string::npos) << out_;
  EXPECT_NE(out_.find("normalizer yes\n"), std::string::npos) << out_;

  ASSERT_EQ(run("score " + data + " --model " + path("m1.txt") + " --method REG --C-grid 0,1 --out " +
                path("s.txt")),
            0)
      << err_;
  ASSERT_EQ(run("inspect " + path("s.txt")), 0) << err_;
  EXPECT_NE(out_.find("score REG\n"), std::string::npos) << out_;

  ASSERT_EQ(run("eval " + data + " --model " + path("m1.txt") + " --score " + path("s.txt")), 0) << err_;
  EXPECT_EQ(out_.rfind("samples 300\naurc ", 0), 0u) << out_;

  // A different seed changes the splits and therefore the provenance line.
  ASSERT_EQ(run("--seed 9 train " + data + " --model SVM --C-grid 1 --out " + path("m3.txt")), 0) << err_;
  EXPECT_NE(read_file(path("m3.txt")).find("seed=9 "), std::string::npos);
}

TEST_F(Cli, ScoreRejectsMismatchedMethod) {
  const std::string data = "--manifest " + (kData / "synth_binary.json").string();
  ASSERT_EQ(run("train " + data + " --model SVM --C-grid 1 --out " + path("m.txt")), 0) << err_;
  EXPECT_EQ(run("score " + data + " --model " + path("m.txt") + " --method TCP"), 2);
}

TEST_F(Cli, BenchWritesOutputs) {
  write_file(path("bench.conf"),
             "# tiny run\n"
             "datasets = " + (kData / "synth_binary.json").string() + ", " +
                 (kData / "synth_blobs.json").string() + "\n"
             "model = LR\n"
             "methods = MCP, REG, TCP\n"
             "classifier_grid = 1\n"
             "score_grid = 1\n"
             "replicates = 1\n"
             "seed = 3\n"
             "output_dir = out\n");
  ASSERT_EQ(run("bench --config " + path("bench.conf")), 0) << err_;
  const auto csv = read_file(path("out/results.csv"));
  EXPECT_EQ(csv.rfind("# selc ", 0), 0u);
  EXPECT_NE(csv.find("synth_blobs"), std::string::npos);
  EXPECT_NE(read_file(path("out/summary.txt")).find("TCP"), std::string::npos);
  EXPECT_EQ(read_file(path("out/summary.json")).rfind("{\n  \"provenance\": \"selc ", 0), 0u);
}

TEST_F(Cli, BenchConfigErrors) {
  write_file(path("a.conf"), "datasets = x.json\nmethods = MCP\nbogus = 1\n");
  EXPECT_EQ(run("bench --config " + path("a.conf")), 2);
  write_file(path("b.conf"), "datasets = x.json\nmethods = MCP\nmethods = REG\n");
  EXPECT_EQ(run("bench --config " + path("b.conf")), 2);
  write_file(path("c.conf"), "datasets = x.json\nmodel = SVM\nmethods = MARGIN, TCP\n");
  EXPECT_EQ(run("bench --config " + path("c.conf")), 2);
}

}  // namespace
