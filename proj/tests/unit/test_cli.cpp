#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "freqlab/model_io.hpp"
#include "helpers.hpp"

using freqlab::testing::TempDir;

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt";
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = std::string("'") + FREQLAB_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

}  // namespace

TEST(Cli, HelpListsSubcommands) {
  TempDir dir("cli_help");
  const RunResult r = run_cli("--help", dir.path());
  EXPECT_EQ(r.code, 0);
  for (const char* name : {"ingest", "split", "transform", "synth", "perturb", "train", "eval", "run"})
    EXPECT_NE(r.out.find(name), std::string::npos) << name;
}

TEST(Cli, UnknownFlagExitsWithUsageError) {
  TempDir dir("cli_flag");
  const RunResult r = run_cli("photos --no-such-flag --out x", dir.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, EmptyDirectoryIsReportedAsInsufficientData) {
  TempDir dir("cli_empty");
  fs::create_directories(dir / "images");
  const RunResult r = run_cli("ingest '" + (dir / "images").string() + "'", dir.path());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("InsufficientData"), std::string::npos) << r.err;
}

TEST(Cli, MissingManifestNamesThePath) {
  TempDir dir("cli_missing");
  const RunResult r = run_cli("split --manifest '" + (dir / "absent.json").string() + "' --out '" +
                                  (dir / "s.json").string() + "'",
                              dir.path());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("absent.json"), std::string::npos) << r.err;
}

TEST(Cli, PipelineFromPhotosToTrainedModel) {
  TempDir dir("cli_pipeline");
  const std::string root = dir.path().string();
  ASSERT_EQ(run_cli("photos --count 40 --size 32 --seed 3 --out '" + root + "/data/real'", dir.path()).code, 0);
  ASSERT_EQ(run_cli("synth '" + root + "/data/real' '" + root + "/data/fake' --kind nn --rounds 1", dir.path()).code, 0);
  ASSERT_EQ(run_cli("ingest '" + root + "/data' --out '" + root + "/m.json'", dir.path()).code, 0);
  ASSERT_EQ(run_cli("split --manifest '" + root + "/m.json' --ratios 0.5,0.25,0.25 --seed 4 --out '" + root +
                        "/s.json'",
                    dir.path())
                .code,
            0);
  const RunResult train = run_cli("train --manifest '" + root + "/s.json' --model ridge --lambda-grid 0.001,0.1 --seed 5 --out '" +
                                      root + "/ridge.fqm'",
                                  dir.path());
  ASSERT_EQ(train.code, 0) << train.err;
  EXPECT_NE(train.out.find("chose lambda"), std::string::npos);

  const auto info = nlohmann::json::parse(freqlab::load_model_file(dir / "ridge.fqm").info());
  const double lambda = info["lambda"].get<double>();
  EXPECT_TRUE(lambda == 0.001 || lambda == 0.1) << lambda;

  const RunResult eval = run_cli("eval --manifest '" + root + "/s.json' --model '" + root + "/ridge.fqm' --split test --out '" +
                                     root + "/metrics.json'",
                                 dir.path());
  ASSERT_EQ(eval.code, 0) << eval.err;
  const auto metrics = nlohmann::json::parse(slurp(dir / "metrics.json"));
  EXPECT_EQ(metrics["count"], 20);
  EXPECT_TRUE(metrics["metrics"].contains("accuracy")) << metrics.dump();
}
