#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "freqlab/codec.hpp"
#include "freqlab/error.hpp"
#include "freqlab/experiment.hpp"
#include "helpers.hpp"

using namespace freqlab;
using freqlab::testing::TempDir;

namespace fs = std::filesystem;

namespace {

ExperimentSpec small_detect(const fs::path& out) {
  ExperimentSpec spec;
  spec.recipe = Recipe::Detect;
  spec.seed = 11;
  spec.output_dir = out;
  spec.image_size = 32;
  spec.per_class = 32;
  spec.lambda_grid = {1e-3, 1e-1};
  spec.linear_train.max_epochs = 5;
  return spec;
}

}  // namespace

TEST(DeriveSeed, StableAndLabelSensitive) {
  EXPECT_EQ(derive_seed(1, "photos"), derive_seed(1, "photos"));
  EXPECT_NE(derive_seed(1, "photos"), derive_seed(2, "photos"));
  EXPECT_NE(derive_seed(1, "photos"), derive_seed(1, "split"));
}

TEST(Corpus, ClassesUseDisjointPhotos) {
  ExperimentSpec spec;
  spec.image_size = 32;
  const auto pool = photo_pool(spec, 10, 3);
  ASSERT_EQ(pool.size(), 10u);
  const SourceClass classes[] = {SourceClass::Real, SourceClass::NearestNeighbor};
  const LabeledImages corpus = make_corpus(pool, classes, 5, 1, 30);
  ASSERT_EQ(corpus.images.size(), 10u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(corpus.labels[static_cast<std::size_t>(i)], 0);
    EXPECT_EQ(corpus.images[static_cast<std::size_t>(i)].pixels, pool[static_cast<std::size_t>(i)].pixels);
    EXPECT_EQ(corpus.labels[static_cast<std::size_t>(5 + i)], 1);
  }
  std::set<std::string> names(corpus.names.begin(), corpus.names.end());
  EXPECT_EQ(names.size(), 10u);
}

TEST(Experiment, ReportsAndArtifactsAreReproducible) {
  TempDir a("exp_a"), b("exp_b");
  const ExperimentOutcome ra = run_experiment(small_detect(a.path()));
  const ExperimentOutcome rb = run_experiment(small_detect(b.path()));
  EXPECT_EQ(ra.report_json, rb.report_json);
  ASSERT_EQ(ra.artifacts, rb.artifacts);
  for (const auto& name : ra.artifacts) EXPECT_EQ(read_file(a / name), read_file(b / name)) << name;
  EXPECT_FALSE(fs::exists(a / ".freqlab.lock"));

  const auto report = nlohmann::json::parse(ra.report_json);
  EXPECT_EQ(report["recipe"], "detect");
  EXPECT_EQ(report["seed"], 11);
  EXPECT_TRUE(report["results"].contains("gain"));
}

TEST(Experiment, SeedChangesTheReport) {
  TempDir a("exp_s1"), b("exp_s2");
  ExperimentSpec other = small_detect(b.path());
  other.seed = 12;
  EXPECT_NE(run_experiment(small_detect(a.path())).report_json, run_experiment(other).report_json);
}

TEST(Experiment, LockedOutputDirectoryIsRejected) {
  TempDir dir("exp_lock");
  write_file_atomic(dir / ".freqlab.lock", {});
  try {
    run_experiment(small_detect(dir.path()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
  }
  EXPECT_TRUE(fs::exists(dir / ".freqlab.lock"));
}

TEST(Experiment, MissingPhotoDirectoryNamesThePath) {
  TempDir dir("exp_photos");
  ExperimentSpec spec = small_detect(dir.path());
  spec.photo_dir = dir / "no_such_photos";
  try {
    run_experiment(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    EXPECT_NE(std::string(e.what()).find("no_such_photos"), std::string::npos);
  }
}

TEST(Experiment, InvalidSettingsAreConfigErrors) {
  TempDir dir("exp_cfg");
  ExperimentSpec spec = small_detect(dir.path());
  spec.image_size = 30;
  EXPECT_THROW(spec.validate(), Error);
  spec = small_detect(dir.path());
  spec.per_class = 4;
  EXPECT_THROW(spec.validate(), Error);
  spec = small_detect(dir.path());
  spec.lambda_grid.clear();
  EXPECT_THROW(spec.validate(), Error);
  EXPECT_NO_THROW(small_detect(dir.path()).validate());
}
