#include <algorithm>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "freqlab/codec.hpp"
#include "freqlab/dataset.hpp"
#include "freqlab/digest.hpp"
#include "freqlab/error.hpp"
#include "freqlab/feature_cache.hpp"
#include "helpers.hpp"

using namespace freqlab;
using freqlab::testing::random_raster;
using freqlab::testing::TempDir;

namespace fs = std::filesystem;

namespace {

void write_pngs(const fs::path& dir, int count, std::uint64_t seed, int size = 16) {
  fs::create_directories(dir);
  for (int i = 0; i < count; ++i)
    save_png(random_raster(size, size, 3, seed + static_cast<std::uint64_t>(i)), dir / ("img_" + std::to_string(i) + ".png"));
}

DatasetManifest synthetic_manifest(const std::vector<long>& per_class) {
  DatasetManifest m;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    m.class_names.push_back("c" + std::to_string(c));
    for (long i = 0; i < per_class[c]; ++i)
      m.entries.push_back({"c" + std::to_string(c) + "/" + std::to_string(i) + ".png", static_cast<int>(c),
                           Split::Unassigned, "d"});
  }
  return m;
}

}  // namespace

TEST(ToGray, Bt601Weights) {
  EXPECT_DOUBLE_EQ(kGrayWeights[0] + kGrayWeights[1] + kGrayWeights[2], 1.0);
  RasterImage red(1, 3, 3, 0);
  red.at(0, 0, 0) = 255;
  red.at(0, 1, 0) = red.at(0, 1, 1) = red.at(0, 1, 2) = 255;
  const GrayImage g = to_gray(red);
  EXPECT_NEAR(g.pixels(0, 0), 76.245, 1e-9);
  EXPECT_NEAR(g.pixels(0, 1), 255.0, 1e-9);
  EXPECT_EQ(g.pixels(0, 2), 0.0);
  const RasterImage mono = random_raster(4, 5, 1, 1);
  const GrayImage same = to_gray(mono);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) EXPECT_EQ(same.pixels(y, x), mono.at(y, x, 0));
  const GrayImage any = to_gray(random_raster(8, 8, 3, 2));
  EXPECT_GE(any.pixels.minCoeff(), 0.0);
  EXPECT_LE(any.pixels.maxCoeff(), 255.0);
}

TEST(Ingest, CountsDeterminismAndCorruptFiles) {
  TempDir dir("ingest");
  write_pngs(dir.path(), 3, 10);
  const IngestReport a = ingest(dir.path(), {LabelRule::Mode::Single, "x"});
  EXPECT_EQ(a.manifest.entries.size(), 3u);
  EXPECT_TRUE(a.skipped.empty());
  EXPECT_EQ(manifest_to_json(a.manifest), manifest_to_json(ingest(dir.path(), {LabelRule::Mode::Single, "x"}).manifest));
  EXPECT_EQ(a.manifest.entries[0].digest, file_sha256_hex(dir / "img_0.png"));

  const auto bytes = read_file(dir / "img_1.png");
  {
    std::ofstream out(dir / "truncated.png", std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size() / 3));
  }
  const IngestReport b = ingest(dir.path(), {LabelRule::Mode::Single, "x"});
  EXPECT_EQ(b.manifest.entries.size(), 3u);
  ASSERT_EQ(b.skipped.size(), 1u);
  EXPECT_EQ(b.skipped[0], "truncated.png");
}

TEST(Ingest, SubdirectoriesBecomeSortedClasses) {
  TempDir dir("ingest_classes");
  write_pngs(dir / "zebra", 2, 20);
  write_pngs(dir / "apple", 3, 30);
  const DatasetManifest m = ingest(dir.path()).manifest;
  EXPECT_EQ(m.class_names, (std::vector<std::string>{"apple", "zebra"}));
  EXPECT_EQ(m.class_counts(Split::Unassigned), (std::vector<long>{3, 2}));
  EXPECT_TRUE(std::is_sorted(m.entries.begin(), m.entries.end(),
                             [](const auto& a, const auto& b) { return a.path < b.path; }));
}

TEST(Ingest, EmptyDirectoryIsInsufficientData) {
  TempDir dir("ingest_empty");
  try {
    ingest(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
}

TEST(Split, CountsFollowLargestRemainder) {
  EXPECT_EQ(split_counts(1000, {0.625, 0.0625, 0.3125}), (std::array<long, 3>{625, 62, 313}));
  EXPECT_EQ(split_counts(16000, {0.625, 0.0625, 0.3125}), (std::array<long, 3>{10000, 1000, 5000}));
  EXPECT_EQ(split_counts(7, {1.0, 0.0, 0.0}), (std::array<long, 3>{7, 0, 0}));
  for (long n : {10L, 33L, 101L, 999L}) {
    const auto c = split_counts(n, {0.7, 0.1, 0.2});
    EXPECT_EQ(c[0] + c[1] + c[2], n);
    EXPECT_LE(std::abs(c[0] - 0.7 * n), 1.0);
    EXPECT_LE(std::abs(c[1] - 0.1 * n), 1.0);
    EXPECT_LE(std::abs(c[2] - 0.2 * n), 1.0);
  }
}

TEST(Split, StratifiedAndSeeded) {
  const DatasetManifest m = synthetic_manifest({1000, 1000});
  const DatasetManifest a = split(m, {0.625, 0.0625, 0.3125}, 5);
  EXPECT_EQ(a.class_counts(Split::Train), (std::vector<long>{625, 625}));
  EXPECT_EQ(a.class_counts(Split::Val), (std::vector<long>{62, 62}));
  EXPECT_EQ(a.class_counts(Split::Test), (std::vector<long>{313, 313}));
  EXPECT_EQ(manifest_to_json(a), manifest_to_json(split(m, {0.625, 0.0625, 0.3125}, 5)));
  EXPECT_NE(manifest_to_json(a), manifest_to_json(split(m, {0.625, 0.0625, 0.3125}, 6)));
  const DatasetManifest all = split(m, {1.0, 0.0, 0.0}, 5);
  EXPECT_EQ(all.select(Split::Train).size(), 2000u);
}

TEST(Split, Errors) {
  const DatasetManifest m = synthetic_manifest({3, 50});
  try {
    split(m, {0.6, 0.1, 0.3}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
  EXPECT_THROW(split(m, {0.5, 0.1, 0.3}, 1), Error);
  EXPECT_THROW(split(m, {1.2, -0.1, -0.1}, 1), Error);
}

TEST(Subsample, IdentityCountsAndNesting) {
  const DatasetManifest m = split(synthetic_manifest({1000, 1000}), {1.0, 0.0, 0.0}, 3);
  EXPECT_EQ(manifest_to_json(subsample(m, 1.0, 4)), manifest_to_json(m));
  const DatasetManifest s2 = subsample(m, 0.2, 4);
  const DatasetManifest s4 = subsample(m, 0.4, 4);
  EXPECT_EQ(s2.class_counts(Split::Train), (std::vector<long>{200, 200}));
  EXPECT_EQ(s4.class_counts(Split::Train), (std::vector<long>{400, 400}));
  std::set<std::string> bigger;
  for (const auto& e : s4.entries) bigger.insert(e.path);
  for (const auto& e : s2.entries) EXPECT_TRUE(bigger.count(e.path)) << e.path;
}

TEST(Manifest, JsonRoundTripAndErrors) {
  DatasetManifest m = split(synthetic_manifest({20, 30}), {0.5, 0.25, 0.25}, 8);
  m.rng_seed = 8;
  const std::string text = manifest_to_json(m);
  EXPECT_EQ(manifest_to_json(manifest_from_json(text)), text);
  try {
    manifest_from_json("{\"entries\": 3}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
  }
  try {
    load_manifest("/nonexistent/manifest.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
  }
}

TEST(Manifest, DigestDriftIsDetected) {
  TempDir dir("digest");
  write_pngs(dir.path(), 2, 40);
  const DatasetManifest m = ingest(dir.path(), {LabelRule::Mode::Single, "x"}).manifest;
  EXPECT_TRUE(verify_digests(m, dir.path()).empty());
  save_png(random_raster(16, 16, 3, 999), dir / "img_1.png");
  EXPECT_EQ(verify_digests(m, dir.path()), (std::vector<std::string>{"img_1.png"}));
}

TEST(FeatureCache, EmptySplitRoundTripAndIdempotence) {
  TempDir dir("cache");
  write_pngs(dir / "a", 6, 50);
  write_pngs(dir / "b", 6, 60);
  const DatasetManifest m = split(ingest(dir.path()).manifest, {0.5, 0.0, 0.5}, 2);
  const auto spectra = split_spectra(m, dir.path(), Split::Train);
  const FeatureStats stats = fit_feature_stats(spectra);

  const std::string empty_digest = build_feature_cache(m, dir.path(), Split::Val, FeatureKind::DctLogStd, &stats,
                                                       dir / "val.fql");
  const FeatureSet empty = read_feature_cache(dir / "val.fql");
  EXPECT_EQ(empty.count(), 0);
  EXPECT_EQ(fs::file_size(dir / "val.fql"), 4u + 4 + 4 + 4 + 1);
  EXPECT_EQ(empty_digest, file_sha256_hex(dir / "val.fql"));

  const FeatureSet direct = build_features(m, dir.path(), Split::Test, FeatureKind::DctLogStd, &stats);
  const std::string d1 = build_feature_cache(m, dir.path(), Split::Test, FeatureKind::DctLogStd, &stats, dir / "t.fql");
  const auto t1 = fs::last_write_time(dir / "t.fql");
  const std::string d2 = build_feature_cache(m, dir.path(), Split::Test, FeatureKind::DctLogStd, &stats, dir / "t.fql");
  EXPECT_EQ(d1, d2);
  EXPECT_EQ(fs::last_write_time(dir / "t.fql"), t1);
  const FeatureSet loaded = read_feature_cache(dir / "t.fql");
  EXPECT_EQ(loaded.features, direct.features);
  EXPECT_EQ(loaded.labels, direct.labels);
  EXPECT_EQ(loaded.n1, 16);
  EXPECT_EQ(loaded.kind, FeatureKind::DctLogStd);
}

TEST(FeatureCache, HeaderLayout) {
  FeatureSet s;
  s.kind = FeatureKind::Pixel;
  s.n1 = 1;
  s.n2 = 2;
  s.features = Matrix(1, 2);
  s.features << 1.0, -2.0;
  s.labels = {3};
  const auto bytes = encode_feature_cache(s);
  ASSERT_EQ(bytes.size(), 17u + 16 + 1);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FQL1");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 1);
  EXPECT_EQ(bytes[12], 2);
  EXPECT_EQ(bytes[16], 0);
  EXPECT_EQ(bytes.back(), 3);
  const FeatureSet back = decode_feature_cache(bytes);
  EXPECT_EQ(back.features, s.features);
}
