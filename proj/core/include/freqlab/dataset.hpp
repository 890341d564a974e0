#ifndef FREQLAB_DATASET_HPP
#define FREQLAB_DATASET_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "freqlab/feature_cache.hpp"
#include "freqlab/image.hpp"
#include "freqlab/transform.hpp"

namespace freqlab {

enum class Split : std::uint8_t { Unassigned, Train, Val, Test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view name);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory, '/' separated
  int label = 0;
  Split split = Split::Unassigned;
  std::string digest;  // SHA-256 of the file bytes
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> class_names;
  std::array<double, 3> split_ratios{1.0, 0.0, 0.0};
  std::uint64_t rng_seed = 0;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  std::vector<const ManifestEntry*> select(Split split) const;
  std::vector<long> class_counts(Split split) const;
};

struct LabelRule {
  enum class Mode : std::uint8_t {
    /// Each immediate subdirectory is a class (sorted by name); files
    /// directly in the root are ignored.
    Subdirectories,
    /// Every image under the root gets `single_class`.
    Single,
    /// Subdirectories when any subdirectory holds images, else Single.
    Auto,
  };
  Mode mode = Mode::Auto;
  std::string single_class = "images";
};

struct IngestReport {
  DatasetManifest manifest;
  std::vector<std::string> skipped;  // relative paths that failed to decode
};

/// Enumerates image files (by extension) in lexicographic path order,
/// decodes each one to validate it and records its digest. Paths are stored
/// relative to `dir`.
IngestReport ingest(const std::filesystem::path& dir, const LabelRule& rule = {});

/// Stratified seeded split. Per class, the entries are shuffled and the
/// counts come from the largest-remainder rule on n * ratio (ties go to the
/// later split), so each count is within one sample of its target.
DatasetManifest split(const DatasetManifest& manifest, const std::array<double, 3>& ratios, std::uint64_t seed);

/// Per-class count round(n * ratio) under the largest-remainder rule.
std::array<long, 3> split_counts(long n, const std::array<double, 3>& ratios);

/// Keeps round(fraction * n_c) entries of each class (at least one). One
/// permutation per class is drawn from the seed alone, and the prefix of it
/// is kept, so smaller fractions give subsets of larger ones.
DatasetManifest subsample(const DatasetManifest& manifest, double fraction, std::uint64_t seed);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(std::string_view text);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Re-hashes every file; returns the relative paths whose digest changed.
std::vector<std::string> verify_digests(const DatasetManifest& manifest, const std::filesystem::path& base_dir);

std::vector<RasterImage> load_split_images(const DatasetManifest& manifest, const std::filesystem::path& base_dir,
                                           Split split);

/// Log-DCT spectra of one split, decoded and transformed in parallel.
std::vector<Spectrum> split_spectra(const DatasetManifest& manifest, const std::filesystem::path& base_dir,
                                    Split split);

/// Feature rows for one split. DctLogStd requires `stats`.
FeatureSet build_features(const DatasetManifest& manifest, const std::filesystem::path& base_dir, Split split,
                          FeatureKind kind, const FeatureStats* stats, PixelMode pixel_mode = PixelMode::Gray);

/// Writes build_features(...) to `path`. If the file already holds the same
/// bytes (compared by digest) it is left untouched. Returns the digest.
std::string build_feature_cache(const DatasetManifest& manifest, const std::filesystem::path& base_dir, Split split,
                                FeatureKind kind, const FeatureStats* stats, const std::filesystem::path& path);

}  // namespace freqlab

#endif  // FREQLAB_DATASET_HPP
