#ifndef FREQLAB_FEATURE_CACHE_HPP
#define FREQLAB_FEATURE_CACHE_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "freqlab/image.hpp"
#include "freqlab/transform.hpp"

namespace freqlab {

enum class FeatureKind : std::uint8_t { Pixel = 0, DctLogStd = 1 };

/// In-memory form of an FQL1 file: one row of `features` per sample.
///
/// Layout on disk (little-endian):
///   "FQL1" | u32 count | u32 n1 | u32 n2 | u8 kind |
///   count * n1 * n2 float64 (row-major per sample) | count u8 labels
struct FeatureSet {
  FeatureKind kind = FeatureKind::DctLogStd;
  int n1 = 0;
  int n2 = 0;
  Matrix features;  // count x (n1 * n2)
  std::vector<std::uint8_t> labels;

  int count() const { return static_cast<int>(features.rows()); }
  int dims() const { return n1 * n2; }
};

std::vector<std::uint8_t> encode_feature_cache(const FeatureSet& set);
FeatureSet decode_feature_cache(std::span<const std::uint8_t> bytes);

void write_feature_cache(const FeatureSet& set, const std::filesystem::path& path);
FeatureSet read_feature_cache(const std::filesystem::path& path);

/// FeatureStats sidecar ("FQST" | u32 n1 | u32 n2 | f64 eps | mean | std).
std::vector<std::uint8_t> encode_feature_stats(const FeatureStats& stats);
FeatureStats decode_feature_stats(std::span<const std::uint8_t> bytes);

}  // namespace freqlab

#endif  // FREQLAB_FEATURE_CACHE_HPP
