#ifndef FREQLAB_PERTURB_HPP
#define FREQLAB_PERTURB_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "freqlab/image.hpp"

namespace freqlab {

using Rng = std::mt19937_64;

enum class PerturbKind : std::uint8_t { Blur, Crop, Compress, Noise, Combined };

std::string_view to_string(PerturbKind kind);
std::optional<PerturbKind> parse_perturb_kind(std::string_view name);

/// Order in which the combined protocol cycles through the corruptions.
inline constexpr PerturbKind kCombinedCycle[] = {PerturbKind::Blur, PerturbKind::Crop, PerturbKind::Compress,
                                                 PerturbKind::Noise};

struct PerturbConfig {
  PerturbKind kind = PerturbKind::Combined;
  double apply_prob = 0.5;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Parameters actually drawn for one corruption, keyed by name.
using DrawnParams = std::map<std::string, double>;

// ---- blur: Gaussian, kernel size uniform over {3, 5, 7, 9}

inline constexpr int kBlurKernelSizes[] = {3, 5, 7, 9};
/// sigma = 0.3 * ((k - 1) / 2 - 1) + 0.8
double blur_sigma(int kernel_size);
std::vector<double> gaussian_taps(int kernel_size);
RasterImage blur_with(const RasterImage& img, int kernel_size);
RasterImage blur(const RasterImage& img, Rng& rng, DrawnParams* drawn = nullptr);

// ---- crop: U(5, 20) percent per axis, uniform offset, bilinear resize back

struct CropParams {
  double percent_y = 0.0;
  double percent_x = 0.0;
  /// Fractions in [0, 1] of the valid offset range.
  double offset_y = 0.0;
  double offset_x = 0.0;
};
inline constexpr int kMinCropSide = 32;
RasterImage crop_resize_with(const RasterImage& img, const CropParams& params);
RasterImage crop_resize(const RasterImage& img, Rng& rng, DrawnParams* drawn = nullptr);
/// Half-pixel-centred bilinear interpolation to (height, width).
RasterImage resize_bilinear(const RasterImage& img, int height, int width);

// ---- compression: JPEG quality uniform over {10, ..., 75}

RasterImage jpeg_compress_with(const RasterImage& img, int quality);
RasterImage jpeg_compress(const RasterImage& img, Rng& rng, DrawnParams* drawn = nullptr);

// ---- noise: i.i.d. Gaussian, variance U(5, 20) in 8-bit units squared

RasterImage add_noise_with(const RasterImage& img, double variance, Rng& rng);
RasterImage add_noise(const RasterImage& img, Rng& rng, DrawnParams* drawn = nullptr);

/// Applies one corruption of the given single kind.
RasterImage apply_perturbation(const RasterImage& img, PerturbKind kind, Rng& rng, DrawnParams* drawn = nullptr);

struct NamedImage {
  std::string name;
  RasterImage image;
};

struct PerturbRecord {
  std::string file;
  std::vector<std::string> applied_kinds;
  DrawnParams params;
};

struct PerturbOutcome {
  std::vector<NamedImage> images;
  std::vector<PerturbRecord> records;

  long applied_count() const;
};

/// Per-image stream: seed XOR stable_hash64(name), so the result for a file
/// does not depend on which worker handles it.
Rng image_rng(std::uint64_t seed, std::string_view name);

/// Single-kind mode flips an apply_prob coin per image. Combined mode cycles
/// blur, crop, compress, noise by corpus position (advancing whether or not
/// the coin applied) and flips the same coin.
PerturbOutcome perturb_dataset(const std::vector<NamedImage>& corpus, const PerturbConfig& config);

std::string perturb_manifest_json(const PerturbConfig& config, const std::vector<PerturbRecord>& records);

}  // namespace freqlab

#endif  // FREQLAB_PERTURB_HPP
