#ifndef FREQLAB_RESAMPLE_HPP
#define FREQLAB_RESAMPLE_HPP

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "freqlab/image.hpp"

namespace freqlab {

enum class UpsampleMethod : std::uint8_t { NearestNeighbor, Bilinear, Binomial5 };

struct UpsampleKind {
  UpsampleMethod method = UpsampleMethod::NearestNeighbor;
  int factor = 2;
};

std::string_view to_string(UpsampleMethod method);
std::optional<UpsampleMethod> parse_upsample_method(std::string_view name);

/// Unit-sum 1-D smoothing taps applied after pixel replication: empty for
/// nearest neighbor, [1,2,1]/4 for bilinear, [1,4,6,4,1]/16 for binomial.
/// The 2-D kernel is the outer product of these taps with themselves.
std::vector<double> upsample_taps(UpsampleMethod method);

/// Half-sample symmetric index reflection (... b a | a b c ... z | z y ...),
/// valid for any integer offset.
int reflect_index(int i, int n);

/// Separable 2-D convolution of `plane` with taps (x) taps, odd length,
/// reflect-padded at the borders.
Matrix convolve_separable(const Matrix& plane, const std::vector<double>& taps);

/// Pixel replication by `kind.factor`, then smoothing with the kind's kernel.
Matrix upsample(const Matrix& plane, const UpsampleKind& kind);
GrayImage upsample(const GrayImage& img, const UpsampleKind& kind);
RasterImage upsample(const RasterImage& img, const UpsampleKind& kind);

/// Box average over factor x factor blocks; trailing rows and columns that do
/// not fill a whole block are dropped.
Matrix downsample(const Matrix& plane, int factor);
GrayImage downsample(const GrayImage& img, int factor);
RasterImage downsample(const RasterImage& img, int factor);

/// Emulates a generator's upsampling path: one box downsample by 2^rounds,
/// then `rounds` factor-2 upsampling stages of `kind`. The output always has
/// the input's dimensions (edge rows/columns are replicated when the input is
/// not a multiple of 2^rounds).
Matrix synth_fake(const Matrix& plane, UpsampleMethod method, int rounds);
GrayImage synth_fake(const GrayImage& img, UpsampleMethod method, int rounds);
RasterImage synth_fake(const RasterImage& img, UpsampleMethod method, int rounds);

}  // namespace freqlab

#endif  // FREQLAB_RESAMPLE_HPP
