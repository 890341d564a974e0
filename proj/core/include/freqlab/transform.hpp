#ifndef FREQLAB_TRANSFORM_HPP
#define FREQLAB_TRANSFORM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "freqlab/image.hpp"

namespace freqlab {

/// DCT coefficients of one plane; entry (0, 0) is the DC term, row index is
/// k_x (vertical frequency), column index k_y.
struct Spectrum {
  Matrix coeffs;

  Spectrum() = default;
  explicit Spectrum(Matrix m) : coeffs(std::move(m)) {}

  int rows() const { return static_cast<int>(coeffs.rows()); }
  int cols() const { return static_cast<int>(coeffs.cols()); }
};

inline constexpr double kLogEpsilon = 1e-12;
inline constexpr double kStdFloor = 1e-8;
/// Inputs larger than this (in pixels) are refused by the O(N^4) oracle.
inline constexpr long kNaiveDctMaxPixels = 64L * 64L;

/// Orthonormal type-II DCT basis of length n: row k holds
/// w(k) * cos(pi / n * (i + 1/2) * k) with w(0) = sqrt(1/n), w(k) = sqrt(2/n).
/// The matrix is orthogonal, so its transpose is the inverse transform.
Matrix dct_basis(int n);

/// Separable 2-D DCT-II: transform along columns, then along rows.
Spectrum dct2(const GrayImage& img);
GrayImage idct2(const Spectrum& spec);

/// Literal double-sum evaluation, kept as a reference for dct2.
Spectrum dct2_naive(const GrayImage& img);

/// Elementwise log(|c| + eps). The sign of each coefficient is discarded.
Spectrum log_scale(const Spectrum& spec, double eps = kLogEpsilon);

/// log_scale(dct2(to_gray(img))).
Spectrum log_dct(const RasterImage& img);

/// Per-coefficient statistics fitted on a training split.
struct FeatureStats {
  Matrix mean;
  Matrix std;
  double epsilon_std = kStdFloor;

  int rows() const { return static_cast<int>(mean.rows()); }
  int cols() const { return static_cast<int>(mean.cols()); }
};

/// Population mean / std over the samples, std floored at epsilon_std.
FeatureStats fit_feature_stats(std::span<const Spectrum> train, double epsilon_std = kStdFloor);

/// Same statistics from flattened spectra stored one per row of `rows`.
FeatureStats fit_feature_stats(const Matrix& rows, int n1, int n2, double epsilon_std = kStdFloor);

/// In-place row-wise standardize.
void standardize_rows(Matrix& rows, const FeatureStats& stats);

/// (value - mean) / std, flattened row-major.
Vector standardize(const Spectrum& spec, const FeatureStats& stats);
/// Inverse of standardize.
Spectrum destandardize(const Vector& features, const FeatureStats& stats);

enum class PixelMode : std::uint8_t { Gray, PerChannel };

/// Affine map [0, 255] -> [-1, 1]. Gray mode flattens the luma plane
/// row-major; PerChannel mode concatenates the channel planes.
Vector pixel_features(const RasterImage& img, PixelMode mode = PixelMode::Gray);

}  // namespace freqlab

#endif  // FREQLAB_TRANSFORM_HPP
