#ifndef FREQLAB_IMAGE_HPP
#define FREQLAB_IMAGE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace freqlab {

/// Row-major dense matrix of doubles; row index is the vertical (x / k_x)
/// axis, column index the horizontal one.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class ImageFormat : std::uint8_t { Png, Jpeg, Raw };

/// Decoded 8-bit image, interleaved H x W x C with C in {1, 3}.
struct RasterImage {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
  std::string source;
  ImageFormat format = ImageFormat::Raw;

  RasterImage() = default;
  RasterImage(int h, int w, int c, std::uint8_t fill = 0);

  std::uint8_t& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool same_shape(const RasterImage& other) const {
    return height == other.height && width == other.width && channels == other.channels;
  }
};

/// Single-plane real-valued image. Values are nominally in [0, 255] after
/// ingestion but any finite real is allowed.
struct GrayImage {
  Matrix pixels;

  GrayImage() = default;
  explicit GrayImage(Matrix m) : pixels(std::move(m)) {}

  int height() const { return static_cast<int>(pixels.rows()); }
  int width() const { return static_cast<int>(pixels.cols()); }
};

/// Extracts channel `c` as a real-valued plane.
Matrix channel_plane(const RasterImage& img, int c);

/// Writes a real plane back into channel `c`, rounding half away from zero
/// and clamping to [0, 255].
void store_plane(RasterImage& img, int c, const Matrix& plane);

/// Rounds and clamps a plane into a new single-channel raster.
RasterImage raster_from_plane(const Matrix& plane);

std::uint8_t clamp_round(double v);

bool all_finite(const Matrix& m);

/// ITU-R BT.601 luma weights.
inline constexpr double kGrayWeights[3] = {0.299, 0.587, 0.114};

/// Weighted channel average; identity for single-channel input.
GrayImage to_gray(const RasterImage& img);

}  // namespace freqlab

#endif  // FREQLAB_IMAGE_HPP
