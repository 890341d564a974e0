#include "freqlab/image.hpp"

#include <algorithm>
#include <cmath>

#include "freqlab/error.hpp"

namespace freqlab {

RasterImage::RasterImage(int h, int w, int c, std::uint8_t fill)
    : height(h), width(w), channels(c),
      pixels(static_cast<std::size_t>(h) * w * c, fill) {}

std::uint8_t clamp_round(double v) {
  double r = std::round(v);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

Matrix channel_plane(const RasterImage& img, int c) {
  Matrix m(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) m(y, x) = img.at(y, x, c);
  return m;
}

void store_plane(RasterImage& img, int c, const Matrix& plane) {
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) img.at(y, x, c) = clamp_round(plane(y, x));
}

RasterImage raster_from_plane(const Matrix& plane) {
  RasterImage out(static_cast<int>(plane.rows()), static_cast<int>(plane.cols()), 1);
  store_plane(out, 0, plane);
  return out;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

GrayImage to_gray(const RasterImage& img) {
  require(img.channels == 1 || img.channels == 3, ErrorKind::InvalidInput,
          "to_gray expects 1 or 3 channels");
  Matrix m(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (img.channels == 1) {
        m(y, x) = img.at(y, x, 0);
      } else {
        m(y, x) = kGrayWeights[0] * img.at(y, x, 0) + kGrayWeights[1] * img.at(y, x, 1) +
                  kGrayWeights[2] * img.at(y, x, 2);
      }
    }
  }
  return GrayImage(std::move(m));
}

}  // namespace freqlab
