#include "freqlab/resample.hpp"

#include <numeric>

#include "freqlab/error.hpp"

namespace freqlab {

std::string_view to_string(UpsampleMethod method) {
  switch (method) {
    case UpsampleMethod::NearestNeighbor: return "nn";
    case UpsampleMethod::Bilinear: return "bilinear";
    case UpsampleMethod::Binomial5: return "binomial";
  }
  return "unknown";
}

std::optional<UpsampleMethod> parse_upsample_method(std::string_view name) {
  if (name == "nn" || name == "nearest") return UpsampleMethod::NearestNeighbor;
  if (name == "bilinear") return UpsampleMethod::Bilinear;
  if (name == "binomial" || name == "binomial5") return UpsampleMethod::Binomial5;
  return std::nullopt;
}

std::vector<double> upsample_taps(UpsampleMethod method) {
  std::vector<double> taps;
  switch (method) {
    case UpsampleMethod::NearestNeighbor: return taps;
    case UpsampleMethod::Bilinear: taps = {1, 2, 1}; break;
    case UpsampleMethod::Binomial5: taps = {1, 4, 6, 4, 1}; break;
  }
  const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
  for (double& t : taps) t /= sum;
  return taps;
}

int reflect_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

Matrix convolve_separable(const Matrix& plane, const std::vector<double>& taps) {
  require(taps.size() % 2 == 1, ErrorKind::InvalidInput, "kernel length must be odd");
  const int h = static_cast<int>(plane.rows());
  const int w = static_cast<int>(plane.cols());
  const int r = static_cast<int>(taps.size() / 2);
  Matrix tmp(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = -r; t <= r; ++t) acc += taps[t + r] * plane(y, reflect_index(x + t, w));
      tmp(y, x) = acc;
    }
  }
  Matrix out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = -r; t <= r; ++t) acc += taps[t + r] * tmp(reflect_index(y + t, h), x);
      out(y, x) = acc;
    }
  }
  return out;
}

Matrix upsample(const Matrix& plane, const UpsampleKind& kind) {
  require(kind.factor >= 2, ErrorKind::InvalidInput, "upsampling factor must be at least 2");
  const Eigen::Index h = plane.rows();
  const Eigen::Index w = plane.cols();
  const int f = kind.factor;
  Matrix out(h * f, w * f);
  for (Eigen::Index y = 0; y < h * f; ++y)
    for (Eigen::Index x = 0; x < w * f; ++x) out(y, x) = plane(y / f, x / f);
  auto taps = upsample_taps(kind.method);
  if (taps.empty()) return out;
  return convolve_separable(out, taps);
}

GrayImage upsample(const GrayImage& img, const UpsampleKind& kind) {
  return GrayImage(upsample(img.pixels, kind));
}

RasterImage upsample(const RasterImage& img, const UpsampleKind& kind) {
  require(kind.factor >= 2, ErrorKind::InvalidInput, "upsampling factor must be at least 2");
  RasterImage out(img.height * kind.factor, img.width * kind.factor, img.channels);
  for (int c = 0; c < img.channels; ++c) store_plane(out, c, upsample(channel_plane(img, c), kind));
  out.source = img.source;
  out.format = img.format;
  return out;
}

Matrix downsample(const Matrix& plane, int factor) {
  require(factor >= 1, ErrorKind::InvalidInput, "downsampling factor must be positive");
  if (factor == 1) return plane;
  const Eigen::Index h = plane.rows() / factor;
  const Eigen::Index w = plane.cols() / factor;
  Matrix out(h, w);
  const double norm = 1.0 / (static_cast<double>(factor) * factor);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) out(y, x) = plane.block(y * factor, x * factor, factor, factor).sum() * norm;
  return out;
}

GrayImage downsample(const GrayImage& img, int factor) { return GrayImage(downsample(img.pixels, factor)); }

RasterImage downsample(const RasterImage& img, int factor) {
  require(factor >= 1, ErrorKind::InvalidInput, "downsampling factor must be positive");
  RasterImage out(img.height / factor, img.width / factor, img.channels);
  for (int c = 0; c < img.channels; ++c) store_plane(out, c, downsample(channel_plane(img, c), factor));
  out.source = img.source;
  out.format = img.format;
  return out;
}

Matrix synth_fake(const Matrix& plane, UpsampleMethod method, int rounds) {
  require(rounds >= 0, ErrorKind::InvalidInput, "rounds must be non-negative");
  if (rounds == 0) return plane;
  require(rounds < 30, ErrorKind::InvalidInput, "too many upsampling rounds");
  const int scale = 1 << rounds;
  require(plane.rows() >= scale && plane.cols() >= scale, ErrorKind::InvalidInput,
          "image too small for the requested number of upsampling rounds");
  Matrix current = downsample(plane, scale);
  const UpsampleKind kind{method, 2};
  for (int r = 0; r < rounds; ++r) current = upsample(current, kind);
  if (current.rows() == plane.rows() && current.cols() == plane.cols()) return current;
  Matrix out(plane.rows(), plane.cols());
  for (Eigen::Index y = 0; y < out.rows(); ++y)
    for (Eigen::Index x = 0; x < out.cols(); ++x)
      out(y, x) = current(std::min(y, current.rows() - 1), std::min(x, current.cols() - 1));
  return out;
}

GrayImage synth_fake(const GrayImage& img, UpsampleMethod method, int rounds) {
  return GrayImage(synth_fake(img.pixels, method, rounds));
}

RasterImage synth_fake(const RasterImage& img, UpsampleMethod method, int rounds) {
  RasterImage out(img.height, img.width, img.channels);
  for (int c = 0; c < img.channels; ++c) store_plane(out, c, synth_fake(channel_plane(img, c), method, rounds));
  out.source = img.source;
  out.format = img.format;
  return out;
}

}  // namespace freqlab
