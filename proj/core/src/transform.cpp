#include "freqlab/transform.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "freqlab/error.hpp"

namespace freqlab {
namespace {

const Matrix& cached_basis(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<Matrix>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Matrix>(dct_basis(n));
  return *slot;
}

}  // namespace

Matrix dct_basis(int n) {
  require(n >= 1, ErrorKind::InvalidInput, "DCT length must be positive");
  Matrix c(n, n);
  const double w0 = std::sqrt(1.0 / n);
  const double wk = std::sqrt(2.0 / n);
  for (int k = 0; k < n; ++k) {
    const double w = k == 0 ? w0 : wk;
    for (int i = 0; i < n; ++i) c(k, i) = w * std::cos(std::numbers::pi / n * (i + 0.5) * k);
  }
  return c;
}

Spectrum dct2(const GrayImage& img) {
  require(img.height() >= 1 && img.width() >= 1, ErrorKind::InvalidInput, "empty image");
  require(all_finite(img.pixels), ErrorKind::InvalidInput, "dct2 input contains non-finite values");
  const Matrix& rows = cached_basis(img.height());
  const Matrix& cols = cached_basis(img.width());
  Matrix along_columns = rows * img.pixels;
  return Spectrum(along_columns * cols.transpose());
}

GrayImage idct2(const Spectrum& spec) {
  require(spec.rows() >= 1 && spec.cols() >= 1, ErrorKind::InvalidInput, "empty spectrum");
  require(all_finite(spec.coeffs), ErrorKind::InvalidInput, "idct2 input contains non-finite values");
  const Matrix& rows = cached_basis(spec.rows());
  const Matrix& cols = cached_basis(spec.cols());
  Matrix tmp = rows.transpose() * spec.coeffs;
  return GrayImage(tmp * cols);
}

Spectrum dct2_naive(const GrayImage& img) {
  const long n1 = img.height();
  const long n2 = img.width();
  if (n1 * n2 > kNaiveDctMaxPixels)
    fail(ErrorKind::OracleSizeExceeded, "dct2_naive is limited to 64x64 pixels");
  require(n1 >= 1 && n2 >= 1, ErrorKind::InvalidInput, "empty image");
  require(all_finite(img.pixels), ErrorKind::InvalidInput, "dct2_naive input contains non-finite values");
  const double pi = std::numbers::pi;
  auto weight = [](long k, long n) { return k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n); };
  Matrix out(n1, n2);
  for (long kx = 0; kx < n1; ++kx) {
    for (long ky = 0; ky < n2; ++ky) {
      double sum = 0.0;
      for (long x = 0; x < n1; ++x) {
        for (long y = 0; y < n2; ++y) {
          sum += img.pixels(x, y) * std::cos(pi / n1 * (x + 0.5) * kx) *
                 std::cos(pi / n2 * (y + 0.5) * ky);
        }
      }
      out(kx, ky) = weight(kx, n1) * weight(ky, n2) * sum;
    }
  }
  return Spectrum(std::move(out));
}

Spectrum log_scale(const Spectrum& spec, double eps) {
  require(eps > 0.0, ErrorKind::InvalidInput, "log_scale epsilon must be positive");
  return Spectrum((spec.coeffs.array().abs() + eps).log().matrix());
}

Spectrum log_dct(const RasterImage& img) { return log_scale(dct2(to_gray(img))); }

FeatureStats fit_feature_stats(std::span<const Spectrum> train, double epsilon_std) {
  require(train.size() >= 2, ErrorKind::InsufficientData, "feature statistics need at least 2 samples");
  require(epsilon_std > 0.0, ErrorKind::InvalidInput, "epsilon_std must be positive");
  const int r = train.front().rows();
  const int c = train.front().cols();
  Matrix mean = Matrix::Zero(r, c);
  for (const auto& s : train) {
    require(s.rows() == r && s.cols() == c, ErrorKind::ShapeError, "feature statistics need identical shapes");
    mean += s.coeffs;
  }
  const double n = static_cast<double>(train.size());
  mean /= n;
  Matrix var = Matrix::Zero(r, c);
  for (const auto& s : train) var.array() += (s.coeffs - mean).array().square();
  var /= n;
  FeatureStats stats;
  stats.mean = std::move(mean);
  stats.std = var.array().sqrt().max(epsilon_std).matrix();
  stats.epsilon_std = epsilon_std;
  return stats;
}

FeatureStats fit_feature_stats(const Matrix& rows, int n1, int n2, double epsilon_std) {
  require(rows.rows() >= 2, ErrorKind::InsufficientData, "feature statistics need at least 2 samples");
  require(epsilon_std > 0.0, ErrorKind::InvalidInput, "epsilon_std must be positive");
  require(static_cast<Eigen::Index>(n1) * n2 == rows.cols(), ErrorKind::ShapeError,
          "feature rows do not match the requested grid");
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) mean += rows.row(i);
  const double n = static_cast<double>(rows.rows());
  mean /= n;
  Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) var.array() += (rows.row(i) - mean).array().square();
  var /= n;
  FeatureStats stats;
  stats.mean = Eigen::Map<const Matrix>(mean.data(), n1, n2);
  const Eigen::RowVectorXd sd = var.array().sqrt().max(epsilon_std).matrix();
  stats.std = Eigen::Map<const Matrix>(sd.data(), n1, n2);
  stats.epsilon_std = epsilon_std;
  return stats;
}

void standardize_rows(Matrix& rows, const FeatureStats& stats) {
  require(rows.cols() == stats.mean.size(), ErrorKind::ShapeError, "feature length does not match feature statistics");
  const Eigen::Map<const Eigen::RowVectorXd> mean(stats.mean.data(), stats.mean.size());
  const Eigen::Map<const Eigen::RowVectorXd> sd(stats.std.data(), stats.std.size());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) rows.row(i) = ((rows.row(i) - mean).array() / sd.array()).matrix();
}

Vector standardize(const Spectrum& spec, const FeatureStats& stats) {
  require(spec.rows() == stats.rows() && spec.cols() == stats.cols(), ErrorKind::ShapeError,
          "spectrum shape does not match feature statistics");
  Matrix z = ((spec.coeffs - stats.mean).array() / stats.std.array()).matrix();
  return Eigen::Map<const Vector>(z.data(), z.size());
}

Spectrum destandardize(const Vector& features, const FeatureStats& stats) {
  require(features.size() == stats.mean.size(), ErrorKind::ShapeError,
          "feature length does not match feature statistics");
  Eigen::Map<const Matrix> z(features.data(), stats.rows(), stats.cols());
  return Spectrum((z.array() * stats.std.array() + stats.mean.array()).matrix());
}

Vector pixel_features(const RasterImage& img, PixelMode mode) {
  auto scale = [](double v) { return v / 127.5 - 1.0; };
  if (mode == PixelMode::Gray) {
    GrayImage g = to_gray(img);
    Vector out(g.pixels.size());
    for (Eigen::Index i = 0; i < g.pixels.size(); ++i) out[i] = scale(g.pixels.data()[i]);
    return out;
  }
  const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
  Vector out(static_cast<Eigen::Index>(plane * img.channels));
  for (int c = 0; c < img.channels; ++c)
    for (std::size_t i = 0; i < plane; ++i)
      out[static_cast<Eigen::Index>(c * plane + i)] = scale(img.pixels[i * img.channels + c]);
  return out;
}

}  // namespace freqlab
