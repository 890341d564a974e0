#include "freqlab/spectrum.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "freqlab/codec.hpp"
#include "freqlab/error.hpp"

namespace freqlab {

std::string_view to_string(AveragingOrder order) {
  return order == AveragingOrder::LogAfterMean ? "log-after-mean" : "mean-after-log";
}

std::optional<AveragingOrder> parse_averaging_order(std::string_view name) {
  if (name == "log-after-mean") return AveragingOrder::LogAfterMean;
  if (name == "mean-after-log") return AveragingOrder::MeanAfterLog;
  return std::nullopt;
}

void SpectrumAccumulator::add(const Spectrum& raw) {
  require(all_finite(raw.coeffs), ErrorKind::InvalidInput, "spectrum contains non-finite values");
  if (count_ == 0) {
    mean_ = Matrix::Zero(raw.rows(), raw.cols());
  } else {
    require(raw.rows() == mean_.rows() && raw.cols() == mean_.cols(), ErrorKind::ShapeError,
            "corpus images differ in shape");
  }
  ++count_;
  const double inv = 1.0 / static_cast<double>(count_);
  if (order_ == AveragingOrder::LogAfterMean) {
    mean_.array() += (raw.coeffs.array().abs() - mean_.array()) * inv;
  } else {
    mean_.array() += ((raw.coeffs.array().abs() + kLogEpsilon).log() - mean_.array()) * inv;
  }
}

void SpectrumAccumulator::merge(const SpectrumAccumulator& other) {
  require(order_ == other.order_, ErrorKind::InvalidInput, "cannot merge accumulators with different orders");
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  require(mean_.rows() == other.mean_.rows() && mean_.cols() == other.mean_.cols(), ErrorKind::ShapeError,
          "corpus images differ in shape");
  const long total = count_ + other.count_;
  mean_.array() += (other.mean_.array() - mean_.array()) * (static_cast<double>(other.count_) / total);
  count_ = total;
}

MeanSpectrum SpectrumAccumulator::finish() const {
  require(count_ >= 1, ErrorKind::InsufficientData, "empty corpus");
  MeanSpectrum out;
  out.sample_count = count_;
  out.order = order_;
  out.values = order_ == AveragingOrder::LogAfterMean ? Matrix((mean_.array() + kLogEpsilon).log()) : mean_;
  return out;
}

MeanSpectrum mean_spectrum(std::span<const GrayImage> images, AveragingOrder order) {
  SpectrumAccumulator acc(order);
  for (const auto& img : images) acc.add(dct2(img));
  return acc.finish();
}

MeanSpectrum mean_spectrum(const std::function<std::optional<GrayImage>()>& next, AveragingOrder order) {
  SpectrumAccumulator acc(order);
  while (auto img = next()) acc.add(dct2(*img));
  return acc.finish();
}

Matrix abs_diff_spectrum(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::ShapeError, "spectra differ in shape");
  return (a - b).cwiseAbs();
}

Matrix abs_diff_spectrum(const MeanSpectrum& a, const MeanSpectrum& b) { return abs_diff_spectrum(a.values, b.values); }

std::vector<std::uint8_t> grid_band_mask(int n1, int n2, int rounds, int halfwidth) {
  require(n1 >= 1 && n2 >= 1 && rounds >= 1 && halfwidth >= 0, ErrorKind::InvalidInput, "invalid grid parameters");
  auto on_fold = [&](int k, int n) {
    const int steps = 1 << rounds;
    for (int m = 1; m < steps; ++m) {
      const double line = static_cast<double>(m) * n / steps;
      if (std::abs(k - line) <= halfwidth) return true;
    }
    return false;
  };
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n1) * n2, 0);
  for (int kx = 0; kx < n1; ++kx)
    for (int ky = 0; ky < n2; ++ky)
      mask[static_cast<std::size_t>(kx) * n2 + ky] = on_fold(kx, n1) || on_fold(ky, n2);
  return mask;
}

double grid_band_ratio(const Matrix& values, std::span<const std::uint8_t> mask) {
  require(mask.size() == static_cast<std::size_t>(values.size()), ErrorKind::ShapeError, "mask size mismatch");
  double on = 0.0;
  double off = 0.0;
  long n_on = 0;
  long n_off = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) {
      on += values.data()[i];
      ++n_on;
    } else {
      off += values.data()[i];
      ++n_off;
    }
  }
  require(n_on > 0 && n_off > 0, ErrorKind::InvalidInput, "mask must split the matrix");
  return (on / n_on) / (off / n_off);
}

std::vector<double> octave_band_means(const Matrix& values) {
  const long limit = std::max(values.rows(), values.cols());
  int bands = 1;
  while ((1L << bands) < limit) ++bands;
  std::vector<double> sum(static_cast<std::size_t>(bands), 0.0);
  std::vector<long> count(static_cast<std::size_t>(bands), 0);
  for (Eigen::Index kx = 0; kx < values.rows(); ++kx) {
    for (Eigen::Index ky = 0; ky < values.cols(); ++ky) {
      const long f = std::max<long>(kx, ky);
      int band = 0;
      while (f >= (2L << band)) ++band;
      sum[static_cast<std::size_t>(band)] += values(kx, ky);
      ++count[static_cast<std::size_t>(band)];
    }
  }
  for (std::size_t b = 0; b < sum.size(); ++b) sum[b] /= static_cast<double>(std::max(1L, count[b]));
  return sum;
}

void HeatmapSpec::validate() const {
  require(!clip_max || (*clip_max > 0.0 && std::isfinite(*clip_max)), ErrorKind::InvalidInput,
          "clip_max must be positive");
  require(output_size >= 0, ErrorKind::InvalidInput, "output size must be non-negative");
}

RasterImage render_heatmap_image(const Matrix& values, const HeatmapSpec& spec) {
  spec.validate();
  require(values.size() > 0, ErrorKind::InvalidInput, "empty matrix");
  require(values.allFinite(), ErrorKind::InvalidInput, "heatmap input contains non-finite values");
  Matrix v = values;
  if (spec.clip_max) v = v.cwiseMin(*spec.clip_max);
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  const double span = hi - lo;
  const int rows = static_cast<int>(v.rows());
  const int cols = static_cast<int>(v.cols());
  const int out_h = spec.output_size > 0 ? spec.output_size : rows;
  const int out_w = spec.output_size > 0
                        ? std::max(1, static_cast<int>(std::lround(static_cast<double>(spec.output_size) * cols / rows)))
                        : cols;
  RasterImage img(out_h, out_w, 3);
  for (int y = 0; y < out_h; ++y) {
    const int r = static_cast<int>(static_cast<long>(y) * rows / out_h);
    for (int x = 0; x < out_w; ++x) {
      const int c = static_cast<int>(static_cast<long>(x) * cols / out_w);
      const double t = span > 0.0 ? (v(r, c) - lo) / span : 0.0;
      auto rgb = palette_color(spec.palette, t);
      for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = rgb[static_cast<std::size_t>(ch)];
    }
  }
  img.format = ImageFormat::Png;
  return img;
}

void render_heatmap(const Matrix& values, const HeatmapSpec& spec, const std::filesystem::path& path,
                    const PngText& text) {
  save_png(render_heatmap_image(values, spec), path, text);
}

Matrix weight_heatmap(const LinearModel& model, int n1, int n2) {
  require(static_cast<long>(n1) * n2 == model.weights.cols(), ErrorKind::ShapeError,
          "model dimension does not match the requested frequency grid");
  Vector mass = model.weights.cwiseAbs().colwise().sum().transpose();
  return Eigen::Map<const Matrix>(mass.data(), n1, n2);
}

void write_matrix_csv(const Matrix& values, const std::filesystem::path& path, std::string_view comment) {
  std::string text;
  if (!comment.empty()) {
    text += "# ";
    text += comment;
    text.push_back('\n');
  }
  char buf[32];
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", values(r, c));
      if (c > 0) text.push_back(',');
      text += buf;
    }
    text.push_back('\n');
  }
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorKind::IoError, "malformed number in " + path.string());
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorKind::ShapeError, "ragged rows in " + path.string());
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorKind::InsufficientData, "empty matrix file " + path.string());
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

}  // namespace freqlab
