#ifndef FREQLAB_SPECTRUM_HPP
#define FREQLAB_SPECTRUM_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string_view>

#include "freqlab/codec.hpp"
#include "freqlab/image.hpp"
#include "freqlab/linear.hpp"
#include "freqlab/transform.hpp"

namespace freqlab {

enum class AveragingOrder : std::uint8_t {
  LogAfterMean,  // log(mean |DCT| + eps)
  MeanAfterLog,  // mean log(|DCT| + eps)
};

std::string_view to_string(AveragingOrder order);
std::optional<AveragingOrder> parse_averaging_order(std::string_view name);

struct MeanSpectrum {
  Matrix values;
  long sample_count = 0;
  AveragingOrder order = AveragingOrder::LogAfterMean;
};

/// Streaming single-pass accumulator. Uses a running mean so that feeding
/// k copies of one spectrum reproduces it exactly.
class SpectrumAccumulator {
public:
  explicit SpectrumAccumulator(AveragingOrder order) : order_(order) {}

  /// `raw` is an un-logged DCT spectrum.
  void add(const Spectrum& raw);
  /// Folds in another partial accumulator (same order and shape).
  void merge(const SpectrumAccumulator& other);
  MeanSpectrum finish() const;

  long count() const { return count_; }

private:
  AveragingOrder order_;
  Matrix mean_;
  long count_ = 0;
};

MeanSpectrum mean_spectrum(std::span<const GrayImage> images, AveragingOrder order);
/// Pulls images from `next` until it returns nullopt.
MeanSpectrum mean_spectrum(const std::function<std::optional<GrayImage>()>& next, AveragingOrder order);

/// Elementwise |a - b|.
Matrix abs_diff_spectrum(const MeanSpectrum& a, const MeanSpectrum& b);
Matrix abs_diff_spectrum(const Matrix& a, const Matrix& b);

/// Fold lines left by `rounds` factor-2 upsampling stages: every row index or
/// column index within `halfwidth` of a non-zero multiple of n / 2^rounds.
/// This is a constructed measure of the "grid" pattern, not a standard one.
std::vector<std::uint8_t> grid_band_mask(int n1, int n2, int rounds, int halfwidth = 1);

/// mean(values on mask) / mean(values off mask).
double grid_band_ratio(const Matrix& values, std::span<const std::uint8_t> mask);

/// Mean of values in dyadic diagonal bands [2^j, 2^(j+1)) measured by
/// max(k_x, k_y); band 0 also contains the DC cell.
std::vector<double> octave_band_means(const Matrix& values);

enum class Palette : std::uint8_t { Viridis, Gray };
std::optional<Palette> parse_palette(std::string_view name);
std::array<std::uint8_t, 3> palette_color(Palette palette, double t);

struct HeatmapSpec {
  std::optional<double> clip_max;
  Palette palette = Palette::Viridis;
  /// Output height in pixels (nearest-neighbour scaled); 0 keeps one pixel
  /// per matrix cell.
  int output_size = 0;

  void validate() const;
};

/// Clips at clip_max (if set), min-max normalizes and maps through the
/// palette. Cell (0, 0), the lowest frequency, lands in the top-left corner.
RasterImage render_heatmap_image(const Matrix& values, const HeatmapSpec& spec);
void render_heatmap(const Matrix& values, const HeatmapSpec& spec, const std::filesystem::path& path,
                    const PngText& text = {});

/// |weights| mapped back to an n1 x n2 frequency grid (row-major inverse of
/// the standardize flattening). Multi-row models sum |w| over their rows.
Matrix weight_heatmap(const LinearModel& model, int n1, int n2);

/// %.17g cells; a non-empty `comment` becomes a leading "# " line, which
/// read_matrix_csv skips.
void write_matrix_csv(const Matrix& values, const std::filesystem::path& path, std::string_view comment = {});
Matrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace freqlab

#endif  // FREQLAB_SPECTRUM_HPP
