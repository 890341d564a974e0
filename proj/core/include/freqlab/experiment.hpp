#ifndef FREQLAB_EXPERIMENT_HPP
#define FREQLAB_EXPERIMENT_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freqlab/cnn.hpp"
#include "freqlab/dataset.hpp"
#include "freqlab/feature_cache.hpp"
#include "freqlab/linear.hpp"
#include "freqlab/perturb.hpp"
#include "freqlab/photo.hpp"
#include "freqlab/resample.hpp"

namespace freqlab {

enum class Recipe : std::uint8_t { Detect, Upsampling, Attribute, LowData, Converge, Robustness };

std::string_view to_string(Recipe recipe);
std::optional<Recipe> parse_recipe(std::string_view name);

/// How each class of a synthetic corpus is derived from a source photo.
enum class SourceClass : std::uint8_t { Real, NearestNeighbor, Bilinear, Binomial, Jpeg };

std::string_view to_string(SourceClass cls);

inline constexpr SourceClass kAttributionClasses[] = {SourceClass::Real, SourceClass::NearestNeighbor,
                                                      SourceClass::Bilinear, SourceClass::Binomial,
                                                      SourceClass::Jpeg};

/// Train / validation / test shares used by every recipe (10k / 1k / 5k).
inline constexpr std::array<double, 3> kRecipeSplit = {0.625, 0.0625, 0.3125};

struct ExperimentSpec {
  Recipe recipe = Recipe::Detect;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  /// Directory of source photos; when unset, photos are synthesized.
  std::optional<std::filesystem::path> photo_dir;

  int image_size = 128;
  int per_class = 1000;
  /// Factor-2 upsampling stages applied by the fake classes.
  int rounds = 2;
  int jpeg_quality = 30;
  UpsampleMethod detect_method = UpsampleMethod::NearestNeighbor;
  std::vector<FeatureKind> features = {FeatureKind::Pixel, FeatureKind::DctLogStd};
  std::vector<double> lambda_grid{std::begin(kDefaultLambdaGrid), std::end(kDefaultLambdaGrid)};
  std::vector<double> svm_c_grid{std::begin(kDefaultSvmCGrid), std::end(kDefaultSvmCGrid)};
  std::vector<double> variance_grid{std::begin(kDefaultVarianceGrid), std::end(kDefaultVarianceGrid)};

  /// Independent corpora for the upsampling and converge recipes.
  int repeats = 3;
  /// LASSO locality study inside the upsampling recipe.
  int lasso_runs = 10;
  int lasso_per_class = 300;
  int top_weights = 100;
  double heatmap_clip = 0.04;

  double lowdata_fraction = 0.2;

  double apply_prob = 0.5;
  std::vector<PerturbKind> perturbations = {PerturbKind::Blur, PerturbKind::Crop, PerturbKind::Compress,
                                            PerturbKind::Noise, PerturbKind::Combined};

  TrainConfig linear_train;
  CnnTrainConfig cnn_train = default_cnn_train();
  /// Optimizer steps between validation checks in the converge recipe.
  int converge_eval_every = 10;
  long converge_max_steps = 600;

  /// Progress messages; the library never prints on its own.
  std::function<void(std::string_view)> log;

  static CnnTrainConfig default_cnn_train();
  void validate() const;
};

struct ExperimentOutcome {
  std::string report_json;
  /// Files written, relative to the output directory.
  std::vector<std::string> artifacts;
};

/// Runs one recipe and writes report.json, CSV tables, heatmaps and training
/// histories into spec.output_dir. Results are a pure function of the spec
/// (and the photo directory contents, when given).
ExperimentOutcome run_experiment(const ExperimentSpec& spec);

// ---- building blocks shared with the command-line tool

std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

/// `count` source photos: synthesized from `seed`, or taken from the photo
/// directory (centre-cropped to image_size, order shuffled by `seed`).
std::vector<RasterImage> photo_pool(const ExperimentSpec& spec, std::size_t count, std::uint64_t seed);

RasterImage derive_class_image(const RasterImage& photo, SourceClass cls, int rounds, int jpeg_quality);

struct LabeledImages {
  std::vector<std::string> class_names;
  std::vector<std::string> names;
  std::vector<RasterImage> images;
  std::vector<int> labels;
};

/// Class c is built from photos [c * per_class, (c + 1) * per_class) of the
/// pool, so no photo appears in two classes.
LabeledImages make_corpus(const std::vector<RasterImage>& pool, std::span<const SourceClass> classes, int per_class,
                          int rounds, int jpeg_quality);

/// Stratified split assignment for an in-memory corpus (same rule as split()).
std::vector<Split> assign_splits(const LabeledImages& corpus, const std::array<double, 3>& ratios,
                                 std::uint64_t seed);

}  // namespace freqlab

#endif  // FREQLAB_EXPERIMENT_HPP
