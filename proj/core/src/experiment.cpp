#include "freqlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "freqlab/codec.hpp"
#include "freqlab/digest.hpp"
#include "freqlab/error.hpp"
#include "freqlab/model_io.hpp"
#include "freqlab/parallel.hpp"
#include "freqlab/spectrum.hpp"

namespace fs = std::filesystem;

namespace freqlab {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Recipe recipe) {
  switch (recipe) {
    case Recipe::Detect: return "detect";
    case Recipe::Upsampling: return "upsampling";
    case Recipe::Attribute: return "attribute";
    case Recipe::LowData: return "lowdata";
    case Recipe::Converge: return "converge";
    case Recipe::Robustness: return "robustness";
  }
  return "unknown";
}

std::optional<Recipe> parse_recipe(std::string_view name) {
  for (Recipe r : {Recipe::Detect, Recipe::Upsampling, Recipe::Attribute, Recipe::LowData, Recipe::Converge,
                   Recipe::Robustness})
    if (name == to_string(r)) return r;
  return std::nullopt;
}

std::string_view to_string(SourceClass cls) {
  switch (cls) {
    case SourceClass::Real: return "real";
    case SourceClass::NearestNeighbor: return "nn";
    case SourceClass::Bilinear: return "bilinear";
    case SourceClass::Binomial: return "binomial";
    case SourceClass::Jpeg: return "jpeg";
  }
  return "unknown";
}

CnnTrainConfig ExperimentSpec::default_cnn_train() {
  CnnTrainConfig cfg;
  cfg.optimizer.max_epochs = 20;
  cfg.optimizer.early_stop_patience = 5;
  return cfg;
}

void ExperimentSpec::validate() const {
  if (photo_dir)
    require(fs::is_directory(*photo_dir), ErrorKind::ConfigError,
            "photo directory does not exist: " + photo_dir->string());
  require(!output_dir.empty(), ErrorKind::ConfigError, "an output directory is required");
  require(image_size >= 32 && image_size % 4 == 0, ErrorKind::ConfigError,
          "image size must be a multiple of 4 and at least 32");
  require(rounds >= 1 && (image_size >> rounds) >= 2, ErrorKind::ConfigError, "rounds too large for the image size");
  require(per_class >= 16, ErrorKind::ConfigError, "per_class must be at least 16");
  require(lasso_per_class >= 16 && lasso_runs >= 0 && repeats >= 1, ErrorKind::ConfigError,
          "invalid repeat settings");
  require(jpeg_quality >= 1 && jpeg_quality <= 100, ErrorKind::ConfigError, "JPEG quality must lie in [1, 100]");
  require(!features.empty(), ErrorKind::ConfigError, "at least one feature kind is required");
  require(!lambda_grid.empty() && !svm_c_grid.empty() && !variance_grid.empty(), ErrorKind::ConfigError,
          "grids must not be empty");
  require(lowdata_fraction > 0.0 && lowdata_fraction <= 1.0, ErrorKind::ConfigError,
          "lowdata fraction must lie in (0, 1]");
  require(top_weights >= 1, ErrorKind::ConfigError, "top_weights must be positive");
  require(converge_eval_every >= 1 && converge_max_steps >= 1, ErrorKind::ConfigError, "invalid converge settings");
  PerturbConfig{PerturbKind::Blur, apply_prob, 0}.validate();
  linear_train.validate();
  cnn_train.optimizer.validate();
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  return stable_hash64(std::to_string(base) + ":" + std::string(label));
}

namespace {

RasterImage center_crop(const RasterImage& img, int size) {
  require(img.height >= size && img.width >= size, ErrorKind::InvalidInput,
          "photo " + img.source + " is smaller than " + std::to_string(size) + " pixels");
  const int oy = (img.height - size) / 2;
  const int ox = (img.width - size) / 2;
  RasterImage out(size, size, img.channels);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(y + oy, x + ox, c);
  out.source = img.source;
  return out;
}

}  // namespace

std::vector<RasterImage> photo_pool(const ExperimentSpec& spec, std::size_t count, std::uint64_t seed) {
  std::vector<RasterImage> pool(count);
  if (!spec.photo_dir) {
    PhotoConfig cfg;
    cfg.size = spec.image_size;
    parallel_for(count, [&](std::size_t i) {
      pool[i] = synthesize_photo(derive_seed(seed, "photo:" + std::to_string(i)), cfg);
    });
    return pool;
  }
  const IngestReport report = ingest(*spec.photo_dir, {LabelRule::Mode::Single, "photos"});
  const auto& entries = report.manifest.entries;
  require(entries.size() >= count, ErrorKind::InsufficientData,
          "photo directory holds " + std::to_string(entries.size()) + " usable images, " + std::to_string(count) +
              " are needed");
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  parallel_for(count, [&](std::size_t i) {
    pool[i] = center_crop(load_image(*spec.photo_dir / entries[order[i]].path), spec.image_size);
  });
  return pool;
}

RasterImage derive_class_image(const RasterImage& photo, SourceClass cls, int rounds, int jpeg_quality) {
  switch (cls) {
    case SourceClass::Real: return photo;
    case SourceClass::NearestNeighbor: return synth_fake(photo, UpsampleMethod::NearestNeighbor, rounds);
    case SourceClass::Bilinear: return synth_fake(photo, UpsampleMethod::Bilinear, rounds);
    case SourceClass::Binomial: return synth_fake(photo, UpsampleMethod::Binomial5, rounds);
    case SourceClass::Jpeg: return jpeg_compress_with(photo, jpeg_quality);
  }
  fail(ErrorKind::InvalidInput, "unknown source class");
}

LabeledImages make_corpus(const std::vector<RasterImage>& pool, std::span<const SourceClass> classes, int per_class,
                          int rounds, int jpeg_quality) {
  const std::size_t total = classes.size() * static_cast<std::size_t>(per_class);
  require(pool.size() >= total, ErrorKind::InsufficientData, "photo pool is smaller than the corpus");
  LabeledImages out;
  for (SourceClass c : classes) out.class_names.emplace_back(to_string(c));
  out.images.resize(total);
  out.labels.resize(total);
  out.names.resize(total);
  parallel_for(total, [&](std::size_t i) {
    const std::size_t c = i / static_cast<std::size_t>(per_class);
    out.images[i] = derive_class_image(pool[i], classes[c], rounds, jpeg_quality);
    out.labels[i] = static_cast<int>(c);
    char name[64];
    std::snprintf(name, sizeof name, "%s/%05zu.png", out.class_names[c].c_str(), i % static_cast<std::size_t>(per_class));
    out.names[i] = name;
  });
  return out;
}

namespace {

DatasetManifest corpus_manifest(const LabeledImages& corpus) {
  DatasetManifest m;
  m.class_names = corpus.class_names;
  for (std::size_t i = 0; i < corpus.images.size(); ++i)
    m.entries.push_back({corpus.names[i], corpus.labels[i], Split::Unassigned, {}});
  return m;
}

}  // namespace

std::vector<Split> assign_splits(const LabeledImages& corpus, const std::array<double, 3>& ratios,
                                 std::uint64_t seed) {
  const DatasetManifest m = split(corpus_manifest(corpus), ratios, seed);
  std::vector<Split> out(m.entries.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m.entries[i].split;
  return out;
}

namespace {

// ------------------------------------------------------------------ helpers

struct ImageSplit {
  std::vector<const RasterImage*> images;
  std::vector<int> labels;
};

struct ImageSplits {
  ImageSplit train, val, test;
};

ImageSplits partition(const LabeledImages& corpus, const std::vector<Split>& assign) {
  ImageSplits s;
  for (std::size_t i = 0; i < corpus.images.size(); ++i) {
    ImageSplit* dst = assign[i] == Split::Train ? &s.train : assign[i] == Split::Val ? &s.val
                    : assign[i] == Split::Test  ? &s.test  : nullptr;
    if (!dst) continue;
    dst->images.push_back(&corpus.images[i]);
    dst->labels.push_back(corpus.labels[i]);
  }
  return s;
}

ImageSplit keep_subset(const ImageSplit& split, const std::vector<std::uint8_t>& keep) {
  ImageSplit out;
  for (std::size_t i = 0; i < split.images.size(); ++i)
    if (keep[i]) {
      out.images.push_back(split.images[i]);
      out.labels.push_back(split.labels[i]);
    }
  return out;
}

struct FeatureSplits {
  FeatureKind kind = FeatureKind::DctLogStd;
  int n1 = 0;
  int n2 = 0;
  LabeledSet train, val, test;
};

Matrix raw_rows(const ImageSplit& split, FeatureKind kind, int dims) {
  Matrix rows(static_cast<Eigen::Index>(split.images.size()), dims);
  parallel_for(split.images.size(), [&](std::size_t i) {
    const RasterImage& img = *split.images[i];
    if (kind == FeatureKind::Pixel) {
      rows.row(static_cast<Eigen::Index>(i)) = pixel_features(img).transpose();
    } else {
      const Spectrum s = log_dct(img);
      rows.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(s.coeffs.data(), s.coeffs.size());
    }
  });
  return rows;
}

/// Pixel features are used as is; DCT features are standardized with
/// statistics fitted on the training split only.
FeatureSplits extract(const ImageSplits& splits, FeatureKind kind) {
  require(!splits.train.images.empty(), ErrorKind::InsufficientData, "empty training split");
  FeatureSplits f;
  f.kind = kind;
  f.n1 = splits.train.images.front()->height;
  f.n2 = splits.train.images.front()->width;
  const int dims = f.n1 * f.n2;
  f.train = {raw_rows(splits.train, kind, dims), splits.train.labels};
  f.val = {raw_rows(splits.val, kind, dims), splits.val.labels};
  f.test = {raw_rows(splits.test, kind, dims), splits.test.labels};
  if (kind == FeatureKind::DctLogStd) {
    const FeatureStats stats = fit_feature_stats(f.train.X, f.n1, f.n2);
    standardize_rows(f.train.X, stats);
    standardize_rows(f.val.X, stats);
    standardize_rows(f.test.X, stats);
  }
  return f;
}

std::string feature_name(FeatureKind kind) { return kind == FeatureKind::Pixel ? "pixel" : "dct"; }

ImageBatch to_batch(const Matrix& X, int n1, int n2) {
  ImageBatch b(static_cast<int>(X.rows()), 1, n1, n2);
  std::copy(X.data(), X.data() + X.size(), b.data.begin());
  return b;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth, int classes) {
  return evaluate_predictions(predicted, truth, classes).accuracy;
}

class Session {
public:
  explicit Session(const ExperimentSpec& spec_in) : spec(spec_in) {
    fs::create_directories(spec.output_dir);
    lock_ = spec.output_dir / ".freqlab.lock";
    std::FILE* f = std::fopen(lock_.c_str(), "wx");
    require(f != nullptr, ErrorKind::ConfigError,
            "output directory is locked by another run (remove " + lock_.string() + " if stale)");
    std::fclose(f);
  }
  ~Session() {
    std::error_code ec;
    fs::remove(lock_, ec);
  }
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  void log(const std::string& msg) const {
    if (spec.log) spec.log(msg);
  }

  std::string provenance_line() const {
    return std::string("freqlab ") + FREQLAB_VERSION + " recipe=" + std::string(to_string(spec.recipe)) +
           " seed=" + std::to_string(spec.seed) + " inputs=" + inputs_digest;
  }

  void write_text(const std::string& name, const std::string& text) {
    write_file_atomic(spec.output_dir / name, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
    artifacts.push_back(name);
  }

  void write_csv(const std::string& name, const std::string& header, const std::vector<std::string>& rows) {
    std::string text = "# " + provenance_line() + "\n" + header + "\n";
    for (const auto& r : rows) text += r + "\n";
    write_text(name, text);
  }

  void write_matrix(const std::string& name, const Matrix& m) {
    write_matrix_csv(m, spec.output_dir / name, provenance_line());
    artifacts.push_back(name);
  }

  void write_heatmap(const std::string& name, const Matrix& m, std::optional<double> clip) {
    HeatmapSpec hs;
    hs.clip_max = clip;
    render_heatmap(m, hs, spec.output_dir / name,
                   {{"Software", std::string("freqlab ") + FREQLAB_VERSION}, {"Comment", provenance_line()}});
    artifacts.push_back(name);
  }

  void write_history(const std::string& name, const std::vector<HistoryRow>& history) {
    std::vector<std::string> rows;
    char buf[128];
    for (const auto& h : history) {
      std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g", h.step, h.train_loss, h.val_accuracy);
      rows.emplace_back(buf);
    }
    write_csv(name, "step,train_loss,val_accuracy", rows);
  }

  const ExperimentSpec& spec;
  std::string inputs_digest = "synthetic";
  ojson inputs;
  std::vector<std::string> artifacts;

private:
  fs::path lock_;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ojson nullable(const std::optional<long>& v) { return v ? ojson(*v) : ojson(nullptr); }

GridSearchResult ridge(const FeatureSplits& f, const ExperimentSpec& spec, RegKind reg, std::uint64_t seed) {
  TrainConfig cfg = spec.linear_train;
  cfg.rng_seed = seed;
  GridSearchResult g = grid_search_lambda(f.train, f.val, spec.lambda_grid, reg, cfg);
  g.best.model.feature_kind = f.kind;
  return g;
}

struct CnnRun {
  CnnTrainResult result;
  double test_accuracy = 0.0;
};

CnnRun train_and_test_cnn(const LabeledSet& train, const LabeledSet& val, const LabeledSet& test, int n1, int n2,
                          int classes, CnnTrainConfig cfg, std::uint64_t seed) {
  CnnShape shape;
  shape.input_size = n1;
  shape.in_channels = 1;
  shape.num_classes = classes;
  require(n1 == n2, ErrorKind::ShapeError, "the CNN expects square inputs");
  cfg.optimizer.rng_seed = derive_seed(seed, "order");
  CnnTrainResult result = train_cnn(CnnModel::initialized(shape, derive_seed(seed, "init")), to_batch(train.X, n1, n2),
                                    train.y, to_batch(val.X, n1, n2), val.y, cfg);
  const double acc = accuracy(predict(result.model, to_batch(test.X, n1, n2)), test.y, classes);
  return CnnRun{std::move(result), acc};
}

ojson spec_json(const ExperimentSpec& s) {
  ojson j;
  j["recipe"] = std::string(to_string(s.recipe));
  j["seed"] = s.seed;
  j["image_size"] = s.image_size;
  j["per_class"] = s.per_class;
  j["rounds"] = s.rounds;
  j["jpeg_quality"] = s.jpeg_quality;
  j["split_ratios"] = kRecipeSplit;
  std::vector<std::string> feats;
  for (auto k : s.features) feats.push_back(feature_name(k));
  j["features"] = feats;
  j["lambda_grid"] = s.lambda_grid;
  switch (s.recipe) {
    case Recipe::Detect: j["upsampling"] = std::string(to_string(s.detect_method)); break;
    case Recipe::Upsampling:
      j["repeats"] = s.repeats;
      j["lasso_runs"] = s.lasso_runs;
      j["lasso_per_class"] = s.lasso_per_class;
      j["top_weights"] = s.top_weights;
      j["heatmap_clip"] = s.heatmap_clip;
      break;
    case Recipe::Attribute:
      j["svm_c_grid"] = s.svm_c_grid;
      j["variance_grid"] = s.variance_grid;
      break;
    case Recipe::LowData: j["lowdata_fraction"] = s.lowdata_fraction; break;
    case Recipe::Converge:
      j["repeats"] = s.repeats;
      j["eval_every"] = s.converge_eval_every;
      j["max_steps"] = s.converge_max_steps;
      j["target_accuracy"] = s.cnn_train.target_accuracy;
      break;
    case Recipe::Robustness: {
      j["apply_prob"] = s.apply_prob;
      std::vector<std::string> kinds;
      for (auto k : s.perturbations) kinds.emplace_back(to_string(k));
      j["perturbations"] = kinds;
      break;
    }
  }
  ojson lin;
  lin["learning_rate"] = s.linear_train.learning_rate;
  lin["batch_size"] = s.linear_train.batch_size;
  lin["max_epochs"] = s.linear_train.max_epochs;
  lin["patience"] = s.linear_train.early_stop_patience;
  j["linear_train"] = lin;
  if (s.recipe == Recipe::Attribute || s.recipe == Recipe::LowData || s.recipe == Recipe::Converge ||
      s.recipe == Recipe::Robustness) {
    ojson cnn;
    cnn["learning_rate"] = s.cnn_train.optimizer.learning_rate;
    cnn["batch_size"] = s.cnn_train.optimizer.batch_size;
    cnn["max_epochs"] = s.cnn_train.optimizer.max_epochs;
    cnn["patience"] = s.cnn_train.optimizer.early_stop_patience;
    j["cnn_train"] = cnn;
  }
  return j;
}

// ------------------------------------------------------------------ detect

ojson run_detect(Session& s) {
  const ExperimentSpec& spec = s.spec;
  const SourceClass fake = spec.detect_method == UpsampleMethod::NearestNeighbor ? SourceClass::NearestNeighbor
                         : spec.detect_method == UpsampleMethod::Bilinear        ? SourceClass::Bilinear
                                                                                 : SourceClass::Binomial;
  const SourceClass classes[] = {SourceClass::Real, fake};
  s.log("generating " + std::to_string(2 * spec.per_class) + " images");
  const auto pool = photo_pool(spec, 2 * static_cast<std::size_t>(spec.per_class), derive_seed(spec.seed, "pool"));
  const LabeledImages corpus = make_corpus(pool, classes, spec.per_class, spec.rounds, spec.jpeg_quality);
  const auto assign = assign_splits(corpus, kRecipeSplit, derive_seed(spec.seed, "split"));
  const ImageSplits splits = partition(corpus, assign);

  ojson results;
  ojson methods = ojson::array();
  std::vector<std::string> rows;
  std::optional<double> pixel_acc;
  for (FeatureKind kind : spec.features) {
    s.log("ridge on " + feature_name(kind) + " features");
    const FeatureSplits f = extract(splits, kind);
    const GridSearchResult g = ridge(f, spec, RegKind::L2, derive_seed(spec.seed, "ridge:" + feature_name(kind)));
    const double acc = evaluate(g.best.model, f.test).accuracy;
    ojson m;
    m["method"] = "ridge";
    m["feature"] = feature_name(kind);
    m["lambda"] = g.best_value;
    m["accuracy"] = acc;
    std::string gain;
    if (kind == FeatureKind::Pixel) pixel_acc = acc;
    if (kind == FeatureKind::DctLogStd && pixel_acc) {
      m["gain"] = acc - *pixel_acc;
      gain = fmt(acc - *pixel_acc);
      results["gain"] = acc - *pixel_acc;
    }
    methods.push_back(m);
    rows.push_back("ridge," + feature_name(kind) + "," + fmt(g.best_value) + "," + fmt(acc) + "," + gain);
    if (kind == FeatureKind::DctLogStd) s.write_heatmap("ridge_dct_weights.png", weight_heatmap(g.best.model, f.n1, f.n2), std::nullopt);
  }
  results["methods"] = methods;
  s.write_csv("table.csv", "method,feature,lambda,accuracy,gain", rows);

  std::vector<GrayImage> real, fakes;
  for (std::size_t i = 0; i < corpus.images.size(); ++i)
    (corpus.labels[i] == 0 ? real : fakes).push_back(to_gray(corpus.images[i]));
  const MeanSpectrum ms_real = mean_spectrum(real, AveragingOrder::LogAfterMean);
  const MeanSpectrum ms_fake = mean_spectrum(fakes, AveragingOrder::LogAfterMean);
  const Matrix diff = abs_diff_spectrum(ms_real, ms_fake);
  const auto mask = grid_band_mask(static_cast<int>(diff.rows()), static_cast<int>(diff.cols()), spec.rounds);
  results["grid_band_ratio"] = grid_band_ratio(diff, mask);
  s.write_heatmap("spectrum_real.png", ms_real.values, std::nullopt);
  s.write_heatmap("spectrum_fake.png", ms_fake.values, std::nullopt);
  s.write_heatmap("spectrum_absdiff.png", diff, std::nullopt);
  s.write_matrix("spectrum_absdiff.csv", diff);
  return results;
}

// ------------------------------------------------------------------ upsampling

constexpr SourceClass kUpsamplingKinds[] = {SourceClass::NearestNeighbor, SourceClass::Bilinear, SourceClass::Binomial};

/// Cells of `weights` holding the `top` largest magnitudes (ties to the
/// smaller flat index).
std::vector<std::size_t> top_cells(const Matrix& weights, int top) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(weights.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const double* w = weights.data();
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(top), idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return w[a] != w[b] ? w[a] > w[b] : a < b; });
  idx.resize(k);
  return idx;
}

double band_mass(const Matrix& weights, std::span<const std::size_t> cells, std::span<const std::uint8_t> mask) {
  double sum = 0.0;
  for (std::size_t c : cells)
    if (mask[c]) sum += weights.data()[c];
  return sum;
}

/// Same line structure as grid_band_mask (2^rounds - 1 rows and as many
/// columns, each +-halfwidth) at random centres that keep every line clear of
/// the grid band and of each other. Both masks therefore cover the same number
/// of cells.
std::vector<std::uint8_t> random_band_mask(int n1, int n2, int rounds, int halfwidth, std::uint64_t seed) {
  const int lines = (1 << rounds) - 1;
  std::mt19937_64 rng(seed);
  auto pick = [&](int n) {
    std::vector<std::uint8_t> taken(static_cast<std::size_t>(n), 0);
    for (int m = 1; m <= lines; ++m) {
      const int centre = m * n / (1 << rounds);
      for (int d = -2 * halfwidth - 1; d <= 2 * halfwidth + 1; ++d)
        if (centre + d >= 0 && centre + d < n) taken[static_cast<std::size_t>(centre + d)] = 1;
    }
    std::vector<int> centres;
    std::uniform_int_distribution<int> dist(halfwidth, n - 1 - halfwidth);
    for (int attempt = 0; static_cast<int>(centres.size()) < lines; ++attempt) {
      require(attempt < 100000, ErrorKind::InvalidInput, "grid too small for a random comparison band");
      const int c = dist(rng);
      bool free = true;
      for (int d = -2 * halfwidth; d <= 2 * halfwidth; ++d)
        if (c + d >= 0 && c + d < n && taken[static_cast<std::size_t>(c + d)]) free = false;
      if (!free) continue;
      centres.push_back(c);
      for (int d = -halfwidth; d <= halfwidth; ++d) taken[static_cast<std::size_t>(c + d)] = 1;
    }
    return centres;
  };
  const auto rows = pick(n1);
  const auto cols = pick(n2);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n1) * n2, 0);
  for (int r : rows)
    for (int d = -halfwidth; d <= halfwidth; ++d)
      for (int x = 0; x < n2; ++x) mask[static_cast<std::size_t>(r + d) * n2 + x] = 1;
  for (int c : cols)
    for (int d = -halfwidth; d <= halfwidth; ++d)
      for (int y = 0; y < n1; ++y) mask[static_cast<std::size_t>(y) * n2 + c + d] = 1;
  return mask;
}

double zero_fraction(const LinearModel& m) {
  return static_cast<double>((m.weights.array() == 0.0).count()) / static_cast<double>(m.weights.size());
}

ojson run_upsampling(Session& s) {
  const ExperimentSpec& spec = s.spec;
  ojson repeats = ojson::array();
  std::vector<std::string> rows;
  bool accuracy_order_all = true;
  bool ratio_order_all = true;
  for (int r = 0; r < spec.repeats; ++r) {
    const std::uint64_t seed_r = derive_seed(spec.seed, "repeat:" + std::to_string(r));
    s.log("upsampling repeat " + std::to_string(r));
    const auto pool = photo_pool(spec, 4 * static_cast<std::size_t>(spec.per_class), derive_seed(seed_r, "pool"));
    const std::vector<RasterImage> real_pool(pool.begin(), pool.begin() + spec.per_class);
    std::vector<GrayImage> real_gray;
    for (const auto& img : real_pool) real_gray.push_back(to_gray(img));
    const MeanSpectrum ms_real = mean_spectrum(real_gray, AveragingOrder::LogAfterMean);

    ojson kinds = ojson::array();
    std::vector<double> dct_acc, ratios;
    for (std::size_t k = 0; k < 3; ++k) {
      const SourceClass cls = kUpsamplingKinds[k];
      const std::string kname(to_string(cls));
      std::vector<RasterImage> sub(real_pool);
      sub.insert(sub.end(), pool.begin() + static_cast<std::ptrdiff_t>((k + 1) * spec.per_class),
                 pool.begin() + static_cast<std::ptrdiff_t>((k + 2) * spec.per_class));
      const SourceClass classes[] = {SourceClass::Real, cls};
      const LabeledImages corpus = make_corpus(sub, classes, spec.per_class, spec.rounds, spec.jpeg_quality);
      const ImageSplits splits = partition(corpus, assign_splits(corpus, kRecipeSplit, derive_seed(seed_r, "split")));

      ojson entry;
      entry["upsampling"] = kname;
      std::optional<double> pixel_acc;
      for (FeatureKind kind : spec.features) {
        const FeatureSplits f = extract(splits, kind);
        const GridSearchResult g = ridge(f, spec, RegKind::L2, derive_seed(seed_r, "ridge:" + kname + feature_name(kind)));
        const double acc = evaluate(g.best.model, f.test).accuracy;
        entry[feature_name(kind) + "_accuracy"] = acc;
        entry[feature_name(kind) + "_lambda"] = g.best_value;
        if (kind == FeatureKind::Pixel) pixel_acc = acc;
        if (kind == FeatureKind::DctLogStd) {
          dct_acc.push_back(acc);
          if (pixel_acc) entry["gain"] = acc - *pixel_acc;
          if (r == 0) {
            const GridSearchResult lasso =
                ridge(f, spec, RegKind::L1, derive_seed(seed_r, "lasso:" + kname));
            entry["lasso_lambda"] = lasso.best_value;
            entry["lasso_zero_fraction"] = zero_fraction(lasso.best.model);
            const Matrix w = weight_heatmap(lasso.best.model, f.n1, f.n2);
            s.write_heatmap("lasso_weights_" + kname + ".png", w, spec.heatmap_clip);
            s.write_matrix("lasso_weights_" + kname + ".csv", w);
          }
        }
      }
      std::vector<GrayImage> fake_gray;
      for (std::size_t i = 0; i < corpus.images.size(); ++i)
        if (corpus.labels[i] == 1) fake_gray.push_back(to_gray(corpus.images[i]));
      const Matrix diff = abs_diff_spectrum(ms_real, mean_spectrum(fake_gray, AveragingOrder::LogAfterMean));
      const auto mask = grid_band_mask(static_cast<int>(diff.rows()), static_cast<int>(diff.cols()), spec.rounds);
      const double ratio = grid_band_ratio(diff, mask);
      ratios.push_back(ratio);
      entry["grid_band_ratio"] = ratio;
      if (r == 0) {
        s.write_heatmap("spectrum_absdiff_" + kname + ".png", diff, std::nullopt);
        s.write_matrix("spectrum_absdiff_" + kname + ".csv", diff);
      }
      rows.push_back(std::to_string(r) + "," + kname + "," +
                     (entry.contains("pixel_accuracy") ? fmt(entry["pixel_accuracy"].get<double>()) : "") + "," +
                     (entry.contains("dct_accuracy") ? fmt(entry["dct_accuracy"].get<double>()) : "") + "," +
                     (entry.contains("gain") ? fmt(entry["gain"].get<double>()) : "") + "," + fmt(ratio));
      kinds.push_back(entry);
    }
    ojson rep;
    rep["repeat"] = r;
    rep["kinds"] = kinds;
    if (dct_acc.size() == 3) {
      const bool ok = dct_acc[0] >= dct_acc[1] && dct_acc[1] >= dct_acc[2];
      rep["dct_accuracy_ordered"] = ok;
      accuracy_order_all = accuracy_order_all && ok;
    }
    const bool ratio_ok = ratios[0] > ratios[1] && ratios[1] > ratios[2];
    rep["grid_ratio_strictly_decreasing"] = ratio_ok;
    ratio_order_all = ratio_order_all && ratio_ok;
    repeats.push_back(rep);
  }
  s.write_csv("table.csv", "repeat,upsampling,pixel_accuracy,dct_accuracy,gain,grid_band_ratio", rows);

  ojson results;
  results["repeats"] = repeats;
  if (std::find(spec.features.begin(), spec.features.end(), FeatureKind::DctLogStd) != spec.features.end())
    results["dct_accuracy_ordered_all"] = accuracy_order_all;
  results["grid_ratio_decreasing_all"] = ratio_order_all;

  // LASSO locality: top-weight mass on the grid band against a random band.
  ojson runs = ojson::array();
  std::vector<std::string> lasso_rows;
  int wins = 0;
  double min_zero = 1.0;
  for (int r = 0; r < spec.lasso_runs; ++r) {
    const std::uint64_t seed_l = derive_seed(spec.seed, "lasso-run:" + std::to_string(r));
    s.log("lasso run " + std::to_string(r));
    const auto pool = photo_pool(spec, 2 * static_cast<std::size_t>(spec.lasso_per_class), derive_seed(seed_l, "pool"));
    const SourceClass classes[] = {SourceClass::Real, SourceClass::NearestNeighbor};
    const LabeledImages corpus = make_corpus(pool, classes, spec.lasso_per_class, spec.rounds, spec.jpeg_quality);
    const ImageSplits splits = partition(corpus, assign_splits(corpus, kRecipeSplit, derive_seed(seed_l, "split")));
    const FeatureSplits f = extract(splits, FeatureKind::DctLogStd);
    const GridSearchResult g = ridge(f, spec, RegKind::L1, derive_seed(seed_l, "lasso"));
    const Matrix w = weight_heatmap(g.best.model, f.n1, f.n2);
    const auto cells = top_cells(w, spec.top_weights);
    const auto grid = grid_band_mask(f.n1, f.n2, spec.rounds);
    const auto band = random_band_mask(f.n1, f.n2, spec.rounds, 1, derive_seed(seed_l, "band"));
    const double grid_mass = band_mass(w, cells, grid);
    const double random_mass = band_mass(w, cells, band);
    const double zeros = zero_fraction(g.best.model);
    min_zero = std::min(min_zero, zeros);
    wins += grid_mass > random_mass;
    ojson run;
    run["run"] = r;
    run["lambda"] = g.best_value;
    run["zero_fraction"] = zeros;
    run["test_accuracy"] = evaluate(g.best.model, f.test).accuracy;
    run["grid_band_top_mass"] = grid_mass;
    run["random_band_top_mass"] = random_mass;
    run["grid_band_cells"] = std::count(grid.begin(), grid.end(), 1);
    run["random_band_cells"] = std::count(band.begin(), band.end(), 1);
    runs.push_back(run);
    lasso_rows.push_back(std::to_string(r) + "," + fmt(g.best_value) + "," + fmt(zeros) + "," + fmt(grid_mass) + "," +
                         fmt(random_mass));
  }
  if (spec.lasso_runs > 0) {
    ojson lasso;
    lasso["runs"] = runs;
    lasso["grid_band_wins"] = wins;
    lasso["min_zero_fraction"] = min_zero;
    results["lasso_locality"] = lasso;
    s.write_csv("lasso_locality.csv", "run,lambda,zero_fraction,grid_band_top_mass,random_band_top_mass", lasso_rows);
  }
  return results;
}

// ------------------------------------------------------------------ attribute

LabeledImages attribution_corpus(const ExperimentSpec& spec, std::uint64_t seed) {
  const std::size_t n = std::size(kAttributionClasses) * static_cast<std::size_t>(spec.per_class);
  const auto pool = photo_pool(spec, n, derive_seed(seed, "pool"));
  return make_corpus(pool, kAttributionClasses, spec.per_class, spec.rounds, spec.jpeg_quality);
}

ojson run_attribute(Session& s) {
  const ExperimentSpec& spec = s.spec;
  s.log("generating " + std::to_string(5 * spec.per_class) + " images");
  const LabeledImages corpus = attribution_corpus(spec, spec.seed);
  const ImageSplits splits = partition(corpus, assign_splits(corpus, kRecipeSplit, derive_seed(spec.seed, "split")));
  const int classes = static_cast<int>(corpus.class_names.size());

  std::map<std::string, std::map<std::string, double>> acc;  // method -> feature -> accuracy
  ojson details;
  for (FeatureKind kind : spec.features) {
    const std::string fname = feature_name(kind);
    FeatureSplits f = extract(splits, kind);

    s.log("kNN on " + fname);
    const KnnSearchResult knn = grid_search_knn(f.train, f.val);
    acc["knn"][fname] = accuracy(knn_classify(f.train, f.test.X, knn.best_k), f.test.y, classes);
    details["knn"][fname]["k"] = knn.best_k;

    s.log("eigenfaces on " + fname);
    TrainConfig cfg = spec.linear_train;
    cfg.rng_seed = derive_seed(spec.seed, "eigenfaces:" + fname);
    const EigenfacesSearchResult eig = grid_search_eigenfaces(f.train, f.val, spec.variance_grid, spec.svm_c_grid, cfg);
    acc["eigenfaces"][fname] = accuracy(eig.model.predict(f.test.X), f.test.y, classes);
    details["eigenfaces"][fname]["variance"] = eig.best_variance;
    details["eigenfaces"][fname]["C"] = eig.best_C;
    details["eigenfaces"][fname]["components"] = eig.model.basis.rank();

    s.log("CNN on " + fname);
    const CnnRun run = train_and_test_cnn(f.train, f.val, f.test, f.n1, f.n2, classes, spec.cnn_train,
                                          derive_seed(spec.seed, "cnn:" + fname));
    acc["cnn"][fname] = run.test_accuracy;
    details["cnn"][fname]["best_step"] = run.result.best_step;
    details["cnn"][fname]["best_val_accuracy"] = run.result.best_val_accuracy;
    details["cnn"][fname]["parameters"] = run.result.model.parameter_count();
    s.write_history("history_cnn_" + fname + ".csv", run.result.history);
  }

  ojson methods = ojson::array();
  std::vector<std::string> rows;
  for (const char* method : {"knn", "eigenfaces", "cnn"}) {
    for (FeatureKind kind : spec.features) {
      const std::string fname = feature_name(kind);
      ojson m;
      m["method"] = method;
      m["feature"] = fname;
      m["accuracy"] = acc[method][fname];
      std::string gain;
      if (kind == FeatureKind::DctLogStd && acc[method].count("pixel")) {
        m["gain"] = acc[method][fname] - acc[method]["pixel"];
        gain = fmt(acc[method][fname] - acc[method]["pixel"]);
      }
      for (auto& [k, v] : details[method][fname].items()) m[k] = v;
      methods.push_back(m);
      rows.push_back(std::string(method) + "," + fname + "," + fmt(acc[method][fname]) + "," + gain);
    }
  }
  s.write_csv("table.csv", "method,feature,accuracy,gain", rows);
  ojson results;
  results["classes"] = corpus.class_names;
  results["methods"] = methods;
  return results;
}

// ------------------------------------------------------------------ lowdata

ojson run_lowdata(Session& s) {
  const ExperimentSpec& spec = s.spec;
  const LabeledImages corpus = attribution_corpus(spec, spec.seed);
  const auto assign = assign_splits(corpus, kRecipeSplit, derive_seed(spec.seed, "split"));
  const ImageSplits splits = partition(corpus, assign);
  const int classes = static_cast<int>(corpus.class_names.size());

  // Reduced training split: stratified subsample of the training entries only.
  DatasetManifest train_only;
  train_only.class_names = corpus.class_names;
  std::vector<std::size_t> train_index;
  for (std::size_t i = 0; i < corpus.images.size(); ++i)
    if (assign[i] == Split::Train) {
      train_only.entries.push_back({corpus.names[i], corpus.labels[i], Split::Train, {}});
      train_index.push_back(i);
    }
  const DatasetManifest reduced = subsample(train_only, spec.lowdata_fraction, derive_seed(spec.seed, "subsample"));
  std::set<std::string> kept;
  for (const auto& e : reduced.entries) kept.insert(e.path);
  std::vector<std::uint8_t> keep(train_index.size());
  for (std::size_t j = 0; j < train_index.size(); ++j) keep[j] = kept.count(corpus.names[train_index[j]]) > 0;
  ImageSplits small = splits;
  small.train = keep_subset(splits.train, keep);

  ojson methods = ojson::array();
  std::vector<std::string> rows;
  ojson results;
  std::map<std::string, double> loss;
  for (FeatureKind kind : spec.features) {
    const std::string fname = feature_name(kind);
    const std::uint64_t seed = derive_seed(spec.seed, "cnn:" + fname);
    s.log("CNN on " + fname + " (full)");
    const CnnRun full = [&] {
      const FeatureSplits f = extract(splits, kind);
      return train_and_test_cnn(f.train, f.val, f.test, f.n1, f.n2, classes, spec.cnn_train, seed);
    }();
    s.log("CNN on " + fname + " (reduced)");
    const CnnRun part = [&] {
      const FeatureSplits f = extract(small, kind);
      return train_and_test_cnn(f.train, f.val, f.test, f.n1, f.n2, classes, spec.cnn_train, seed);
    }();
    s.write_history("history_cnn_" + fname + "_full.csv", full.result.history);
    s.write_history("history_cnn_" + fname + "_reduced.csv", part.result.history);
    ojson m;
    m["method"] = "cnn";
    m["feature"] = fname;
    m["full_accuracy"] = full.test_accuracy;
    m["reduced_accuracy"] = part.test_accuracy;
    m["loss"] = part.test_accuracy - full.test_accuracy;
    m["reduced_train_size"] = small.train.images.size();
    m["full_train_size"] = splits.train.images.size();
    loss[fname] = part.test_accuracy - full.test_accuracy;
    methods.push_back(m);
    rows.push_back("cnn," + fname + "," + fmt(full.test_accuracy) + "," + fmt(part.test_accuracy) + "," +
                   fmt(part.test_accuracy - full.test_accuracy));
  }
  s.write_csv("table.csv", "method,feature,full_accuracy,reduced_accuracy,loss", rows);
  results["methods"] = methods;
  if (loss.count("pixel") && loss.count("dct"))
    results["dct_drop_smaller"] = -loss["dct"] < -loss["pixel"];
  return results;
}

// ------------------------------------------------------------------ converge

ojson run_converge(Session& s) {
  const ExperimentSpec& spec = s.spec;
  ojson repeats = ojson::array();
  std::vector<std::string> rows;
  bool all_faster = true;
  for (int r = 0; r < spec.repeats; ++r) {
    const std::uint64_t seed_r = derive_seed(spec.seed, "repeat:" + std::to_string(r));
    const LabeledImages corpus = attribution_corpus(spec, seed_r);
    const ImageSplits splits = partition(corpus, assign_splits(corpus, kRecipeSplit, derive_seed(seed_r, "split")));
    const int classes = static_cast<int>(corpus.class_names.size());
    CnnTrainConfig cfg = spec.cnn_train;
    cfg.eval_every = spec.converge_eval_every;
    cfg.max_steps = spec.converge_max_steps;
    cfg.optimizer.max_epochs = std::numeric_limits<int>::max();
    cfg.optimizer.early_stop_patience = std::numeric_limits<int>::max();
    cfg.stop_at_target = false;

    ojson rep;
    rep["repeat"] = r;
    std::map<std::string, std::optional<long>> steps;
    for (FeatureKind kind : spec.features) {
      const std::string fname = feature_name(kind);
      s.log("converge repeat " + std::to_string(r) + " " + fname);
      const FeatureSplits f = extract(splits, kind);
      const CnnRun run = train_and_test_cnn(f.train, f.val, f.test, f.n1, f.n2, classes, cfg,
                                            derive_seed(seed_r, "cnn:" + fname));
      steps[fname] = run.result.steps_to_target;
      rep[fname + "_steps_to_target"] = nullable(run.result.steps_to_target);
      rep[fname + "_best_val_accuracy"] = run.result.best_val_accuracy;
      rep[fname + "_test_accuracy"] = run.test_accuracy;
      s.write_history("history_" + fname + "_repeat" + std::to_string(r) + ".csv", run.result.history);
      rows.push_back(std::to_string(r) + "," + fname + "," +
                     (run.result.steps_to_target ? std::to_string(*run.result.steps_to_target) : "") + "," +
                     fmt(run.test_accuracy));
    }
    if (steps.count("dct") && steps.count("pixel")) {
      const auto& d = steps["dct"];
      const auto& p = steps["pixel"];
      const bool faster = d.has_value() && (!p.has_value() || *d < *p);
      rep["dct_faster"] = faster;
      all_faster = all_faster && faster;
    }
    repeats.push_back(rep);
  }
  s.write_csv("table.csv", "repeat,feature,steps_to_target,test_accuracy", rows);
  ojson results;
  results["repeats"] = repeats;
  results["dct_faster_all"] = all_faster;
  return results;
}

// ------------------------------------------------------------------ robustness

ojson run_robustness(Session& s) {
  const ExperimentSpec& spec = s.spec;
  const LabeledImages clean = attribution_corpus(spec, spec.seed);
  const auto assign = assign_splits(clean, kRecipeSplit, derive_seed(spec.seed, "split"));
  const ImageSplits clean_splits = partition(clean, assign);
  const int classes = static_cast<int>(clean.class_names.size());

  std::vector<NamedImage> named(clean.images.size());
  for (std::size_t i = 0; i < named.size(); ++i) named[i] = {clean.names[i], clean.images[i]};

  std::map<std::string, std::map<std::string, std::pair<double, double>>> grid;  // feature -> perturbation -> (CD, PD)
  ojson applied = ojson::object();
  std::vector<LabeledImages> perturbed_sets;
  for (PerturbKind kind : spec.perturbations) {
    PerturbConfig cfg{kind, spec.apply_prob, derive_seed(spec.seed, "perturb:" + std::string(to_string(kind)))};
    PerturbOutcome out = perturb_dataset(named, cfg);
    LabeledImages p = clean;
    for (std::size_t i = 0; i < p.images.size(); ++i) p.images[i] = std::move(out.images[i].image);
    applied[std::string(to_string(kind))] = out.applied_count();
    perturbed_sets.push_back(std::move(p));
  }

  for (FeatureKind fk : spec.features) {
    const std::string fname = feature_name(fk);
    const std::uint64_t seed = derive_seed(spec.seed, "cnn:" + fname);
    s.log("CNN on clean " + fname);
    CnnModel cd_model(CnnShape{});
    {
      const FeatureSplits f = extract(clean_splits, fk);
      CnnRun cd = train_and_test_cnn(f.train, f.val, f.test, f.n1, f.n2, classes, spec.cnn_train, seed);
      s.write_history("history_cnn_" + fname + "_clean.csv", cd.result.history);
      cd_model = std::move(cd.result.model);
    }
    for (std::size_t p = 0; p < spec.perturbations.size(); ++p) {
      const std::string pname(to_string(spec.perturbations[p]));
      const ImageSplits pert = partition(perturbed_sets[p], assign);
      // CD: clean training statistics and model, perturbed test images.
      ImageSplits cd_view = clean_splits;
      cd_view.test = pert.test;
      double cd_acc = 0.0;
      {
        const FeatureSplits f = extract(cd_view, fk);
        cd_acc = accuracy(predict(cd_model, to_batch(f.test.X, f.n1, f.n2)), f.test.y, classes);
      }
      s.log("CNN on " + pname + " " + fname);
      const FeatureSplits f = extract(pert, fk);
      const CnnRun pd = train_and_test_cnn(f.train, f.val, f.test, f.n1, f.n2, classes, spec.cnn_train,
                                           derive_seed(seed, pname));
      s.write_history("history_cnn_" + fname + "_" + pname + ".csv", pd.result.history);
      grid[fname][pname] = {cd_acc, pd.test_accuracy};
    }
  }

  ojson table = ojson::array();
  std::vector<std::string> rows;
  for (PerturbKind kind : spec.perturbations) {
    const std::string pname(to_string(kind));
    ojson cell;
    cell["perturbation"] = pname;
    for (FeatureKind fk : spec.features) {
      const auto [cd, pd] = grid[feature_name(fk)][pname];
      cell[feature_name(fk) + "_cd"] = cd;
      cell[feature_name(fk) + "_pd"] = pd;
      rows.push_back(pname + "," + feature_name(fk) + "," + fmt(cd) + "," + fmt(pd));
    }
    table.push_back(cell);
  }
  s.write_csv("table.csv", "perturbation,feature,cd_accuracy,pd_accuracy", rows);
  ojson results;
  results["grid"] = table;
  results["perturbed_images"] = applied;
  return results;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  Session s(spec);
  if (spec.photo_dir) {
    const IngestReport report = ingest(*spec.photo_dir, {LabelRule::Mode::Single, "photos"});
    s.inputs_digest = sha256_hex(manifest_to_json(report.manifest));
    s.inputs["photo_dir_manifest_sha256"] = s.inputs_digest;
    s.inputs["photo_count"] = report.manifest.entries.size();
  } else {
    PhotoConfig pc;
    pc.size = spec.image_size;
    s.inputs["synthetic_photos"] = {{"size", pc.size},
                                    {"channels", pc.channels},
                                    {"supersample", pc.supersample},
                                    {"max_shapes", pc.max_shapes},
                                    {"noise_sigma", pc.noise_sigma}};
  }

  ojson results;
  switch (spec.recipe) {
    case Recipe::Detect: results = run_detect(s); break;
    case Recipe::Upsampling: results = run_upsampling(s); break;
    case Recipe::Attribute: results = run_attribute(s); break;
    case Recipe::LowData: results = run_lowdata(s); break;
    case Recipe::Converge: results = run_converge(s); break;
    case Recipe::Robustness: results = run_robustness(s); break;
  }

  ojson report;
  report["tool_version"] = FREQLAB_VERSION;
  report["recipe"] = std::string(to_string(spec.recipe));
  report["seed"] = spec.seed;
  report["inputs"] = s.inputs;
  report["config"] = spec_json(spec);
  report["results"] = results;
  ojson artifacts = ojson::array();
  for (const auto& name : s.artifacts) artifacts.push_back({{"file", name}, {"sha256", file_sha256_hex(spec.output_dir / name)}});
  report["artifacts"] = artifacts;
  const std::string text = report.dump(2) + "\n";
  s.write_text("report.json", text);
  return {text, s.artifacts};
}

}  // namespace freqlab
