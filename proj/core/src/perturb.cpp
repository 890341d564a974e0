#include "freqlab/perturb.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "freqlab/codec.hpp"
#include "freqlab/digest.hpp"
#include "freqlab/error.hpp"
#include "freqlab/parallel.hpp"
#include "freqlab/resample.hpp"

namespace freqlab {

std::string_view to_string(PerturbKind kind) {
  switch (kind) {
    case PerturbKind::Blur: return "blur";
    case PerturbKind::Crop: return "crop";
    case PerturbKind::Compress: return "jpeg";
    case PerturbKind::Noise: return "noise";
    case PerturbKind::Combined: return "combined";
  }
  return "unknown";
}

std::optional<PerturbKind> parse_perturb_kind(std::string_view name) {
  if (name == "blur") return PerturbKind::Blur;
  if (name == "crop") return PerturbKind::Crop;
  if (name == "jpeg" || name == "compress" || name == "compression") return PerturbKind::Compress;
  if (name == "noise") return PerturbKind::Noise;
  if (name == "combined") return PerturbKind::Combined;
  return std::nullopt;
}

void PerturbConfig::validate() const {
  require(apply_prob >= 0.0 && apply_prob <= 1.0, ErrorKind::InvalidInput, "apply_prob must lie in [0, 1]");
}

double blur_sigma(int kernel_size) { return 0.3 * ((kernel_size - 1) * 0.5 - 1.0) + 0.8; }

std::vector<double> gaussian_taps(int kernel_size) {
  require(kernel_size >= 1 && kernel_size % 2 == 1, ErrorKind::InvalidInput, "kernel size must be odd");
  const double sigma = blur_sigma(kernel_size);
  const int r = kernel_size / 2;
  std::vector<double> taps(static_cast<std::size_t>(kernel_size));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    taps[static_cast<std::size_t>(i + r)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += taps[static_cast<std::size_t>(i + r)];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

RasterImage blur_with(const RasterImage& img, int kernel_size) {
  auto taps = gaussian_taps(kernel_size);
  RasterImage out = img;
  for (int c = 0; c < img.channels; ++c) store_plane(out, c, convolve_separable(channel_plane(img, c), taps));
  return out;
}

RasterImage blur(const RasterImage& img, Rng& rng, DrawnParams* drawn) {
  std::uniform_int_distribution<int> pick(0, 3);
  const int k = kBlurKernelSizes[pick(rng)];
  if (drawn) (*drawn)["blur_kernel"] = k;
  return blur_with(img, k);
}

RasterImage resize_bilinear(const RasterImage& img, int height, int width) {
  require(height >= 1 && width >= 1 && img.height >= 1 && img.width >= 1, ErrorKind::InvalidInput,
          "resize needs non-empty images");
  RasterImage out(height, width, img.channels);
  const double sy = static_cast<double>(img.height) / height;
  const double sx = static_cast<double>(img.width) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = img.at(y0, x0, c) * (1.0 - wx) + img.at(y0, x1, c) * wx;
        const double bottom = img.at(y1, x0, c) * (1.0 - wx) + img.at(y1, x1, c) * wx;
        out.at(y, x, c) = clamp_round(top * (1.0 - wy) + bottom * wy);
      }
    }
  }
  out.source = img.source;
  out.format = img.format;
  return out;
}

RasterImage crop_resize_with(const RasterImage& img, const CropParams& p) {
  require(img.height >= kMinCropSide && img.width >= kMinCropSide, ErrorKind::InvalidInput,
          "crop needs at least 32 pixels per side");
  require(p.percent_y >= 0.0 && p.percent_y < 100.0 && p.percent_x >= 0.0 && p.percent_x < 100.0,
          ErrorKind::InvalidInput, "crop percentage must lie in [0, 100)");
  const int h = std::max(1, static_cast<int>(std::lround(img.height * (1.0 - p.percent_y / 100.0))));
  const int w = std::max(1, static_cast<int>(std::lround(img.width * (1.0 - p.percent_x / 100.0))));
  const int oy = static_cast<int>(std::floor(std::clamp(p.offset_y, 0.0, 1.0) * (img.height - h) + 1e-9));
  const int ox = static_cast<int>(std::floor(std::clamp(p.offset_x, 0.0, 1.0) * (img.width - w) + 1e-9));
  RasterImage cropped(h, w, img.channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels; ++c) cropped.at(y, x, c) = img.at(y + oy, x + ox, c);
  RasterImage out = resize_bilinear(cropped, img.height, img.width);
  out.source = img.source;
  out.format = img.format;
  return out;
}

RasterImage crop_resize(const RasterImage& img, Rng& rng, DrawnParams* drawn) {
  std::uniform_real_distribution<double> pct(5.0, 20.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CropParams p;
  p.percent_y = pct(rng);
  p.percent_x = pct(rng);
  p.offset_y = unit(rng);
  p.offset_x = unit(rng);
  if (drawn) {
    (*drawn)["crop_percent_y"] = p.percent_y;
    (*drawn)["crop_percent_x"] = p.percent_x;
    (*drawn)["crop_offset_y"] = p.offset_y;
    (*drawn)["crop_offset_x"] = p.offset_x;
  }
  return crop_resize_with(img, p);
}

RasterImage jpeg_compress_with(const RasterImage& img, int quality) {
  require(quality >= 1 && quality <= 100, ErrorKind::InvalidInput, "JPEG quality must lie in [1, 100]");
  RasterImage out = decode_image(encode_jpeg(img, quality));
  out.source = img.source;
  return out;
}

RasterImage jpeg_compress(const RasterImage& img, Rng& rng, DrawnParams* drawn) {
  std::uniform_int_distribution<int> q(10, 75);
  const int quality = q(rng);
  if (drawn) (*drawn)["jpeg_quality"] = quality;
  return jpeg_compress_with(img, quality);
}

RasterImage add_noise_with(const RasterImage& img, double variance, Rng& rng) {
  require(variance >= 0.0 && std::isfinite(variance), ErrorKind::InvalidInput, "noise variance must be non-negative");
  if (variance == 0.0) return img;
  std::normal_distribution<double> noise(0.0, std::sqrt(variance));
  RasterImage out = img;
  for (auto& p : out.pixels) p = clamp_round(p + noise(rng));
  return out;
}

RasterImage add_noise(const RasterImage& img, Rng& rng, DrawnParams* drawn) {
  std::uniform_real_distribution<double> var(5.0, 20.0);
  const double v = var(rng);
  if (drawn) (*drawn)["noise_variance"] = v;
  return add_noise_with(img, v, rng);
}

RasterImage apply_perturbation(const RasterImage& img, PerturbKind kind, Rng& rng, DrawnParams* drawn) {
  switch (kind) {
    case PerturbKind::Blur: return blur(img, rng, drawn);
    case PerturbKind::Crop: return crop_resize(img, rng, drawn);
    case PerturbKind::Compress: return jpeg_compress(img, rng, drawn);
    case PerturbKind::Noise: return add_noise(img, rng, drawn);
    case PerturbKind::Combined: break;
  }
  fail(ErrorKind::InvalidInput, "combined is a dataset-level mode, not a single corruption");
}

long PerturbOutcome::applied_count() const {
  return static_cast<long>(std::count_if(records.begin(), records.end(),
                                         [](const PerturbRecord& r) { return !r.applied_kinds.empty(); }));
}

Rng image_rng(std::uint64_t seed, std::string_view name) { return Rng(seed ^ stable_hash64(name)); }

PerturbOutcome perturb_dataset(const std::vector<NamedImage>& corpus, const PerturbConfig& config) {
  config.validate();
  PerturbOutcome out;
  out.images.resize(corpus.size());
  out.records.resize(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    const NamedImage& item = corpus[i];
    Rng rng = image_rng(config.rng_seed, item.name);
    const PerturbKind kind = config.kind == PerturbKind::Combined ? kCombinedCycle[i % 4] : config.kind;
    std::bernoulli_distribution coin(config.apply_prob);
    PerturbRecord record;
    record.file = item.name;
    NamedImage result{item.name, item.image};
    if (coin(rng)) {
      result.image = apply_perturbation(item.image, kind, rng, &record.params);
      record.applied_kinds.emplace_back(to_string(kind));
    }
    out.images[i] = std::move(result);
    out.records[i] = std::move(record);
  });
  return out;
}

std::string perturb_manifest_json(const PerturbConfig& config, const std::vector<PerturbRecord>& records) {
  nlohmann::ordered_json doc;
  doc["tool_version"] = FREQLAB_VERSION;
  doc["kind"] = std::string(to_string(config.kind));
  doc["apply_prob"] = config.apply_prob;
  doc["seed"] = config.rng_seed;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json e;
    e["file"] = r.file;
    e["applied_kinds"] = r.applied_kinds;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.params) params[k] = v;
    e["drawn_parameters"] = params;
    entries.push_back(std::move(e));
  }
  doc["entries"] = std::move(entries);
  return doc.dump(2) + "\n";
}

}  // namespace freqlab
