#include "commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "freqlab/codec.hpp"
#include "freqlab/dataset.hpp"
#include "freqlab/digest.hpp"
#include "freqlab/error.hpp"
#include "freqlab/experiment.hpp"
#include "freqlab/feature_cache.hpp"
#include "freqlab/model_io.hpp"
#include "freqlab/parallel.hpp"
#include "freqlab/perturb.hpp"
#include "freqlab/photo.hpp"
#include "freqlab/resample.hpp"
#include "freqlab/spectrum.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace freqlab::cli {
namespace {

// ------------------------------------------------------------------ plumbing

CLI::App* add_command(CLI::App& app, const char* name, const char* help, std::shared_ptr<Common> common,
                      bool out_required, bool positional_out = false) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->add_option("--seed", common->seed, "Random seed (default: $FREQLAB_SEED or 0)")->envname("FREQLAB_SEED");
  sub->add_option("--threads", common->threads, "Worker threads; 0 uses all cores, 1 runs serially");
  if (positional_out) return sub;
  auto* out = sub->add_option("--out", common->out, "Output path");
  if (out_required) out->required();
  return sub;
}

void apply_threads(const Common& c) { set_thread_count(c.threads); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

ojson provenance(const Common& c) {
  ojson p;
  p["tool_version"] = FREQLAB_VERSION;
  p["seed"] = c.seed;
  return p;
}

PngText artifact_text(const Common& c, const std::string& source_sha256) {
  return {{"Software", std::string("freqlab ") + FREQLAB_VERSION},
          {"Comment", "seed=" + std::to_string(c.seed) + " source_sha256=" + source_sha256}};
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      fail(ErrorKind::ConfigError, std::string("cannot parse ") + what + " value '" + cell + "'");
    }
  }
  require(!out.empty(), ErrorKind::ConfigError, std::string(what) + " is empty");
  return out;
}

FeatureKind parse_features(const std::string& name) {
  if (name == "dct") return FeatureKind::DctLogStd;
  if (name == "pixel") return FeatureKind::Pixel;
  fail(ErrorKind::ConfigError, "unknown feature kind '" + name + "' (expected dct or pixel)");
}

struct LoadedManifest {
  DatasetManifest manifest;
  fs::path base;
  std::string digest;
};

LoadedManifest open_manifest(const std::string& path) {
  require(!path.empty(), ErrorKind::ConfigError, "--manifest is required");
  LoadedManifest m;
  m.manifest = load_manifest(path);
  m.base = fs::path(path).parent_path();
  m.digest = file_sha256_hex(path);
  return m;
}

Split split_arg(const std::string& name) {
  const auto s = parse_split(name);
  require(s.has_value() && *s != Split::Unassigned, ErrorKind::ConfigError,
          "unknown split '" + name + "' (expected train, val or test)");
  return *s;
}

/// Fits DCT statistics on the training split and stores them next to `anchor`.
std::pair<FeatureStats, fs::path> fit_and_store_stats(const LoadedManifest& m, const fs::path& anchor) {
  const auto spectra = split_spectra(m.manifest, m.base, Split::Train);
  FeatureStats stats = fit_feature_stats(spectra);
  fs::path path = anchor;
  path += ".stats";
  write_file_atomic(path, encode_feature_stats(stats));
  return {std::move(stats), path};
}

LabeledSet labeled(const FeatureSet& set) {
  LabeledSet out{set.features, {}};
  out.y.assign(set.labels.begin(), set.labels.end());
  return out;
}

ImageBatch batch_of(const FeatureSet& set) {
  ImageBatch b(set.count(), 1, set.n1, set.n2);
  std::copy(set.features.data(), set.features.data() + set.features.size(), b.data.begin());
  return b;
}

ojson metrics_json(const Metrics& m, const std::vector<std::string>& class_names) {
  ojson j;
  j["accuracy"] = m.accuracy;
  ojson per = ojson::object();
  for (std::size_t c = 0; c < m.per_class_accuracy.size(); ++c)
    per[c < class_names.size() ? class_names[c] : std::to_string(c)] = m.per_class_accuracy[c];
  j["per_class_accuracy"] = per;
  j["confusion"] = m.confusion;
  return j;
}

TrainConfig train_config(const Common& c, double lr, int batch, int epochs, int patience) {
  TrainConfig cfg;
  cfg.learning_rate = lr;
  cfg.batch_size = batch;
  cfg.max_epochs = epochs;
  cfg.early_stop_patience = patience;
  cfg.rng_seed = c.seed;
  cfg.validate();
  return cfg;
}

std::vector<fs::path> images_under(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorKind::ConfigError, "input directory does not exist: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& item : fs::recursive_directory_iterator(dir))
    if (item.is_regular_file() && is_image_file(item.path())) files.push_back(fs::relative(item.path(), dir));
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });
  return files;
}

fs::path as_png(fs::path rel) { return rel.replace_extension(".png"); }

// ------------------------------------------------------------------ options

struct ModelOptions {
  std::string manifest;
  std::string model = "ridge";
  std::string features = "dct";
  std::string lambda_grid = "1e-1,1e-2,1e-3,1e-4";
  std::string c_grid = "1e-4,1e-3,1e-2,1e-1";
  std::string variance_grid = "0.25,0.5,0.95";
  double lr = 1e-3;
  int batch = 64;
  int epochs = 50;
  int patience = 10;
};

void add_model_options(CLI::App* sub, ModelOptions& o, bool allow_knn) {
  sub->add_option("--manifest", o.manifest, "Dataset manifest with train/val/test splits")->required();
  auto* model = sub->add_option("--model", o.model, "Classifier");
  if (allow_knn)
    model->check(CLI::IsMember({"ridge", "lasso", "svm", "eigenfaces", "knn"}));
  else
    model->check(CLI::IsMember({"ridge", "lasso", "svm", "eigenfaces", "cnn"}));
  sub->add_option("--features", o.features, "Feature kind: dct or pixel")->check(CLI::IsMember({"dct", "pixel"}));
  sub->add_option("--lambda-grid", o.lambda_grid, "Comma-separated regularization strengths (ridge, lasso)");
  sub->add_option("--c-grid", o.c_grid, "Comma-separated SVM C values (svm, eigenfaces)");
  sub->add_option("--variance-grid", o.variance_grid, "Comma-separated retained-variance fractions (eigenfaces)");
  sub->add_option("--lr", o.lr, "Adam learning rate");
  sub->add_option("--batch", o.batch, "Mini-batch size");
  sub->add_option("--epochs", o.epochs, "Maximum training epochs");
  sub->add_option("--patience", o.patience, "Early-stopping patience (evaluations)");
}

struct PreparedData {
  LoadedManifest m;
  FeatureKind kind;
  std::optional<FeatureStats> stats;
  fs::path stats_path;
  FeatureSet train, val;
};

PreparedData prepare(const ModelOptions& o, const fs::path& stats_anchor) {
  PreparedData d{open_manifest(o.manifest), parse_features(o.features), std::nullopt, {}, {}, {}};
  if (d.kind == FeatureKind::DctLogStd) {
    auto [stats, path] = fit_and_store_stats(d.m, stats_anchor);
    d.stats = std::move(stats);
    d.stats_path = path;
  }
  const FeatureStats* sp = d.stats ? &*d.stats : nullptr;
  d.train = build_features(d.m.manifest, d.m.base, Split::Train, d.kind, sp);
  d.val = build_features(d.m.manifest, d.m.base, Split::Val, d.kind, sp);
  require(d.train.count() > 0, ErrorKind::InsufficientData, "the manifest has no training entries");
  return d;
}

ojson base_info(const Common& c, const ModelOptions& o, const PreparedData& d, const fs::path& out) {
  ojson info;
  info["seed"] = c.seed;
  info["model"] = o.model;
  info["features"] = o.features;
  info["manifest_sha256"] = d.m.digest;
  info["class_names"] = d.m.manifest.class_names;
  info["train_count"] = d.train.count();
  info["n1"] = d.train.n1;
  info["n2"] = d.train.n2;
  if (!d.stats_path.empty()) {
    info["stats_file"] = fs::relative(d.stats_path, out.parent_path().empty() ? fs::path(".") : out.parent_path())
                             .generic_string();
    info["stats_sha256"] = file_sha256_hex(d.stats_path);
  }
  return info;
}

}  // namespace

// ------------------------------------------------------------------ ingest

void add_ingest(CLI::App& app) {
  auto common = std::make_shared<Common>();
  auto dir = std::make_shared<std::string>();
  auto rule = std::make_shared<std::string>("auto");
  auto cls = std::make_shared<std::string>("images");
  CLI::App* sub = add_command(app, "ingest", "Enumerate and validate an image directory into a manifest", common, false);
  sub->add_option("dir", *dir, "Image directory")->required();
  sub->add_option("--label-rule", *rule, "auto, subdirs (one class per subdirectory) or single")
      ->check(CLI::IsMember({"auto", "subdirs", "single"}));
  sub->add_option("--class", *cls, "Class name for the single rule");
  sub->callback([=] {
    apply_threads(*common);
    LabelRule lr;
    lr.mode = *rule == "subdirs" ? LabelRule::Mode::Subdirectories
            : *rule == "single"  ? LabelRule::Mode::Single
                                 : LabelRule::Mode::Auto;
    lr.single_class = *cls;
    IngestReport report = ingest(*dir, lr);
    const fs::path out = common->out.empty() ? fs::path(*dir) / "manifest.json" : fs::path(common->out);
    const fs::path out_dir = fs::absolute(out).parent_path();
    for (auto& e : report.manifest.entries)
      e.path = fs::relative(fs::absolute(fs::path(*dir) / e.path), out_dir).generic_string();
    report.manifest.rng_seed = common->seed;
    save_manifest(report.manifest, out);
    std::printf("ingested %zu images in %d classes, skipped %zu undecodable\n", report.manifest.entries.size(),
                report.manifest.num_classes(), report.skipped.size());
    for (const auto& s : report.skipped) std::fprintf(stderr, "skipped: %s\n", s.c_str());
  });
}

// ------------------------------------------------------------------ split

void add_split(CLI::App& app) {
  auto common = std::make_shared<Common>();
  auto manifest = std::make_shared<std::string>();
  auto ratios = std::make_shared<std::string>("0.625,0.0625,0.3125");
  CLI::App* sub = add_command(app, "split", "Assign stratified train/val/test splits", common, true);
  sub->add_option("--manifest", *manifest, "Input manifest")->required();
  sub->add_option("--ratios", *ratios, "Train,val,test fractions summing to 1");
  sub->callback([=] {
    const auto r = parse_list(*ratios, "--ratios");
    require(r.size() == 3, ErrorKind::ConfigError, "--ratios needs exactly three values");
    LoadedManifest m = open_manifest(*manifest);
    DatasetManifest out = split(m.manifest, {r[0], r[1], r[2]}, common->seed);
    const fs::path out_dir = fs::absolute(common->out).parent_path();
    for (auto& e : out.entries)
      e.path = fs::relative(fs::absolute(m.base / e.path), out_dir).generic_string();
    save_manifest(out, common->out);
    for (Split s : {Split::Train, Split::Val, Split::Test}) {
      long total = 0;
      for (long c : out.class_counts(s)) total += c;
      std::printf("%s: %ld\n", std::string(to_string(s)).c_str(), total);
    }
  });
}

// ------------------------------------------------------------------ transform

void add_transform(CLI::App& app) {
  auto common = std::make_shared<Common>();
  auto manifest = std::make_shared<std::string>();
  auto dir = std::make_shared<std::string>();
  auto features = std::make_shared<std::string>("dct");
  auto split_name = std::make_shared<std::string>("all");
  auto stats_path = std::make_shared<std::string>();
  CLI::App* sub = add_command(app, "transform", "Compute a feature cache (log-DCT or pixel)", common, true);
  sub->add_option("--manifest", *manifest, "Dataset manifest");
  sub->add_option("--dir", *dir, "Image directory (ingested on the fly, one class)");
  sub->add_option("--features", *features, "dct or pixel")->check(CLI::IsMember({"dct", "pixel"}));
  sub->add_option("--split", *split_name, "train, val, test or all");
  sub->add_option("--stats", *stats_path, "Statistics file for dct features (fitted on the train split if absent)");
  sub->callback([=] {
    apply_threads(*common);
    require(manifest->empty() != dir->empty(), ErrorKind::ConfigError, "give exactly one of --manifest or --dir");
    LoadedManifest m;
    if (!dir->empty()) {
      require(fs::is_directory(*dir), ErrorKind::ConfigError, "input directory does not exist: " + *dir);
      m.manifest = ingest(*dir, {LabelRule::Mode::Single, "images"}).manifest;
      m.base = *dir;
      m.digest = sha256_hex(manifest_to_json(m.manifest));
    } else {
      m = open_manifest(*manifest);
    }
    Split split = Split::Train;
    if (*split_name == "all") {
      for (auto& e : m.manifest.entries) e.split = Split::Train;
    } else {
      split = split_arg(*split_name);
    }
    const FeatureKind kind = parse_features(*features);
    ojson sidecar = provenance(*common);
    sidecar["manifest_sha256"] = m.digest;
    sidecar["features"] = *features;
    sidecar["split"] = *split_name;
    std::optional<FeatureStats> stats;
    if (kind == FeatureKind::DctLogStd) {
      if (!stats_path->empty()) {
        stats = decode_feature_stats(read_file(*stats_path));
        sidecar["stats_sha256"] = file_sha256_hex(*stats_path);
      } else {
        const auto spectra = split_spectra(m.manifest, m.base, Split::Train);
        stats = fit_feature_stats(spectra);
        fs::path sp = common->out;
        sp += ".stats";
        write_file_atomic(sp, encode_feature_stats(*stats));
        sidecar["stats_sha256"] = file_sha256_hex(sp);
      }
    }
    const std::string digest =
        build_feature_cache(m.manifest, m.base, split, kind, stats ? &*stats : nullptr, common->out);
    sidecar["cache_sha256"] = digest;
    fs::path meta = common->out;
    meta += ".json";
    write_text(meta, sidecar.dump(2) + "\n");
    std::printf("wrote %s\n", common->out.c_str());
  });
}

// ------------------------------------------------------------------ stats

void add_stats(CLI::App& app) {
  auto common = std::make_shared<Common>();
  auto manifest = std::make_shared<std::string>();
  auto split_name = std::make_shared<std::string>("train");
  auto spectra_dir = std::make_shared<std::string>();
  auto order = std::make_shared<std::string>("log-after-mean");
  CLI::App* sub = add_command(app, "stats", "Fit standardization statistics and per-class mean spectra", common, false);
  sub->add_option("--manifest", *manifest, "Dataset manifest")->required();
  sub->add_option("--split", *split_name, "Split to fit on");
  sub->add_option("--spectra", *spectra_dir, "Directory for per-class mean spectra and difference heatmaps");
  sub->add_option("--order", *order, "log-after-mean or mean-after-log")
      ->check(CLI::IsMember({"log-after-mean", "mean-after-log"}));
  sub->callback([=] {
    apply_threads(*common);
    require(!common->out.empty() || !spectra_dir->empty(), ErrorKind::ConfigError,
            "nothing to do: give --out and/or --spectra");
    LoadedManifest m = open_manifest(*manifest);
    const Split split = split_arg(*split_name);
    if (!common->out.empty()) {
      const auto spectra = split_spectra(m.manifest, m.base, split);
      write_file_atomic(common->out, encode_feature_stats(fit_feature_stats(spectra)));
      std::printf("wrote %s\n", common->out.c_str());
    }
    if (spectra_dir->empty()) return;
    const fs::path dir = *spectra_dir;
    fs::create_directories(dir);
    const AveragingOrder ord = *parse_averaging_order(*order);
    const std::string comment = std::string("freqlab ") + FREQLAB_VERSION + " seed=" + std::to_string(common->seed) +
                                " manifest=" + m.digest;
    std::vector<MeanSpectrum> means;
    for (int c = 0; c < m.manifest.num_classes(); ++c) {
      std::vector<const ManifestEntry*> members;
      for (const auto* e : m.manifest.select(split))
        if (e->label == c) members.push_back(e);
      std::size_t next = 0;
      MeanSpectrum ms = mean_spectrum(
          [&]() -> std::optional<GrayImage> {
            if (next >= members.size()) return std::nullopt;
            return to_gray(load_image(m.base / members[next++]->path));
          },
          ord);
      const std::string name = m.manifest.class_names[static_cast<std::size_t>(c)];
      write_matrix_csv(ms.values, dir / ("mean_spectrum_" + name + ".csv"), comment);
      render_heatmap(ms.values, {}, dir / ("mean_spectrum_" + name + ".png"), {{"Comment", comment}});
      means.push_back(std::move(ms));
    }
    for (std::size_t c = 1; c < means.size(); ++c) {
      const std::string name = m.manifest.class_names[0] + "_vs_" + m.manifest.class_names[c];
      const Matrix diff = abs_diff_spectrum(means[0], means[c]);
      write_matrix_csv(diff, dir / ("absdiff_" + name + ".csv"), comment);
      render_heatmap(diff, {}, dir / ("absdiff_" + name + ".png"), {{"Comment", comment}});
    }
    std::printf("wrote spectra for %zu classes to %s\n", means.size(), dir.c_str());
  });
}

// ------------------------------------------------------------------ heatmap

void add_heatmap(CLI::App& app) {
  auto common = std::make_shared<Common>();
  auto input = std::make_shared<std::string>();
  auto model = std::make_shared<std::string>();
  auto clip = std::make_shared<double>(0.0);
  auto palette = std::make_shared<std::string>("viridis");
  auto size = std::make_shared<int>(0);
  CLI::App* sub = add_command(app, "heatmap", "Render a matrix (CSV) or model weights as a PNG heatmap", common, true);
  sub->add_option("--in", *input, "Matrix CSV");
  sub->add_option("--model", *model, "Linear model file; renders |weights| on the frequency grid");
  auto* clip_opt = sub->add_option("--clip", *clip, "Clip values above this before normalizing");
  sub->add_option("--palette", *palette, "viridis or gray")->check(CLI::IsMember({"viridis", "gray"}));
  sub->add_option("--size", *size, "Output height in pixels (0 = one pixel per cell)");
  sub->callback([=] {
    require(input->empty() != model->empty(), ErrorKind::ConfigError, "give exactly one of --in or --model");
    Matrix values;
    std::string source_digest;
    if (!input->empty()) {
      require(fs::exists(*input), ErrorKind::ConfigError, "input not found: " + *input);
      values = read_matrix_csv(*input);
      source_digest = file_sha256_hex(*input);
    } else {
      require(fs::exists(*model), ErrorKind::ConfigError, "model not found: " + *model);
      const ModelFile f = load_model_file(*model);
      const auto info = nlohmann::json::parse(f.info());
      values = weight_heatmap(unpack_linear(f), info.at("n1").get<int>(), info.at("n2").get<int>());
      source_digest = file_sha256_hex(*model);
    }
    HeatmapSpec spec;
    if (clip_opt->count() > 0) spec.clip_max = *clip;
    spec.palette = *parse_palette(*palette);
    spec.output_size = *size;
    render_heatmap(values, spec, common->out,
                   {{"Software", std::string("freqlab ") + FREQLAB_VERSION},
                    {"Comment", "seed=" + std::to_string(common->seed) + " input=" + source_digest}});
    std::printf("wrote %s\n", common->out.c_str());
  });
}

// ------------------------------------------------------------------ photos

void add_photos(CLI::App& app) {
  auto common = std::make_shared<Common>();
  auto count = std::make_shared<int>(100);
  auto size = std::make_shared<int>(128);
  auto channels = std::make_shared<int>(3);
  CLI::App* sub = add_command(app, "photos", "Synthesize procedural stand-in photographs", common, true);
  sub->add_option("--count", *count, "Number of photos")->check(CLI::PositiveNumber);
  sub->add_option("--size", *size, "Side length in pixels")->check(CLI::Range(8, 4096));
  sub->add_option("--channels", *channels, "1 or 3")->check(CLI::IsMember({1, 3}));
  sub->callback([=] {
    apply_threads(*common);
    const fs::path dir = common->out;
    fs::create_directories(dir);
    PhotoConfig cfg;
    cfg.size = *size;
    cfg.channels = *channels;
    const PngText text = {{"Software", std::string("freqlab ") + FREQLAB_VERSION},
                          {"Comment", "seed=" + std::to_string(common->seed)}};
    parallel_for(static_cast<std::size_t>(*count), [&](std::size_t i) {
      char name[32];
      std::snprintf(name, sizeof name, "photo_%05zu.png", i);
      save_png(synthesize_photo(derive_seed(common->seed, "photo:" + std::to_string(i)), cfg), dir / name, text);
    });
    std::printf("wrote %d photos to %s\n", *count, dir.c_str());
  });
}

// ------------------------------------------------------------------ synth

void add_synth(CLI::App& app) {
  auto common = std::make_shared<Common>();
  auto input = std::make_shared<std::string>();
  auto method = std::make_shared<std::string>("nn");
  auto rounds = std::make_shared<int>(2);
  CLI::App* sub = add_command(app, "synth", "Create upsampled fakes (downsample, then upsample) of every image", common, true, true);
  sub->add_option("input,--in", *input, "Input image directory")->required();
  sub->add_option("output,--out", common->out, "Output directory")->required();
  sub->add_option("--kind,--method", *method, "nn, bilinear or binomial")
      ->check(CLI::IsMember({"nn", "bilinear", "binomial"}));
  sub->add_option("--rounds", *rounds, "Number of factor-2 upsampling stages (0 copies the input)")
      ->check(CLI::Range(0, 8));
  sub->callback([=] {
    apply_threads(*common);
    const auto files = images_under(*input);
    const UpsampleMethod m = *parse_upsample_method(*method);
    const fs::path out = common->out;
    require(fs::absolute(out) != fs::absolute(*input), ErrorKind::ConfigError, "--out must differ from --in");
    ojson entries = ojson::array();
    std::vector<std::string> digests(files.size());
    parallel_for(files.size(), [&](std::size_t i) {
      const fs::path src = fs::path(*input) / files[i];
      digests[i] = file_sha256_hex(src);
      const fs::path dst = out / as_png(files[i]);
      fs::create_directories(dst.parent_path());
      save_png(synth_fake(load_image(src), m, *rounds), dst, artifact_text(*common, digests[i]));
    });
    for (std::size_t i = 0; i < files.size(); ++i)
      entries.push_back({{"file", as_png(files[i]).generic_string()}, {"source_sha256", digests[i]}});
    ojson doc = provenance(*common);
    doc["method"] = *method;
    doc["rounds"] = *rounds;
    doc["entries"] = entries;
    write_text(out / "synth.json", doc.dump(2) + "\n");
    std::printf("wrote %zu images to %s\n", files.size(), out.c_str());
  });
}

// ------------------------------------------------------------------ perturb

void add_perturb(CLI::App& app) {
  auto common = std::make_shared<Common>();
  auto input = std::make_shared<std::string>();
  auto kind = std::make_shared<std::string>("combined");
  auto prob = std::make_shared<double>(0.5);
  CLI::App* sub = add_command(app, "perturb", "Apply random blur, crop, JPEG or noise corruptions", common, true, true);
  sub->add_option("input,--in", *input, "Input image directory")->required();
  sub->add_option("output,--out", common->out, "Output directory")->required();
  sub->add_option("--kind", *kind, "blur, crop, jpeg, noise or combined")
      ->check(CLI::IsMember({"blur", "crop", "jpeg", "noise", "combined"}));
  sub->add_option("--prob", *prob, "Probability of corrupting each image")->check(CLI::Range(0.0, 1.0));
  sub->callback([=] {
    apply_threads(*common);
    const auto files = images_under(*input);
    const fs::path out = common->out;
    require(fs::absolute(out) != fs::absolute(*input), ErrorKind::ConfigError, "--out must differ from --in");
    std::vector<NamedImage> corpus(files.size());
    std::vector<std::string> digests(files.size());
    parallel_for(files.size(), [&](std::size_t i) {
      const fs::path src = fs::path(*input) / files[i];
      digests[i] = file_sha256_hex(src);
      corpus[i] = {files[i].generic_string(), load_image(src)};
    });
    const PerturbConfig cfg{*parse_perturb_kind(*kind), *prob, common->seed};
    const PerturbOutcome result = perturb_dataset(corpus, cfg);
    parallel_for(files.size(), [&](std::size_t i) {
      const fs::path dst = out / as_png(files[i]);
      fs::create_directories(dst.parent_path());
      save_png(result.images[i].image, dst, artifact_text(*common, digests[i]));
    });
    write_text(out / "perturb.json", perturb_manifest_json(cfg, result.records));
    std::printf("perturbed %ld of %zu images into %s\n", result.applied_count(), files.size(), out.c_str());
  });
}

// ------------------------------------------------------------------ train

void add_train(CLI::App& app) {
  auto common = std::make_shared<Common>();
  auto o = std::make_shared<ModelOptions>();
  CLI::App* sub = add_command(app, "train", "Train a classifier on a manifest's train split (val for selection)", common, true);
  add_model_options(sub, *o, false);
  sub->callback([=] {
    apply_threads(*common);
    const fs::path out = common->out;
    PreparedData d = prepare(*o, out);
    const TrainConfig cfg = train_config(*common, o->lr, o->batch, o->epochs, o->patience);
    const LabeledSet train = labeled(d.train);
    const LabeledSet val = labeled(d.val);
    ojson info = base_info(*common, *o, d, out);
    auto need_val = [&] {
      require(val.count() > 0, ErrorKind::InsufficientData, "grid search needs a non-empty validation split");
    };

    ModelFile file;
    if (o->model == "ridge" || o->model == "lasso") {
      const auto grid = parse_list(o->lambda_grid, "--lambda-grid");
      const RegKind reg = o->model == "ridge" ? RegKind::L2 : RegKind::L1;
      LinearModel model;
      if (grid.size() == 1 && val.count() == 0) {
        model = train_logistic(train, nullptr, reg, grid[0], cfg).model;
        info["lambda"] = grid[0];
      } else {
        need_val();
        GridSearchResult g = grid_search_lambda(train, val, grid, reg, cfg);
        model = std::move(g.best.model);
        info["lambda"] = g.best_value;
        info["val_accuracy"] = g.points.empty() ? 0.0 : evaluate(model, val).accuracy;
      }
      model.feature_kind = d.kind;
      info["lambda_grid"] = grid;
      file = pack_model(model, info.dump());
      std::printf("chose lambda %g\n", info["lambda"].get<double>());
    } else if (o->model == "svm") {
      need_val();
      const auto grid = parse_list(o->c_grid, "--c-grid");
      GridSearchResult g = grid_search_svm(train, val, grid, cfg);
      g.best.model.feature_kind = d.kind;
      info["C"] = g.best_value;
      info["c_grid"] = grid;
      file = pack_model(g.best.model, info.dump());
      std::printf("chose C %g\n", g.best_value);
    } else if (o->model == "eigenfaces") {
      need_val();
      const auto vgrid = parse_list(o->variance_grid, "--variance-grid");
      const auto cgrid = parse_list(o->c_grid, "--c-grid");
      const EigenfacesSearchResult r = grid_search_eigenfaces(train, val, vgrid, cgrid, cfg);
      info["variance"] = r.best_variance;
      info["C"] = r.best_C;
      info["components"] = r.model.basis.rank();
      file = pack_model(r.model, info.dump());
      std::printf("chose variance %g (%d components), C %g\n", r.best_variance, r.model.basis.rank(), r.best_C);
    } else {
      need_val();
      require(d.train.n1 == d.train.n2, ErrorKind::ShapeError, "the CNN expects square images");
      CnnShape shape;
      shape.input_size = d.train.n1;
      shape.num_classes = d.m.manifest.num_classes();
      CnnTrainConfig ccfg;
      ccfg.optimizer = cfg;
      CnnTrainResult r = train_cnn(CnnModel::initialized(shape, derive_seed(common->seed, "init")), batch_of(d.train),
                                   train.y, batch_of(d.val), val.y, ccfg);
      info["best_step"] = r.best_step;
      info["val_accuracy"] = r.best_val_accuracy;
      file = pack_model(r.model, info.dump());
      std::string hist = "step,train_loss,val_accuracy\n";
      char buf[128];
      for (const auto& h : r.history) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g\n", h.step, h.train_loss, h.val_accuracy);
        hist += buf;
      }
      fs::path hp = out;
      hp += ".history.csv";
      write_text(hp, "# freqlab " FREQLAB_VERSION " seed=" + std::to_string(common->seed) + " manifest=" + d.m.digest +
                         "\n" + hist);
      std::printf("best validation accuracy %.4f at step %ld\n", r.best_val_accuracy, r.best_step);
    }
    save_model_file(file, out);
    std::printf("wrote %s\n", out.c_str());
  });
}

// ------------------------------------------------------------------ eval

void add_eval(CLI::App& app) {
  auto common = std::make_shared<Common>();
  auto manifest = std::make_shared<std::string>();
  auto model_path = std::make_shared<std::string>();
  auto split_name = std::make_shared<std::string>("test");
  CLI::App* sub = add_command(app, "eval", "Evaluate a trained model on a manifest split", common, false);
  sub->add_option("--manifest", *manifest, "Dataset manifest")->required();
  sub->add_option("--model", *model_path, "Model file")->required();
  sub->add_option("--split", *split_name, "Split to evaluate");
  sub->callback([=] {
    apply_threads(*common);
    require(fs::exists(*model_path), ErrorKind::ConfigError, "model not found: " + *model_path);
    const ModelFile file = load_model_file(*model_path);
    const auto info = nlohmann::json::parse(file.info());
    const LoadedManifest m = open_manifest(*manifest);
    const FeatureKind kind = parse_features(info.value("features", std::string("dct")));
    std::optional<FeatureStats> stats;
    if (kind == FeatureKind::DctLogStd) {
      const fs::path sp = fs::path(*model_path).parent_path() / info.at("stats_file").get<std::string>();
      require(fs::exists(sp), ErrorKind::ConfigError, "statistics file not found: " + sp.string());
      require(file_sha256_hex(sp) == info.at("stats_sha256").get<std::string>(), ErrorKind::ConfigError,
              "statistics file does not match the model: " + sp.string());
      stats = decode_feature_stats(read_file(sp));
    }
    const Split split = split_arg(*split_name);
    const FeatureSet set = build_features(m.manifest, m.base, split, kind, stats ? &*stats : nullptr);
    require(set.count() > 0, ErrorKind::InsufficientData, "the split is empty");
    std::vector<int> truth(set.labels.begin(), set.labels.end());
    std::vector<int> pred;
    switch (file.kind) {
      case ModelKind::Logistic:
      case ModelKind::Svm: pred = unpack_linear(file).predict(set.features); break;
      case ModelKind::Eigenfaces: pred = unpack_eigenfaces(file).predict(set.features); break;
      case ModelKind::Cnn: pred = predict(unpack_cnn(file), batch_of(set)); break;
    }
    const Metrics metrics = evaluate_predictions(pred, truth, m.manifest.num_classes());
    ojson doc = provenance(*common);
    doc["model_sha256"] = file_sha256_hex(*model_path);
    doc["manifest_sha256"] = m.digest;
    doc["split"] = *split_name;
    doc["count"] = set.count();
    doc["metrics"] = metrics_json(metrics, m.manifest.class_names);
    if (!common->out.empty()) write_text(common->out, doc.dump(2) + "\n");
    std::printf("accuracy %.4f on %d samples\n", metrics.accuracy, set.count());
  });
}

// ------------------------------------------------------------------ gridsearch

void add_gridsearch(CLI::App& app) {
  auto common = std::make_shared<Common>();
  auto o = std::make_shared<ModelOptions>();
  CLI::App* sub = add_command(app, "gridsearch", "Score every grid point on the validation split", common, true);
  add_model_options(sub, *o, true);
  sub->callback([=] {
    apply_threads(*common);
    const fs::path out = common->out;
    PreparedData d = prepare(*o, out);
    const TrainConfig cfg = train_config(*common, o->lr, o->batch, o->epochs, o->patience);
    const LabeledSet train = labeled(d.train);
    const LabeledSet val = labeled(d.val);
    require(val.count() > 0, ErrorKind::InsufficientData, "grid search needs a non-empty validation split");
    const FeatureStats* sp = d.stats ? &*d.stats : nullptr;
    const LabeledSet test = labeled(build_features(d.m.manifest, d.m.base, Split::Test, d.kind, sp));
    const int classes = d.m.manifest.num_classes();

    ojson doc = provenance(*common);
    doc["manifest_sha256"] = d.m.digest;
    doc["model"] = o->model;
    doc["features"] = o->features;
    ojson points = ojson::array();
    std::vector<int> test_pred;
    if (o->model == "ridge" || o->model == "lasso") {
      const GridSearchResult g = grid_search_lambda(train, val, parse_list(o->lambda_grid, "--lambda-grid"),
                                                    o->model == "ridge" ? RegKind::L2 : RegKind::L1, cfg);
      for (const auto& p : g.points) points.push_back({{"lambda", p.value}, {"val_accuracy", p.val_accuracy}});
      doc["best"] = {{"lambda", g.best_value}};
      if (test.count() > 0) test_pred = g.best.model.predict(test.X);
    } else if (o->model == "svm") {
      const GridSearchResult g = grid_search_svm(train, val, parse_list(o->c_grid, "--c-grid"), cfg);
      for (const auto& p : g.points) points.push_back({{"C", p.value}, {"val_accuracy", p.val_accuracy}});
      doc["best"] = {{"C", g.best_value}};
      if (test.count() > 0) test_pred = g.best.model.predict(test.X);
    } else if (o->model == "eigenfaces") {
      const EigenfacesSearchResult r = grid_search_eigenfaces(
          train, val, parse_list(o->variance_grid, "--variance-grid"), parse_list(o->c_grid, "--c-grid"), cfg);
      for (const auto& p : r.points)
        points.push_back({{"variance", p.variance}, {"C", p.C}, {"components", p.components},
                          {"val_accuracy", p.val_accuracy}});
      doc["best"] = {{"variance", r.best_variance}, {"C", r.best_C}};
      if (test.count() > 0) test_pred = r.model.predict(test.X);
    } else {
      const KnnSearchResult r = grid_search_knn(train, val);
      for (const auto& p : r.points) points.push_back({{"k", static_cast<int>(p.value)}, {"val_accuracy", p.val_accuracy}});
      doc["best"] = {{"k", r.best_k}};
      if (test.count() > 0) test_pred = knn_classify(train, test.X, r.best_k);
    }
    doc["points"] = points;
    if (!test_pred.empty()) {
      doc["test"] = metrics_json(evaluate_predictions(test_pred, test.y, classes), d.m.manifest.class_names);
      std::printf("test accuracy %.4f\n", doc["test"]["accuracy"].get<double>());
    }
    write_text(out, doc.dump(2) + "\n");
    std::printf("wrote %s\n", out.c_str());
  });
}

// ------------------------------------------------------------------ weights

void add_weights(CLI::App& app) {
  auto common = std::make_shared<Common>();
  auto model_path = std::make_shared<std::string>();
  auto png = std::make_shared<std::string>();
  auto clip = std::make_shared<double>(0.0);
  CLI::App* sub = add_command(app, "weights", "Export |weights| of a linear model on the frequency grid", common, true);
  sub->add_option("--model", *model_path, "Linear model file")->required();
  sub->add_option("--png", *png, "Also render a heatmap PNG here");
  auto* clip_opt = sub->add_option("--clip", *clip, "Heatmap clip value");
  sub->callback([=] {
    require(fs::exists(*model_path), ErrorKind::ConfigError, "model not found: " + *model_path);
    const ModelFile f = load_model_file(*model_path);
    const auto info = nlohmann::json::parse(f.info());
    const LinearModel model = unpack_linear(f);
    const Matrix w = weight_heatmap(model, info.at("n1").get<int>(), info.at("n2").get<int>());
    const std::string comment = std::string("freqlab ") + FREQLAB_VERSION + " seed=" + std::to_string(common->seed) +
                                " model=" + file_sha256_hex(*model_path);
    write_matrix_csv(w, common->out, comment);
    const long zeros = (model.weights.array() == 0.0).count();
    std::printf("%ld of %ld weights are exactly zero\n", zeros, static_cast<long>(model.weights.size()));
    if (!png->empty()) {
      HeatmapSpec spec;
      if (clip_opt->count() > 0) spec.clip_max = *clip;
      render_heatmap(w, spec, *png, {{"Comment", comment}});
    }
  });
}

// ------------------------------------------------------------------ run

void add_run(CLI::App& app) {
  auto common = std::make_shared<Common>();
  auto recipe = std::make_shared<std::string>();
  auto photos = std::make_shared<std::string>();
  auto spec = std::make_shared<ExperimentSpec>();
  auto method = std::make_shared<std::string>("nn");
  auto features = std::make_shared<std::vector<std::string>>(std::vector<std::string>{"pixel", "dct"});
  auto lambda_grid = std::make_shared<std::string>("1e-1,1e-2,1e-3,1e-4");
  auto quiet = std::make_shared<bool>(false);
  CLI::App* sub = add_command(app, "run", "Run a named experiment recipe", common, true);
  sub->add_option("recipe", *recipe, "detect, upsampling, attribute, lowdata, converge or robustness")
      ->required()
      ->check(CLI::IsMember({"detect", "upsampling", "attribute", "lowdata", "converge", "robustness"}));
  sub->add_option("--photos", *photos, "Directory of source photos (synthesized when omitted)");
  sub->add_option("--size", spec->image_size, "Image side length");
  sub->add_option("--per-class", spec->per_class, "Images per class");
  sub->add_option("--rounds", spec->rounds, "Upsampling stages of the fake classes");
  sub->add_option("--jpeg-quality", spec->jpeg_quality, "Quality of the JPEG class");
  sub->add_option("--method", *method, "Upsampling of the detect recipe's fakes")
      ->check(CLI::IsMember({"nn", "bilinear", "binomial"}));
  sub->add_option("--features", *features, "Feature kinds to compare")->check(CLI::IsMember({"pixel", "dct"}));
  sub->add_option("--lambda-grid", *lambda_grid, "Comma-separated regularization strengths");
  sub->add_option("--repeats", spec->repeats, "Independent repeats (upsampling, converge)");
  sub->add_option("--lasso-runs", spec->lasso_runs, "LASSO locality runs (upsampling)");
  sub->add_option("--lasso-per-class", spec->lasso_per_class, "Images per class in each LASSO run");
  sub->add_option("--clip", spec->heatmap_clip, "Clip value of LASSO weight heatmaps");
  sub->add_option("--fraction", spec->lowdata_fraction, "Training fraction kept by the lowdata recipe");
  sub->add_option("--prob", spec->apply_prob, "Perturbation probability (robustness)");
  sub->add_option("--epochs", spec->cnn_train.optimizer.max_epochs, "CNN epoch limit");
  sub->add_option("--patience", spec->cnn_train.optimizer.early_stop_patience, "CNN early-stopping patience");
  sub->add_option("--eval-every", spec->converge_eval_every, "Steps between validation checks (converge)");
  sub->add_option("--max-steps", spec->converge_max_steps, "Step budget per run (converge)");
  sub->add_flag("--quiet", *quiet, "Suppress progress messages");
  sub->callback([=] {
    apply_threads(*common);
    ExperimentSpec s = *spec;
    s.recipe = *parse_recipe(*recipe);
    s.seed = common->seed;
    s.output_dir = common->out;
    if (!photos->empty()) s.photo_dir = fs::path(*photos);
    s.detect_method = *parse_upsample_method(*method);
    s.features.clear();
    for (const auto& f : *features) s.features.push_back(parse_features(f));
    s.lambda_grid = parse_list(*lambda_grid, "--lambda-grid");
    if (!*quiet) s.log = [](std::string_view msg) { std::fprintf(stderr, "[freqlab] %.*s\n", static_cast<int>(msg.size()), msg.data()); };
    const ExperimentOutcome outcome = run_experiment(s);
    std::printf("wrote %zu artifacts and report.json to %s\n", outcome.artifacts.size(), common->out.c_str());
  });
}

}  // namespace freqlab::cli
